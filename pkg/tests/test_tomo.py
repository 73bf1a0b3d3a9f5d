import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anyonsim.errors import DimensionMismatchError, InvalidInputError
from anyonsim.hilbert import (
    I2, X, Y, Z, DensityMatrix, HilbertSpace, Operator, PureState, fidelity, tensor_product,
    trace_distance,
)
from anyonsim.toric import ghz_state
from anyonsim.tomo import (
    CountTable, MeasurementSetting, ProbabilityTable, TomographyData, WitnessReport, ghz_witness,
    joint_readout, pauli_expectations, qst_settings, reconstruct_linear, reconstruct_mle,
    sample_counts, simulate_tomography,
)

Q4 = HilbertSpace.qubits(4)
PSI_G = ghz_state(4)


def random_rho(seed, mix=0.0, rank=16):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(16, rank)) + 1j * rng.normal(size=(16, rank))
    w = a @ a.conj().T
    w /= np.trace(w).real
    return DensityMatrix(Q4, (1 - mix) * w + mix * np.eye(16) / 16)


class TestSettingsAndReadout:
    def test_settings(self):
        s = qst_settings()
        assert len(s) == 81
        assert sum(str(x) == "IIII" for x in s) == 1
        assert len({str(x) for x in s}) == 81

    def test_labels_validated(self):
        with pytest.raises(InvalidInputError):
            MeasurementSetting.parse("IXZI")
        assert str(MeasurementSetting.parse("XYIX")) == "XYIX"

    def test_readout_examples(self):
        p = joint_readout(PureState.basis("0000"), MeasurementSetting.parse("IIII")).p
        assert p[0] == 1 and p[1:].sum() == 0
        p = joint_readout(PSI_G, MeasurementSetting.parse("IIII")).p
        assert p[0] == pytest.approx(0.5) and p[15] == pytest.approx(0.5)
        p = joint_readout(DensityMatrix.maximally_mixed(Q4), MeasurementSetting.parse("XYXI")).p
        assert np.allclose(p, 1 / 16)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            joint_readout(PureState.basis("000"), MeasurementSetting.parse("IIII"))

    @given(st.integers(0, 10_000), st.sampled_from([str(s) for s in qst_settings()]))
    @settings(max_examples=40)
    def test_readout_normalized(self, seed, setting):
        p = joint_readout(random_rho(seed, rank=3), MeasurementSetting.parse(setting)).p
        assert abs(p.sum() - 1) < 1e-9
        assert p.min() >= 0

    @pytest.mark.parametrize("label,pauli,sign", [("I", Z, 1), ("X", Y, 1), ("Y", X, -1)])
    def test_single_qubit_axis(self, label, pauli, sign):
        # <sigma> = p0 - p1 after the pre-rotation
        rng = np.random.default_rng(1)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = PureState.from_vector(v, (2,), normalize=True)
        p = joint_readout(psi, MeasurementSetting.parse(label)).p
        want = np.real(np.vdot(psi.amplitudes, pauli @ psi.amplitudes))
        assert p[0] - p[1] == pytest.approx(sign * want, abs=1e-12)

    def test_confusion_matrix(self):
        a = np.array([[0.98, 0.05], [0.02, 0.95]])
        p = joint_readout(PureState.basis("0"), MeasurementSetting.parse("I"), confusion=[a]).p
        assert np.allclose(p, [0.98, 0.02])


class TestSampling:
    def test_point_mass(self):
        c = sample_counts(ProbabilityTable(np.eye(16)[5]), 1000, seed=1)
        assert c.counts[5] == 1000 and c.shots == 1000

    def test_deterministic(self):
        t = joint_readout(PSI_G, MeasurementSetting.parse("XXXX"))
        assert np.array_equal(sample_counts(t, 3000, 9).counts, sample_counts(t, 3000, 9).counts)

    def test_zero_shots(self):
        with pytest.raises(InvalidInputError):
            sample_counts(ProbabilityTable(np.full(16, 1 / 16)), 0)

    def test_binomial_bounds(self):
        p = joint_readout(random_rho(4), MeasurementSetting.parse("XYIX")).p
        n = 100_000
        f = sample_counts(ProbabilityTable(p), n, seed=2).counts / n
        sigma = np.sqrt(p * (1 - p) / n)
        assert np.all(np.abs(f - p) <= 5 * sigma + 1e-12)

    def test_table_invariants(self):
        with pytest.raises(InvalidInputError):
            ProbabilityTable(np.full(16, 0.1))
        with pytest.raises(InvalidInputError):
            CountTable(np.array([1, -1]))
        with pytest.raises(InvalidInputError):
            CountTable(np.zeros(16)).frequencies()


class TestLinearInversion:
    def test_ghz_exact(self):
        r = reconstruct_linear(simulate_tomography(PSI_G))
        assert fidelity(r.rho, PSI_G) == pytest.approx(1, abs=1e-9)
        assert np.abs(r.rho.matrix.imag).max() < 1e-9
        assert r.settings_used == 81

    def test_maximally_mixed(self):
        r = reconstruct_linear(simulate_tomography(DensityMatrix.maximally_mixed(Q4)))
        assert np.allclose(r.rho.matrix, np.eye(16) / 16, atol=1e-12)

    @given(st.integers(0, 2**20))
    @settings(max_examples=10, deadline=None)
    def test_round_trip(self, seed):
        truth = random_rho(seed)
        data = simulate_tomography(truth)
        r = reconstruct_linear(data)
        assert np.abs(r.rho.matrix - truth.matrix).max() < 1e-9
        letters = [I2, X, Y, Z]
        ev = pauli_expectations(data)
        for k in np.random.default_rng(seed).integers(0, 256, size=12):
            word = [letters[(k >> (2 * (3 - j))) & 3] for j in range(4)]
            op = tensor_product([Operator(HilbertSpace.qubits(1), w) for w in word])
            assert ev[k] == pytest.approx(np.real(np.trace(op.matrix @ truth.matrix)), abs=1e-9)

    def test_finite_shots(self):
        r = reconstruct_linear(simulate_tomography(PSI_G, shots=10_000, seed=3))
        assert fidelity(r.rho, PSI_G) >= 0.98
        assert r.psd_distance >= 0

    def test_missing_settings(self):
        data = simulate_tomography(PSI_G)
        partial = TomographyData({k: v for k, v in data.tables.items() if k != "XYXY"})
        with pytest.raises(InvalidInputError):
            reconstruct_linear(partial)


class TestMle:
    def test_recovers_psd_state_from_exact_data(self):
        truth = random_rho(11, mix=0.5)
        r = reconstruct_mle(simulate_tomography(truth), max_iters=20_000, tol=1e-13)
        assert r.converged
        assert trace_distance(r.rho, truth) < 1e-4

    def test_monotone_likelihood_and_psd(self):
        r = reconstruct_mle(simulate_tomography(random_rho(5, rank=2), shots=2000, seed=1))
        assert np.all(np.diff(r.likelihood_trace) >= 0)
        assert np.linalg.eigvalsh(r.rho.matrix).min() >= -1e-15  # rebuild round-off only
        assert r.rho.trace() == pytest.approx(1, abs=1e-10)

    def test_not_worse_than_linear(self):
        noisy = DensityMatrix(Q4, 0.8 * PSI_G.to_density().matrix + 0.2 * np.eye(16) / 16)
        data = simulate_tomography(noisy, shots=3000, seed=8)
        f_lin = fidelity(reconstruct_linear(data).rho, PSI_G)
        f_mle = fidelity(reconstruct_mle(data).rho, PSI_G)
        assert f_mle >= f_lin - 0.02

    def test_ghz_finite_shots(self):
        r = reconstruct_mle(simulate_tomography(PSI_G, shots=10_000, seed=4))
        assert fidelity(r.rho, PSI_G) >= 0.98

    def test_non_convergence_flag(self):
        r = reconstruct_mle(simulate_tomography(PSI_G, shots=500, seed=1), max_iters=3)
        assert not r.converged and r.iterations == 3


class TestJson:
    def test_round_trip_counts(self):
        data = simulate_tomography(PSI_G, shots=100, seed=0)
        doc = json.loads(data.to_json())
        assert len(doc) == 81 and set(doc[0]) == {"setting", "counts"}
        back = TomographyData.from_json(data.to_json())
        assert np.array_equal(back.counts_matrix(), data.counts_matrix())

    def test_duplicate_and_malformed(self):
        row = {"setting": "IIII", "counts": [1] + [0] * 15}
        with pytest.raises(InvalidInputError):
            TomographyData.from_json(json.dumps([row, row]))
        with pytest.raises(InvalidInputError):
            TomographyData.from_json("[{\"setting\": \"IIII\"}]")


class TestWitness:
    @pytest.mark.parametrize("f,s,margin", [(0.574, 0.019, 3.9), (0.516, 0.010, 1.6)])
    def test_published_margins(self, f, s, margin):
        w = WitnessReport.from_values(f, s)
        assert round(w.sigma_margin, 1) == margin
        assert w.passes

    def test_boundary_is_strict(self):
        w = WitnessReport.from_values(0.5, 0.01)
        assert not w.passes and w.sigma_margin == 0

    def test_no_counts_means_zero_error(self):
        w = ghz_witness(PSI_G.to_density(), PSI_G)
        assert w.std_error == 0 and w.passes
        assert w.to_dict()["sigma_margin"] is None

    def test_bootstrap_reproducible(self):
        noisy = DensityMatrix(Q4, 0.6 * PSI_G.to_density().matrix + 0.4 * np.eye(16) / 16)
        data = simulate_tomography(noisy, shots=3000, seed=2)
        rho = reconstruct_linear(data).rho
        a = ghz_witness(rho, PSI_G, data, seed=5, resamples=50)
        b = ghz_witness(rho, PSI_G, data, seed=5, resamples=50)
        assert a == b
        assert 0.001 < a.std_error < 0.02
