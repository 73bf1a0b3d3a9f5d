import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anyonsim.dynamics import FrameTracker, gate_level_backend
from anyonsim.dynamics.gates import Rotation
from anyonsim.errors import AnyonsimError, InvalidInputError, PhysicsInvariantError
from anyonsim.hilbert import DensityMatrix, HilbertSpace, PureState, expectation, fidelity
from anyonsim.interference import (
    BRAID_SET, SCENARIOS, BraidScenario, CorrelationScan, GateBackend, PulseBackend,
    braiding_phase_difference, correlation_operator, default_gammas, fit_cosine, fit_frequency,
    parity_from_counts, phase_distance, run_scan,
)
from anyonsim.tomo import CountTable, MeasurementSetting, joint_readout, sample_counts
from anyonsim.toric import ghz_state

Q4 = HilbertSpace.qubits(4)
PSI_G, PSI_E = ghz_state(4, +1), ghz_state(4, -1)
YYYY = np.kron(np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]])),
               np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]])))


def ghz_phi(phi):
    v = np.zeros(16, complex)
    v[0], v[15] = 1, np.exp(1j * phi)
    return PureState.from_vector(v, (2,) * 4, normalize=True)


def synthetic(phi, contrast=1.0, sigma=0.0, points=21, seed=0):
    g = default_gammas(points)
    rng = np.random.default_rng(seed)
    v = contrast * np.cos(4 * g + phi) + sigma * rng.normal(size=g.size)
    return CorrelationScan(g, v, np.full(g.size, sigma), None, "synthetic", "none")


class TestCorrelationOperator:
    def test_special_angles(self):
        x4 = np.kron(np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]), np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]))
        assert np.allclose(correlation_operator(0.0).matrix, YYYY)
        assert np.allclose(correlation_operator(np.pi / 2).matrix, x4)

    @given(st.floats(0, np.pi), st.floats(-np.pi, np.pi))
    @settings(max_examples=20)
    def test_closed_form(self, gamma, phi):
        val = expectation(correlation_operator(gamma), ghz_phi(phi))
        assert val == pytest.approx(np.cos(4 * gamma + phi), abs=1e-9)

    @given(st.floats(-10, 10))
    @settings(max_examples=10)
    def test_squares_to_identity(self, gamma):
        m = correlation_operator(gamma).matrix
        assert np.allclose(m @ m, np.eye(16), atol=1e-12)
        assert np.allclose(np.abs(np.linalg.eigvalsh(m)), 1)

    def test_frame_conjugation(self):
        frame = FrameTracker((0.0,) * 4).with_axes([0.3, -1.0, 2.0, 0.5])
        v = frame.primed_unitary()
        rho_lab = DensityMatrix(Q4, v @ ghz_phi(0.7).to_density().matrix @ v.conj().T)
        got = expectation(correlation_operator(0.4, frame), rho_lab)
        assert got == pytest.approx(np.cos(1.6 + 0.7), abs=1e-12)


class TestParity:
    def test_even_odd_uniform(self):
        assert parity_from_counts(CountTable(np.eye(16, dtype=int)[0] * 50)).value == 1
        assert parity_from_counts(CountTable(np.eye(16, dtype=int)[1] * 50)).value == -1
        est = parity_from_counts(CountTable(np.full(16, 200)))
        assert abs(est.value) <= est.std_error + 1e-12

    def test_zero_shots(self):
        with pytest.raises(InvalidInputError):
            parity_from_counts(CountTable(np.zeros(16, dtype=int)))

    def test_self_consistency(self):
        rng = np.random.default_rng(77)
        setting = MeasurementSetting(("X",) * 4)
        misses = 0
        for _ in range(50):
            a = rng.normal(size=(16, 3)) + 1j * rng.normal(size=(16, 3))
            rho = a @ a.conj().T
            rho = DensityMatrix(Q4, rho / np.trace(rho).real)
            gamma = rng.uniform(0, np.pi)
            u = Rotation("z", gamma, (0, 1, 2, 3)).matrix(4)
            rotated = DensityMatrix(Q4, u @ rho.matrix @ u.conj().T)
            est = parity_from_counts(sample_counts(joint_readout(rotated, setting), 3000, rng))
            want = expectation(correlation_operator(gamma), rho)
            misses += abs(est.value - want) > 3 * est.std_error
        assert misses == 0


class TestScenarios:
    def test_allowed_ops(self):
        with pytest.raises(InvalidInputError):
            BraidScenario("bad", ("Y'",))

    def test_half_filled_intermediate_states(self):
        after_half = gate_level_backend(["GHZ", "Z'/2"])
        want1 = PureState.from_vector(PSI_G.amplitudes - 1j * PSI_E.amplitudes, (2,) * 4, normalize=True)
        assert fidelity(after_half.to_density(), want1) == pytest.approx(1, abs=1e-9)
        after_loop = gate_level_backend(["GHZ", "Z'/2", "C_loop"])
        want2 = PureState.from_vector(PSI_G.amplitudes + 1j * PSI_E.amplitudes, (2,) * 4, normalize=True)
        assert fidelity(after_loop.to_density(), want2) == pytest.approx(1, abs=1e-9)

    def test_loop_orderings_identical(self):
        gammas = default_gammas()
        base = None
        for order in itertools.permutations(range(4)):
            ops = ["Z'/2", *[("X'", q) for q in order], "-Z'/2"]
            backend = GateBackend()
            psi = backend.prepare(ops)
            vals = [joint_readout(gate_level_backend([Rotation("z", g, (0, 1, 2, 3))], psi),
                                  MeasurementSetting(("X",) * 4)).p for g in gammas]
            vals = np.array(vals)
            if base is None:
                base = vals
            assert np.array_equal(vals, base)


class TestGateScans:
    def test_empty_vertex_is_cosine(self):
        scan = run_scan("empty_vertex", shots=None)
        assert np.allclose(scan.values, np.cos(4 * scan.gammas), atol=1e-12)
        assert np.all(scan.errors == 0)

    @pytest.mark.parametrize("name,phi", [("empty_vertex", 0.0), ("e_vertex", 0.0), ("half_filled", np.pi),
                                          ("ground", 0.0), ("e_state", np.pi)])
    def test_fitted_phases(self, name, phi):
        fit = fit_cosine(run_scan(name, shots=None))
        assert phase_distance(fit.phi, phi) < 1e-6
        assert fit.contrast == pytest.approx(1, abs=1e-9)

    def test_braid_set(self):
        assert BRAID_SET == ("empty_vertex", "e_vertex", "half_filled")
        assert set(BRAID_SET) <= set(SCENARIOS)

    def test_shots_deterministic(self):
        a = run_scan("half_filled", shots=3000, seed=4)
        b = run_scan("half_filled", shots=3000, seed=4)
        assert np.array_equal(a.values, b.values)
        assert np.all(np.abs(a.values) <= 1 + 3 * a.errors)

    def test_bad_gammas(self):
        with pytest.raises(InvalidInputError):
            run_scan("ground", gammas=[])
        with pytest.raises(InvalidInputError):
            CorrelationScan(np.array([0.2, 0.1]), np.zeros(2), np.zeros(2), None, "x", "gate")

    def test_error_carries_gamma_index(self):
        class Broken(GateBackend):
            def readout(self, prepared, gamma):
                if gamma > 1.0:
                    raise PhysicsInvariantError("trace drift")
                return super().readout(prepared, gamma)

        with pytest.raises(AnyonsimError) as info:
            run_scan("ground", shots=None, backend=Broken())
        k = int(np.argmax(default_gammas() > 1.0))
        assert info.value.gamma_index == k
        assert f"gamma index {k}" in str(info.value)

    def test_csv(self):
        text = run_scan("ground", gammas=[0.0, 0.5], shots=10, seed=1).to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "gamma_rad,parity,parity_stderr,shots"
        assert len(lines) == 3 and lines[1].endswith(",10")


class TestFits:
    def test_phase_recovery(self):
        fit = fit_cosine(synthetic(0.3, sigma=0.01, seed=3))
        assert fit.phi == pytest.approx(0.3, abs=0.02)
        assert 0 < fit.phi_error < 0.02

    def test_contrast_recovery(self):
        fit = fit_cosine(synthetic(-1.2, contrast=0.5, sigma=0.01, seed=4))
        assert fit.contrast == pytest.approx(0.5, abs=0.02)

    def test_branch_prefers_pi(self):
        fit = fit_cosine(synthetic(np.pi))
        assert fit.phi == pytest.approx(np.pi)

    def test_floated_frequency(self):
        k, _ = fit_frequency(run_scan("ground", shots=None))
        assert k == pytest.approx(4.0, abs=0.05)

    def test_degenerate_and_short(self):
        g = np.arange(8) * np.pi / 2 / 8
        short = CorrelationScan(g[:5], np.ones(5), np.zeros(5), None, "x", "none")
        with pytest.raises(InvalidInputError):
            fit_cosine(short)
        same = CorrelationScan(np.array([0, np.pi / 2, np.pi]), np.ones(3), np.zeros(3), None, "x", "none")
        with pytest.raises(InvalidInputError):
            fit_cosine(same)

    def test_fit_json_fields(self):
        d = fit_cosine(synthetic(0.1)).to_dict()
        assert set(d) == {"phi_rad", "phi_err", "contrast", "offset", "residual_rms"}


class TestPhaseDifference:
    def test_gate_examples(self):
        empty, e_v, half = (run_scan(s, shots=None) for s in BRAID_SET)
        assert abs(braiding_phase_difference(empty, half).delta_phi) == pytest.approx(np.pi, abs=1e-9)
        assert braiding_phase_difference(empty, empty).delta_phi == pytest.approx(0, abs=1e-12)
        assert braiding_phase_difference(empty, e_v).delta_phi == pytest.approx(0, abs=1e-9)

    def test_errors_in_quadrature(self):
        a = fit_cosine(synthetic(0.0, sigma=0.02, seed=1))
        b = fit_cosine(synthetic(np.pi, sigma=0.02, seed=2))
        d = braiding_phase_difference(a, b)
        assert d.error == pytest.approx(np.hypot(a.phi_error, b.phi_error))


@pytest.fixture(scope="module")
def backend(deep_params):
    return PulseBackend(deep_params)


class TestPulseBackend:
    """Deep-dispersive device: pulse scans must agree with the gate oracle."""

    @pytest.mark.parametrize("name,phi", [("empty_vertex", 0.0), ("half_filled", np.pi), ("e_state", np.pi)])
    def test_phases(self, backend, name, phi):
        scan = run_scan(name, gammas=default_gammas(11), shots=None, backend=backend)
        fit = fit_cosine(scan)
        assert phase_distance(fit.phi, phi) < 0.05
        assert fit.contrast > 0.95
        assert scan.backend == "pulse"

    def test_primed_state_matches_gate(self, backend):
        for ops in (SCENARIOS["e_state"].ops, SCENARIOS["half_filled"].ops):
            rho = backend.primed_state(ops)
            assert fidelity(rho, GateBackend().prepare(ops)) >= 0.99
