import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anyonsim.errors import IndeterminateSyndromeError, InvalidInputError, NonCyclicEvolutionError
from anyonsim.hilbert import X, Z, PureState, embed, expectation
from anyonsim.toric import (
    apply_anyon_op, braid_phase, build_lattice, build_stabilizers, excited_state, ghz_state,
    ground_space_dimension, ground_state, hamiltonian, loop_operator, measure_syndrome,
    pauli_string, phase_angle,
)

CELL = build_lattice("minimal")
STABS = build_stabilizers(CELL)
PSI_G = ground_state(CELL)
PSI_E = excited_state()


class TestLattice:
    def test_minimal_cell(self):
        assert (CELL.qubit_count, CELL.n_vertices, CELL.n_faces) == (4, 1, 4)
        assert CELL.stars == ((0, 1, 2, 3),)
        assert [set(b) for b in CELL.boundaries] == [{0, 1}, {1, 2}, {2, 3}, {3, 0}]

    @pytest.mark.parametrize("L", [2, 3, 4])
    def test_torus_counts(self, L):
        lat = build_lattice("torus", L)
        assert (lat.qubit_count, lat.n_vertices, lat.n_faces) == (2 * L * L, L * L, L * L)

    @pytest.mark.parametrize("L", [3, 4])
    def test_torus_incidence(self, L):
        lat = build_lattice("torus", L)
        assert all(len(set(s)) == 4 for s in lat.stars)
        assert all(len(set(b)) == 4 for b in lat.boundaries)
        for q in range(lat.qubit_count):
            assert len(lat.vertices_touching(q)) == 2
            assert len(lat.faces_touching(q)) == 2

    @pytest.mark.parametrize("L", [0, 1, None])
    def test_small_torus_rejected(self, L):
        with pytest.raises(InvalidInputError):
            build_lattice("torus", L)

    def test_dense_limit(self):
        with pytest.raises(InvalidInputError):
            build_stabilizers(build_lattice("torus", 3))


class TestStabilizers:
    def test_minimal_cell_matches_pauli_strings(self):
        a = pauli_string(CELL.space, [0, 1, 2, 3], X)
        assert np.array_equal(STABS.vertex_ops[0].matrix, a.matrix)
        for f, pair in enumerate([(0, 1), (1, 2), (2, 3), (3, 0)]):
            assert np.array_equal(STABS.face_ops[f].matrix, pauli_string(CELL.space, pair, Z).matrix)

    @pytest.mark.parametrize("lattice", [CELL, build_lattice("torus", 2)], ids=["cell", "torus2"])
    def test_commute_exactly_and_square_to_identity(self, lattice):
        ops = build_stabilizers(lattice).all
        eye = np.eye(lattice.space.total_dim)
        for a in ops:
            assert np.array_equal(a.matrix @ a.matrix, eye)
        for a, b in itertools.combinations(ops, 2):
            assert np.array_equal(a.matrix @ b.matrix, b.matrix @ a.matrix)

    def test_torus2_products_are_identity(self):
        lat = build_lattice("torus", 2)
        s = build_stabilizers(lat)
        eye = np.eye(256)
        assert np.array_equal(np.linalg.multi_dot([op.matrix for op in s.vertex_ops]), eye)
        assert np.array_equal(np.linalg.multi_dot([op.matrix for op in s.face_ops]), eye)

    @pytest.mark.parametrize("q", range(4))
    def test_single_qubit_anticommutation(self, q):
        zq, xq = embed(Z, [q], CELL.space).matrix, embed(X, [q], CELL.space).matrix
        a = STABS.vertex_ops[0].matrix
        assert np.array_equal(zq @ a, -a @ zq)
        for f, b in enumerate(STABS.face_ops):
            bm = b.matrix
            sign = -1 if f in CELL.faces_touching(q) else 1
            assert np.array_equal(xq @ bm, sign * bm @ xq)
        assert len(CELL.faces_touching(q)) == 2


class TestStates:
    def test_ground_state_is_ghz(self):
        want = PureState.from_vector(np.eye(16)[0] + np.eye(16)[15], (2,) * 4, normalize=True)
        assert np.array_equal(PSI_G.amplitudes, want.amplitudes)

    def test_energies(self):
        h = hamiltonian(CELL)
        assert expectation(h, PSI_G) == pytest.approx(-5, abs=1e-12)
        assert expectation(h, PSI_E) == pytest.approx(-3, abs=1e-12)

    def test_hamiltonian_commutes_with_stabilizers(self):
        h = hamiltonian(CELL).matrix
        for s in STABS.all:
            assert np.allclose(h @ s.matrix, s.matrix @ h, atol=1e-12)

    def test_torus2_ground_space(self):
        lat = build_lattice("torus", 2)
        assert ground_space_dimension(lat) == 4
        g = ground_state(lat)
        s = measure_syndrome(g, build_stabilizers(lat))
        assert set(s.vertices) == {1} and set(s.faces) == {1}
        w = np.linalg.eigvalsh(hamiltonian(lat).matrix)
        assert expectation(hamiltonian(lat), g) == pytest.approx(w[0], abs=1e-8)

    def test_cell_ground_is_lowest_manifold(self):
        w = np.linalg.eigvalsh(hamiltonian(CELL).matrix)
        assert w[0] == pytest.approx(-5, abs=1e-8)
        assert expectation(hamiltonian(CELL), PSI_G) == pytest.approx(w[0], abs=1e-8)


class TestAnyonOps:
    def test_z_creates_e_pair(self):
        out = apply_anyon_op(PSI_G, 0, "Z")
        assert np.allclose(out.amplitudes, PSI_E.amplitudes, atol=1e-15)

    @given(st.integers(0, 3), st.sampled_from(["Z", "X"]))
    def test_involution(self, q, kind):
        twice = apply_anyon_op(apply_anyon_op(PSI_G, q, kind), q, kind)
        assert np.max(np.abs(twice.amplitudes - PSI_G.amplitudes)) < 1e-10

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            apply_anyon_op(PSI_G, 4, "Z")

    def test_x1_flips_adjacent_faces(self):
        s = measure_syndrome(apply_anyon_op(PSI_G, 0, "X"), STABS)
        assert s.vertices == (1,)
        assert s.faces == (-1, 1, 1, -1)


class TestSyndrome:
    def test_ground(self):
        s = measure_syndrome(PSI_G, STABS)
        assert s.vertices == (1,) and s.faces == (1, 1, 1, 1)
        assert s.e_particles == [] and s.m_particles == []

    def test_excited(self):
        s = measure_syndrome(PSI_E, STABS)
        assert s.vertices == (-1,) and s.faces == (1, 1, 1, 1)
        assert s.e_particles == [0]

    def test_x2_on_ground(self):
        s = measure_syndrome(apply_anyon_op(PSI_G, 1, "X"), STABS)
        assert s.faces == (-1, -1, 1, 1)

    def test_superposition_is_indeterminate(self):
        mix = PureState.from_vector(PSI_G.amplitudes + PSI_E.amplitudes * 0.5, (2,) * 4, normalize=True)
        with pytest.raises(IndeterminateSyndromeError):
            measure_syndrome(mix, STABS)


class TestLoopsAndBraiding:
    loop = loop_operator(CELL, [0, 1, 2, 3], "X")
    z1 = embed(Z, [0], CELL.space)

    def test_loop_is_hermitian_unitary(self):
        m = self.loop.matrix
        assert np.array_equal(m, m.conj().T)
        assert np.array_equal(m @ m, np.eye(16))

    def test_loop_fixes_ground_and_negates_excited(self):
        assert np.allclose(self.loop.matrix @ PSI_G.amplitudes, PSI_G.amplitudes)
        assert np.allclose(self.loop.matrix @ PSI_E.amplitudes, -PSI_E.amplitudes)

    def test_sandwiched_loop(self):
        out = self.z1.matrix @ self.loop.matrix @ self.z1.matrix @ PSI_G.amplitudes
        assert np.allclose(out, -PSI_G.amplitudes)

    def test_repeated_path_rejected(self):
        with pytest.raises(InvalidInputError):
            loop_operator(CELL, [0, 1, 1], "X")

    def test_braid_phases(self):
        assert phase_angle(braid_phase(PSI_G, [], self.loop, [])) == pytest.approx(0, abs=1e-12)
        assert phase_angle(braid_phase(PSI_G, [self.z1], self.loop, [self.z1])) == pytest.approx(np.pi)
        two = braid_phase(PSI_E, [self.loop], self.loop, [])
        assert np.angle(two) == pytest.approx(0, abs=1e-12)

    def test_non_cyclic(self):
        with pytest.raises(NonCyclicEvolutionError):
            braid_phase(PSI_G, [self.z1], self.loop, [])

    def test_phase_angle_branch(self):
        assert phase_angle(-1 + 0j) == np.pi
        assert phase_angle(np.exp(-1j * np.pi)) == np.pi


def test_ghz_sign():
    assert np.allclose(ghz_state(4, -1).amplitudes[[0, 15]], [2**-0.5, -(2**-0.5)])
