"""Toric-code stabilizers, anyon creation and loop operators.

Qubit indices are 0-based here; the minimal cell's Q1..Q4 are qubits 0..3.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from typing import Literal, Sequence

import numpy as np

from .errors import (
    IndeterminateSyndromeError,
    InvalidInputError,
    NonCyclicEvolutionError,
)
from .hilbert import (
    TOL_BUILD,
    HilbertSpace,
    Operator,
    PureState,
    X,
    Z,
    embed,
    expectation,
)

MAX_DENSE_QUBITS = 10
SYNDROME_TOL = 1e-6


@dataclass(frozen=True)
class Lattice:
    kind: Literal["minimal", "torus"]
    size: int
    qubit_count: int
    stars: tuple[tuple[int, ...], ...]
    boundaries: tuple[tuple[int, ...], ...]

    @property
    def n_vertices(self) -> int:
        return len(self.stars)

    @property
    def n_faces(self) -> int:
        return len(self.boundaries)

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace.qubits(self.qubit_count)

    def faces_touching(self, qubit: int) -> list[int]:
        return [f for f, b in enumerate(self.boundaries) if qubit in b]

    def vertices_touching(self, qubit: int) -> list[int]:
        return [v for v, s in enumerate(self.stars) if qubit in s]


def build_lattice(kind: str = "minimal", L: int | None = None) -> Lattice:
    """Minimal four-qubit cell or an L x L periodic lattice with qubits on edges.

    The minimal cell has one vertex touching all four qubits and four
    incomplete faces on the links 1-2, 2-3, 3-4 and 4-1.
    """
    if kind in ("minimal", "MinimalCell"):
        return Lattice("minimal", 1, 4, ((0, 1, 2, 3),), ((0, 1), (1, 2), (2, 3), (3, 0)))
    if kind not in ("torus", "Torus"):
        raise InvalidInputError(f"unknown lattice kind {kind!r}")
    if L is None or L < 2:
        raise InvalidInputError(f"torus size must be >= 2, got {L}")

    def h(x, y):  # edge from vertex (x, y) to (x+1, y)
        return 2 * ((y % L) * L + (x % L))

    def v(x, y):  # edge from vertex (x, y) to (x, y+1)
        return 2 * ((y % L) * L + (x % L)) + 1

    stars, faces = [], []
    for y in range(L):
        for x in range(L):
            stars.append((h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)))
            faces.append((h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)))
    return Lattice("torus", L, 2 * L * L, tuple(stars), tuple(faces))


def _require_dense(lattice: Lattice):
    if lattice.qubit_count > MAX_DENSE_QUBITS:
        raise InvalidInputError(
            f"{lattice.qubit_count} qubits exceed the dense limit of {MAX_DENSE_QUBITS}"
        )


def pauli_string(space: HilbertSpace, qubits: Sequence[int], pauli: np.ndarray) -> Operator:
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise InvalidInputError(f"repeated qubit in {qubits}")
    n = space.n_factors
    if any(not 0 <= q < n for q in qubits):
        raise InvalidInputError(f"qubit index out of range in {qubits}")
    # Pauli strings are diagonal (Z) or permutations (X); a per-qubit kron is exact.
    factors = [pauli if k in qubits else np.eye(2, dtype=complex) for k in range(n)]
    return Operator(space, reduce(np.kron, factors), is_hermitian=True, is_unitary=True)


@dataclass(frozen=True)
class StabilizerSet:
    vertex_ops: tuple[Operator, ...]
    face_ops: tuple[Operator, ...]

    @property
    def all(self) -> tuple[Operator, ...]:
        return self.vertex_ops + self.face_ops


def build_stabilizers(lattice: Lattice) -> StabilizerSet:
    _require_dense(lattice)
    space = lattice.space
    return StabilizerSet(
        tuple(pauli_string(space, s, X) for s in lattice.stars),
        tuple(pauli_string(space, b, Z) for b in lattice.boundaries),
    )


def hamiltonian(lattice: Lattice) -> Operator:
    """``H = -sum_v A_v - sum_f B_f``."""
    stabs = build_stabilizers(lattice)
    m = -sum(op.matrix for op in stabs.all)
    return Operator(lattice.space, m, is_hermitian=True)


def ghz_state(n: int = 4, sign: int = +1) -> PureState:
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = 1.0
    vec[-1] = sign
    return PureState(HilbertSpace.qubits(n), vec / np.sqrt(2))


def ground_state(lattice: Lattice) -> PureState:
    """A stabilizer ground state: the GHZ state for the minimal cell,
    the projected all-zeros state for the torus."""
    if lattice.kind == "minimal":
        return ghz_state(4, +1)
    _require_dense(lattice)
    stabs = build_stabilizers(lattice)
    d = lattice.space.total_dim
    vec = np.zeros(d, dtype=complex)
    vec[0] = 1.0
    for op in stabs.all:
        vec = 0.5 * (vec + op.matrix @ vec)
    return PureState(lattice.space, vec, normalize=True)


def excited_state(lattice: Lattice | None = None) -> PureState:
    """Minimal-cell state with an e particle on the vertex."""
    return ghz_state(4, -1)


def ground_space_dimension(lattice: Lattice, tol: float = 1e-8) -> int:
    """Degeneracy of the lowest eigenvalue by dense diagonalization."""
    w = np.linalg.eigvalsh(hamiltonian(lattice).matrix)
    return int(np.sum(w < w[0] + tol))


def apply_anyon_op(state: PureState, qubit: int, kind: str) -> PureState:
    """``Z_j`` (creates/annihilates e particles) or ``X_j`` (m particles)."""
    pauli = {"Z": Z, "e": Z, "X": X, "m": X}.get(kind)
    if pauli is None:
        raise InvalidInputError(f"unknown anyon operation {kind!r}")
    n = state.space.n_factors
    if not 0 <= qubit < n:
        raise InvalidInputError(f"qubit {qubit} out of range for {n} qubits")
    op = embed(pauli, [qubit], state.space)
    return PureState(state.space, op.matrix @ state.amplitudes)


@dataclass(frozen=True)
class Syndrome:
    vertices: tuple[int, ...]
    faces: tuple[int, ...]

    @property
    def e_particles(self) -> list[int]:
        return [v for v, s in enumerate(self.vertices) if s == -1]

    @property
    def m_particles(self) -> list[int]:
        return [f for f, s in enumerate(self.faces) if s == -1]

    def to_json(self) -> str:
        return json.dumps({"vertices": list(self.vertices), "faces": list(self.faces)})


def _eigen_sign(value: float) -> int:
    if abs(value - 1) <= SYNDROME_TOL:
        return 1
    if abs(value + 1) <= SYNDROME_TOL:
        return -1
    raise IndeterminateSyndromeError(f"stabilizer expectation {value:.6g} is not +-1")


def measure_syndrome(state: PureState, stabilizers: StabilizerSet) -> Syndrome:
    return Syndrome(
        tuple(_eigen_sign(expectation(op, state)) for op in stabilizers.vertex_ops),
        tuple(_eigen_sign(expectation(op, state)) for op in stabilizers.face_ops),
    )


def loop_operator(lattice: Lattice, path: Sequence[int], kind: str = "X") -> Operator:
    """Product of X (moves an m particle) or Z (moves an e particle) along ``path``."""
    _require_dense(lattice)
    pauli = {"X": X, "Z": Z}.get(kind)
    if pauli is None:
        raise InvalidInputError(f"loop kind must be 'X' or 'Z', got {kind!r}")
    path = list(path)
    if len(set(path)) != len(path):
        raise InvalidInputError(f"repeated qubit in loop path {path}")
    ops = [pauli_string(lattice.space, [q], pauli).matrix for q in path]
    m = reduce(lambda a, b: b @ a, ops)
    return Operator(lattice.space, m, is_hermitian=True, is_unitary=True)


def braid_phase(state: PureState, pre_ops: Sequence[Operator], loop: Operator,
                post_ops: Sequence[Operator]) -> complex:
    """Unit-modulus phase ``<in|out>`` picked up by ``post . loop . pre``.

    The operators in ``pre_ops`` are applied in list order, then ``loop``,
    then ``post_ops`` in list order.
    """
    vec = state.amplitudes
    for op in list(pre_ops) + [loop] + list(post_ops):
        vec = op.matrix @ vec
    overlap = np.vdot(state.amplitudes, vec)
    if abs(abs(overlap) - 1) > SYNDROME_TOL:
        raise NonCyclicEvolutionError(f"|<in|out>| = {abs(overlap):.6g}, expected 1")
    return complex(overlap / abs(overlap))


def phase_angle(phase: complex) -> float:
    """Argument in (-pi, pi], with pi preferred at the branch cut."""
    ang = float(np.angle(phase))
    if ang <= -np.pi + TOL_BUILD:
        ang = np.pi
    return ang
