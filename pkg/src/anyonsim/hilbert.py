"""Dense complex linear algebra over small composite Hilbert spaces.

Basis order: factor 0 is the leftmost label of a ket string, so ``|i1 i2 i3 i4>``
has ``i1`` on qubit Q1 and ``np.kron`` composes factors left to right.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError

# Tolerances: construction checks, propagation checks, PSD slack.
TOL_BUILD = 1e-10
TOL_PROP = 1e-9
TOL_PSD = 1e-8

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
# |0> is the ground state; sigma lowers |1> -> |0>.
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HilbertSpace:
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise InvalidInputError("a Hilbert space needs at least one factor")
        if any(d < 2 for d in dims):
            raise InvalidInputError(f"every factor dimension must be >= 2, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "HilbertSpace":
        return cls((2,) * n)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    def __add__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.factor_dims + other.factor_dims)

    def subspace(self, factors: Sequence[int]) -> "HilbertSpace":
        return HilbertSpace(tuple(self.factor_dims[k] for k in factors))


def _check_square(matrix: np.ndarray, space: HilbertSpace):
    d = space.total_dim
    if matrix.shape != (d, d):
        raise DimensionMismatchError(
            f"matrix shape {matrix.shape} does not match space dimension {d}"
        )


def is_hermitian(matrix: np.ndarray, tol: float = TOL_BUILD) -> bool:
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tol)


def is_unitary(matrix: np.ndarray, tol: float = TOL_BUILD) -> bool:
    eye = np.eye(matrix.shape[0])
    return bool(np.max(np.abs(matrix.conj().T @ matrix - eye), initial=0.0) <= tol)


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpace
    matrix: np.ndarray
    is_hermitian: bool = False
    is_unitary: bool = False

    def __post_init__(self):
        m = _frozen(self.matrix)
        object.__setattr__(self, "matrix", m)
        _check_square(m, self.space)
        if self.is_hermitian and not is_hermitian(m):
            raise InvalidInputError("operator flagged Hermitian is not Hermitian")
        if self.is_unitary and not is_unitary(m):
            raise InvalidInputError("operator flagged unitary is not unitary")

    @classmethod
    def from_matrix(cls, matrix, dims: Sequence[int] | None = None, **flags) -> "Operator":
        matrix = np.asarray(matrix, dtype=complex)
        if dims is None:
            dims = (matrix.shape[0],)
        return cls(HilbertSpace(tuple(dims)), matrix, **flags)

    @classmethod
    def identity(cls, space: HilbertSpace) -> "Operator":
        return cls(space, np.eye(space.total_dim), is_hermitian=True, is_unitary=True)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T,
                        is_hermitian=self.is_hermitian, is_unitary=self.is_unitary)

    def _same_space(self, other: "Operator"):
        if other.space != self.space:
            raise DimensionMismatchError(f"{self.space} vs {other.space}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._same_space(other)
            return Operator(self.space, self.matrix @ other.matrix,
                            is_unitary=self.is_unitary and other.is_unitary)
        if isinstance(other, PureState):
            if other.space != self.space:
                raise DimensionMismatchError(f"{self.space} vs {other.space}")
            return PureState(self.space, self.matrix @ other.amplitudes, normalize=True)
        return NotImplemented

    def __add__(self, other: "Operator") -> "Operator":
        self._same_space(other)
        return Operator(self.space, self.matrix + other.matrix,
                        is_hermitian=self.is_hermitian and other.is_hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        self._same_space(other)
        return Operator(self.space, self.matrix - other.matrix,
                        is_hermitian=self.is_hermitian and other.is_hermitian)

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix, is_hermitian=self.is_hermitian,
                        is_unitary=self.is_unitary)

    def __mul__(self, scalar) -> "Operator":
        scalar = complex(scalar)
        herm = self.is_hermitian and scalar.imag == 0
        unit = self.is_unitary and abs(abs(scalar) - 1) < TOL_BUILD
        return Operator(self.space, scalar * self.matrix, is_hermitian=herm, is_unitary=unit)

    __rmul__ = __mul__

    def commutes_with(self, other: "Operator", tol: float = 0.0) -> bool:
        self._same_space(other)
        a, b = self.matrix, other.matrix
        return bool(np.max(np.abs(a @ b - b @ a)) <= tol)

    def anticommutes_with(self, other: "Operator", tol: float = 0.0) -> bool:
        self._same_space(other)
        a, b = self.matrix, other.matrix
        return bool(np.max(np.abs(a @ b + b @ a)) <= tol)


@dataclass(frozen=True, eq=False)
class PureState:
    space: HilbertSpace
    amplitudes: np.ndarray
    normalize: bool = field(default=False, repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.space.total_dim,):
            raise DimensionMismatchError(
                f"{amps.shape[0]} amplitudes for a space of dimension {self.space.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if self.normalize:
            if norm == 0:
                raise InvalidInputError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > TOL_BUILD:
            raise InvalidInputError(f"state norm {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "normalize", False)

    @classmethod
    def from_vector(cls, vec, dims: Sequence[int], normalize: bool = False) -> "PureState":
        return cls(HilbertSpace(tuple(dims)), vec, normalize=normalize)

    @classmethod
    def basis(cls, label: str | Sequence[int], dims: Sequence[int] | None = None) -> "PureState":
        """Computational basis ket; ``basis("0110")`` is a four-qubit state."""
        digits = [int(c) for c in label]
        if dims is None:
            dims = (2,) * len(digits)
        space = HilbertSpace(tuple(dims))
        if len(digits) != space.n_factors or any(not 0 <= k < d for k, d in zip(digits, dims)):
            raise InvalidInputError(f"label {label!r} does not fit dims {tuple(dims)}")
        idx = int(np.ravel_multi_index(digits, space.factor_dims))
        vec = np.zeros(space.total_dim, dtype=complex)
        vec[idx] = 1.0
        return cls(space, vec)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def inner(self, other: "PureState") -> complex:
        if other.space != self.space:
            raise DimensionMismatchError(f"{self.space} vs {other.space}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __add__(self, other: "PureState") -> "PureState":
        """Normalized superposition (the sum is renormalized)."""
        return PureState(self.space, self.amplitudes + other.amplitudes, normalize=True)

    def __sub__(self, other: "PureState") -> "PureState":
        return PureState(self.space, self.amplitudes - other.amplitudes, normalize=True)

    def __mul__(self, phase) -> "PureState":
        return PureState(self.space, complex(phase) * self.amplitudes, normalize=True)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        _check_square(m, self.space)
        if self.check:
            if not is_hermitian(m):
                raise InvalidInputError("density matrix is not Hermitian")
            tr = np.trace(m).real
            if abs(tr - 1.0) > TOL_BUILD:
                raise InvalidInputError(f"density matrix trace {tr!r} differs from 1")
            lo = np.linalg.eigvalsh(m)[0]
            if lo < -TOL_PSD:
                raise InvalidInputError(f"density matrix has eigenvalue {lo:.3e} < 0")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "check", True)

    @classmethod
    def maximally_mixed(cls, space: HilbertSpace) -> "DensityMatrix":
        d = space.total_dim
        return cls(space, np.eye(d) / d)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


StateLike = Union[PureState, DensityMatrix]


def as_density(state: StateLike) -> DensityMatrix:
    return state.to_density() if isinstance(state, PureState) else state


def tensor_product(ops: Iterable[Operator]) -> Operator:
    """Kronecker product of operators in the given factor order."""
    ops = list(ops)
    if not ops:
        raise InvalidInputError("tensor_product needs at least one operand")
    for op in ops:
        if op.matrix.size == 0:
            raise InvalidInputError("dimension-zero operand")
    space = reduce(lambda a, b: a + b, (op.space for op in ops))
    matrix = reduce(np.kron, (op.matrix for op in ops))
    return Operator(space, matrix,
                    is_hermitian=all(op.is_hermitian for op in ops),
                    is_unitary=all(op.is_unitary for op in ops))


def tensor_states(states: Iterable[PureState]) -> PureState:
    states = list(states)
    space = reduce(lambda a, b: a + b, (s.space for s in states))
    return PureState(space, reduce(np.kron, (s.amplitudes for s in states)))


def embed(op: Operator | np.ndarray, target_factors: Sequence[int], space: HilbertSpace) -> Operator:
    """Act with ``op`` on ``target_factors`` (in the order given), identity elsewhere."""
    matrix = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    targets = [int(k) for k in target_factors]
    n = space.n_factors
    if len(set(targets)) != len(targets):
        raise InvalidInputError(f"target factors must be distinct, got {targets}")
    if any(not 0 <= k < n for k in targets):
        raise InvalidInputError(f"target factor out of range for {n} factors: {targets}")
    tdims = [space.factor_dims[k] for k in targets]
    if matrix.shape != (int(np.prod(tdims)),) * 2:
        raise DimensionMismatchError(
            f"operator of shape {matrix.shape} cannot act on factors with dims {tdims}"
        )
    herm = op.is_hermitian if isinstance(op, Operator) else is_hermitian(matrix)
    unit = op.is_unitary if isinstance(op, Operator) else is_unitary(matrix)
    if targets == list(range(targets[0], targets[0] + len(targets))):
        left = int(np.prod(space.factor_dims[: targets[0]]))
        right = int(np.prod(space.factor_dims[targets[-1] + 1:]))
        full = np.kron(np.kron(np.eye(left), matrix), np.eye(right))
        return Operator(space, full, is_hermitian=herm, is_unitary=unit)
    # General case: apply the operator to the reshaped tensor of basis columns.
    dims = space.factor_dims
    d = space.total_dim
    rest = [k for k in range(n) if k not in targets]
    perm = targets + rest
    basis = np.eye(d, dtype=complex).reshape(dims + (d,))
    moved = np.transpose(basis, perm + [n]).reshape(int(np.prod(tdims)), -1)
    acted = (matrix @ moved).reshape([dims[k] for k in perm] + [d])
    inv = np.argsort(perm).tolist() + [n]
    full = np.transpose(acted, inv).reshape(d, d)
    return Operator(space, full, is_hermitian=herm, is_unitary=unit)


def _pair(op: Operator, state: StateLike):
    if op.space != state.space:
        raise DimensionMismatchError(f"operator on {op.space}, state on {state.space}")


def expectation(op: Operator, state: StateLike) -> float:
    """Real expectation value of a Hermitian operator."""
    _pair(op, state)
    if not (op.is_hermitian or is_hermitian(op.matrix)):
        raise InvalidInputError("expectation requires a Hermitian operator")
    if isinstance(state, PureState):
        val = np.vdot(state.amplitudes, op.matrix @ state.amplitudes)
    else:
        val = np.einsum("ij,ji->", op.matrix, state.matrix)
    if abs(val.imag) > TOL_PROP:
        raise InvalidInputError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def fidelity(rho: StateLike, target: PureState) -> float:
    """Overlap ``<target|rho|target>`` clipped to [0, 1]."""
    if rho.space != target.space:
        raise DimensionMismatchError(f"{rho.space} vs {target.space}")
    if isinstance(rho, PureState):
        val = abs(np.vdot(target.amplitudes, rho.amplitudes)) ** 2
    else:
        val = np.vdot(target.amplitudes, rho.matrix @ target.amplitudes).real
    return float(min(1.0, max(0.0, val)))


def trace_distance(a: StateLike, b: StateLike) -> float:
    ma, mb = as_density(a).matrix, as_density(b).matrix
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(ma - mb))))


def partial_trace_matrix(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    dims = tuple(dims)
    n = len(dims)
    keep = sorted(int(k) for k in keep)
    drop = [k for k in range(n) if k not in keep]
    t = matrix.reshape(dims + dims)
    perm = keep + drop + [n + k for k in keep] + [n + k for k in drop]
    dk = int(np.prod([dims[k] for k in keep]))
    dd = int(np.prod([dims[k] for k in drop])) if drop else 1
    t = np.transpose(t, perm).reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def partial_trace(rho: StateLike, keep_factors: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep_factors`` (returned in ascending factor order)."""
    rho = as_density(rho)
    keep = list(keep_factors)
    if not keep:
        raise InvalidInputError("keep_factors must not be empty")
    n = rho.space.n_factors
    if len(set(keep)) != len(keep) or any(not 0 <= k < n for k in keep):
        raise InvalidInputError(f"invalid factor indices {keep} for {n} factors")
    if sorted(keep) == list(range(n)):
        return rho
    reduced = partial_trace_matrix(rho.matrix, rho.space.factor_dims, keep)
    return DensityMatrix(rho.space.subspace(sorted(keep)), reduced)


def propagator(H: Operator, t: float) -> Operator:
    """``exp(-i H t)`` by eigendecomposition of the Hermitian generator."""
    if not (H.is_hermitian or is_hermitian(H.matrix)):
        raise InvalidInputError("generator must be Hermitian")
    w, v = np.linalg.eigh(H.matrix)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return Operator(H.space, u)


def matrix_exponential_apply(H: Operator, t: float, state: StateLike) -> StateLike:
    """Apply ``exp(-i H t)`` to a pure state or density matrix."""
    _pair(H, state)
    u = propagator(H, t).matrix
    if isinstance(state, PureState):
        out = u @ state.amplitudes
        norm = np.linalg.norm(out)
        if abs(norm - 1) > TOL_PROP:
            raise AssertionError(f"propagation broke normalization: {norm}")
        return PureState(state.space, out / norm)
    m = u @ state.matrix @ u.conj().T
    return DensityMatrix(state.space, 0.5 * (m + m.conj().T))


def project_to_density(matrix: np.ndarray, space: HilbertSpace) -> DensityMatrix:
    """Hermitize, clip small negative eigenvalues and renormalize."""
    m = 0.5 * (matrix + matrix.conj().T)
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    m = (v * w) @ v.conj().T
    return DensityMatrix(space, m / np.trace(m).real)


# --- JSON matrix format: {"dims": [...], "re": [...], "im": [...]} (row-major, flat) ---

def to_json_dict(state: StateLike) -> dict:
    data = state.amplitudes if isinstance(state, PureState) else state.matrix
    flat = np.asarray(data).reshape(-1)
    return {
        "dims": list(state.space.factor_dims),
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }


def from_json_dict(doc: dict) -> StateLike:
    try:
        dims = tuple(int(d) for d in doc["dims"])
        re = np.asarray(doc["re"], dtype=float).reshape(-1)
        im = np.asarray(doc["im"], dtype=float).reshape(-1)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed state document: {exc}") from exc
    space = HilbertSpace(dims)
    d = space.total_dim
    vals = re + 1j * im
    if vals.size == d:
        return PureState(space, vals)
    if vals.size == d * d:
        return DensityMatrix(space, vals.reshape(d, d))
    raise DimensionMismatchError(f"{vals.size} entries do not fit dims {dims}")


def dumps(state: StateLike) -> str:
    return json.dumps(to_json_dict(state), indent=1)


def loads(text: str) -> StateLike:
    return from_json_dict(json.loads(text))
