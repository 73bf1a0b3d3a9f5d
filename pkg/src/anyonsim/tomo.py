"""Joint readout, shot sampling, state tomography and the GHZ witness.

Readout is in the computational basis of whatever coordinates the state is
expressed in; callers working in a rotated (primed) frame pass the state in
those coordinates. A setting is one pre-rotation label per qubit:

    I   nothing, measures  Z
    X   X/2 pulse,  measures +Y
    Y   Y/2 pulse,  measures -X
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Mapping

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError
from .hilbert import (I2, PAULIS, TOL_PROP, DensityMatrix, HilbertSpace, PureState, X, Y, Z,
                      as_density, fidelity, project_to_density, trace_distance)

LABELS = "IXY"
BOOTSTRAP_RESAMPLES = 200
DEFAULT_SHOTS = 3000


def _rot(axis: np.ndarray, angle: float) -> np.ndarray:
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * axis


PRE_ROTATIONS = {"I": I2, "X": _rot(X, np.pi / 2), "Y": _rot(Y, np.pi / 2)}
# label -> (Pauli letter measured, sign); checked against U^dag Z U at import
MEASURED = {"I": ("Z", 1), "X": ("Y", 1), "Y": ("X", -1)}
for _lab, (_p, _s) in MEASURED.items():
    _u = PRE_ROTATIONS[_lab]
    assert np.allclose(_u.conj().T @ Z @ _u, _s * PAULIS[_p])


@dataclass(frozen=True)
class MeasurementSetting:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels or any(l not in LABELS for l in labels):
            raise InvalidInputError(f"setting labels must be drawn from {LABELS!r}, got {self.labels!r}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def parse(cls, text: str) -> "MeasurementSetting":
        return cls(tuple(text))

    def __str__(self) -> str:
        return "".join(self.labels)

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def unitary(self) -> np.ndarray:
        return reduce(np.kron, [PRE_ROTATIONS[l] for l in self.labels])


@dataclass(frozen=True)
class ProbabilityTable:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).copy()
        n = int(round(math.log2(p.size))) if p.size else 0
        if p.ndim != 1 or p.size < 2 or 2**n != p.size:
            raise InvalidInputError(f"probability table needs 2^n entries, got shape {p.shape}")
        if np.any(p < -TOL_PROP) or np.any(p > 1 + TOL_PROP):
            raise InvalidInputError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1) > TOL_PROP:
            raise InvalidInputError(f"probabilities sum to {p.sum()!r}")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.p.size)))

    def frequencies(self) -> np.ndarray:
        return self.p


@dataclass(frozen=True)
class CountTable:
    counts: np.ndarray
    shots: int = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1 or c.size < 2 or 2 ** int(round(math.log2(c.size))) != c.size:
            raise InvalidInputError(f"count table needs 2^n entries, got shape {c.shape}")
        if not np.all(np.equal(np.mod(c, 1), 0)) or np.any(c < 0):
            raise InvalidInputError("counts must be non-negative integers")
        c = c.astype(np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "shots", int(c.sum()))

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.counts.size)))

    def frequencies(self) -> np.ndarray:
        if self.shots == 0:
            raise InvalidInputError("count table has zero shots")
        return self.counts / self.shots


Table = ProbabilityTable | CountTable


def joint_readout(state, setting: MeasurementSetting, confusion=None) -> ProbabilityTable:
    """Outcome probabilities after the setting's pre-rotations.

    ``confusion`` optionally gives one 2x2 assignment matrix per qubit,
    ``A[measured, true]``.
    """
    rho = as_density(state)
    n = setting.n_qubits
    if rho.space != HilbertSpace.qubits(n):
        raise DimensionMismatchError(f"readout of {n} qubits on a state over {rho.space}")
    u = setting.unitary()
    p = np.real(np.einsum("oj,ji,oi->o", u, rho.matrix, u.conj()))
    if confusion is not None:
        if len(confusion) != n:
            raise InvalidInputError("one confusion matrix per qubit required")
        p = reduce(np.kron, [np.asarray(a, dtype=float) for a in confusion]) @ p
    p = np.clip(p, 0.0, None)
    return ProbabilityTable(p / p.sum())


def sample_counts(table: ProbabilityTable, shots: int, seed=None) -> CountTable:
    """Multinomial draw; ``seed`` may be an int or a ``numpy.random.Generator``."""
    if shots < 1:
        raise InvalidInputError("shots must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return CountTable(rng.multinomial(int(shots), table.p))


def qst_settings(n: int = 4) -> list[MeasurementSetting]:
    return [MeasurementSetting(t) for t in itertools.product(LABELS, repeat=n)]


# ---------------------------------------------------------------------------
# data sets

@dataclass(frozen=True)
class TomographyData:
    """One table per setting, keyed by the setting string (e.g. ``"IXYI"``)."""

    tables: Mapping[str, Table]

    def __post_init__(self):
        object.__setattr__(self, "tables", dict(self.tables))
        ns = {len(k) for k in self.tables}
        if len(ns) > 1:
            raise InvalidInputError("settings of mixed length")

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.tables)))

    @property
    def has_counts(self) -> bool:
        return all(isinstance(t, CountTable) for t in self.tables.values())

    def require_complete(self):
        n = self.n_qubits
        missing = [str(s) for s in qst_settings(n) if str(s) not in self.tables]
        if missing:
            raise InvalidInputError(f"{len(missing)} tomography settings missing, e.g. {missing[0]}")

    def matrix(self) -> np.ndarray:
        """(settings, outcomes) frequencies in :func:`qst_settings` order."""
        self.require_complete()
        return np.array([self.tables[str(s)].frequencies() for s in qst_settings(self.n_qubits)])

    def counts_matrix(self) -> np.ndarray:
        self.require_complete()
        if not self.has_counts:
            raise InvalidInputError("count data required")
        return np.array([self.tables[str(s)].counts for s in qst_settings(self.n_qubits)])

    def to_json(self) -> str:
        rows = []
        for key in sorted(self.tables, key=lambda k: [LABELS.index(c) for c in k]):
            t = self.tables[key]
            if isinstance(t, CountTable):
                rows.append({"setting": key, "counts": [int(c) for c in t.counts]})
            else:
                rows.append({"setting": key, "probabilities": [float(x) for x in t.p]})
        return json.dumps(rows, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "TomographyData":
        try:
            rows = json.loads(text)
            tables = {}
            for row in rows:
                key = str(MeasurementSetting.parse(row["setting"]))
                if key in tables:
                    raise InvalidInputError(f"setting {key} listed twice")
                if "counts" in row:
                    tables[key] = CountTable(row["counts"])
                else:
                    tables[key] = ProbabilityTable(row["probabilities"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed tomography data: {exc}") from exc
        return cls(tables)


def simulate_tomography(state, shots: int | None = None, seed=None, confusion=None) -> TomographyData:
    """Forward model over all 3^n settings; exact probabilities when ``shots`` is None."""
    rho = as_density(state)
    n = rho.space.n_factors
    rng = np.random.default_rng(seed)
    tables = {}
    for s in qst_settings(n):
        p = joint_readout(rho, s, confusion)
        tables[str(s)] = p if shots is None else sample_counts(p, shots, rng)
    return TomographyData(tables)


# ---------------------------------------------------------------------------
# reconstruction

@dataclass(frozen=True)
class ReconstructedState:
    rho: DensityMatrix
    method: str
    settings_used: int
    log_likelihood: float | None = None
    psd_distance: float = 0.0
    iterations: int = 0
    converged: bool = True
    likelihood_trace: tuple[float, ...] = ()


@lru_cache(maxsize=4)
def _inversion(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map from stacked frequencies (3^n * 2^n) to Pauli expectations, and
    the Pauli basis (4^n, 2^n, 2^n)."""
    settings = qst_settings(n)
    outcomes = np.array(list(itertools.product((0, 1), repeat=n)))
    letters = "IXYZ"
    m = np.zeros((4**n, len(settings) * 2**n))
    basis = np.empty((4**n, 2**n, 2**n), dtype=complex)
    for k, word in enumerate(itertools.product(letters, repeat=n)):
        basis[k] = reduce(np.kron, [PAULIS[c] for c in word])
        compatible = []
        for si, s in enumerate(settings):
            ok, sign = True, 1
            for c, lab in zip(word, s.labels):
                if c == "I":
                    continue
                axis, sg = MEASURED[lab]
                if axis != c:
                    ok = False
                    break
                sign *= sg
            if ok:
                compatible.append((si, sign))
        support = [j for j, c in enumerate(word) if c != "I"]
        parity = (-1.0) ** outcomes[:, support].sum(axis=1) if support else np.ones(2**n)
        for si, sign in compatible:
            m[k, si * 2**n:(si + 1) * 2**n] = sign * parity / len(compatible)
    m.setflags(write=False)
    basis.setflags(write=False)
    return m, basis


def pauli_expectations(data: TomographyData) -> np.ndarray:
    m, _ = _inversion(data.n_qubits)
    return m @ data.matrix().reshape(-1)


def _linear_from_freq(freq: np.ndarray, n: int) -> np.ndarray:
    """``freq`` of shape (..., 3^n, 2^n) -> density matrices (..., 2^n, 2^n)."""
    m, basis = _inversion(n)
    ev = freq.reshape(freq.shape[:-2] + (-1,)) @ m.T
    return np.einsum("...k,kij->...ij", ev, basis) / 2**n


def reconstruct_linear(data: TomographyData) -> ReconstructedState:
    """Pauli inversion; Hermitian and unit trace, not necessarily PSD."""
    n = data.n_qubits
    r = _linear_from_freq(data.matrix(), n)
    r = 0.5 * (r + r.conj().T)
    space = HilbertSpace.qubits(n)
    raw = DensityMatrix(space, r, check=False)
    dist = trace_distance(raw, project_to_density(r, space))
    return ReconstructedState(raw, "linear", len(data.tables), psd_distance=dist)


def _probabilities(rows: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``rows`` stacks every setting's unitary, one outcome per row."""
    return np.real(np.sum((rows @ rho) * rows.conj(), axis=1))


def _log_likelihood(weights: np.ndarray, p: np.ndarray) -> float:
    mask = weights > 0
    return float(np.sum(weights[mask] * np.log(np.maximum(p[mask], 1e-300))))


def reconstruct_mle(data: TomographyData, max_iters: int = 5000, tol: float = 1e-10) -> ReconstructedState:
    """RrhoR likelihood ascent from the maximally mixed state.

    Each step tries the plain update ``R rho R``; if the likelihood would
    drop, the diluted update ``(1 + eps R) rho (1 + eps R)`` is used with
    ``eps`` halved until it does not, so the likelihood never decreases.
    Stops when the per-shot likelihood gain falls below ``tol``. Probability
    tables are accepted and treated as infinitely many shots.
    """
    n = data.n_qubits
    settings = qst_settings(n)
    data.require_complete()
    weights = data.counts_matrix().astype(float) if data.has_counts else data.matrix()
    total = weights.sum()
    if np.any(weights.sum(axis=1) <= 0):
        raise InvalidInputError("every setting needs at least one shot")
    freq = (weights / total).reshape(-1)
    rows = np.concatenate([s.unitary() for s in settings])
    rows_h = rows.conj().T
    d = 2**n
    rho = np.eye(d, dtype=complex) / d
    p = _probabilities(rows, rho)
    ll = _log_likelihood(freq, p)
    trace = [ll]
    eye = np.eye(d)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        w = np.where(freq > 0, freq / np.maximum(p, 1e-300), 0.0)
        r = (rows_h * w) @ rows
        eps = None
        while True:
            g = r if eps is None else eye + eps * r
            cand = g @ rho @ g.conj().T
            cand = 0.5 * (cand + cand.conj().T)
            cand /= np.trace(cand).real
            pc = _probabilities(rows, cand)
            llc = _log_likelihood(freq, pc)
            if llc >= ll:
                break
            eps = 1.0 if eps is None else eps / 2
            if eps < 1e-12:
                cand, pc, llc = rho, p, ll
                break
        gain = llc - ll
        rho, p, ll = cand, pc, llc
        trace.append(ll)
        if gain < tol:
            converged = True
            break
    space = HilbertSpace.qubits(n)
    out = project_to_density(rho, space)
    return ReconstructedState(out, "mle", len(settings), ll * total, 0.0, it, converged, tuple(trace))


# ---------------------------------------------------------------------------
# witness

@dataclass(frozen=True)
class WitnessReport:
    fidelity: float
    std_error: float
    passes: bool
    sigma_margin: float

    @classmethod
    def from_values(cls, fid: float, std_error: float = 0.0) -> "WitnessReport":
        if std_error < 1e-12:  # bootstrap round-off on noiseless data
            std_error = 0.0
        if std_error > 0:
            margin = (fid - 0.5) / std_error
        else:
            margin = 0.0 if fid == 0.5 else math.copysign(math.inf, fid - 0.5)
        return cls(float(fid), float(std_error), bool(fid > 0.5), float(margin))

    def to_dict(self) -> dict:
        margin = self.sigma_margin if math.isfinite(self.sigma_margin) else None
        return {"fidelity": self.fidelity, "std_error": self.std_error,
                "passes": self.passes, "sigma_margin": margin}


def ghz_witness(rho, target: PureState, data: TomographyData | None = None, seed=0,
                resamples: int = BOOTSTRAP_RESAMPLES) -> WitnessReport:
    """Fidelity to ``target`` against the 1/2 threshold for genuine n-partite entanglement.

    With count data the standard error comes from a parametric bootstrap:
    every setting is resampled from its own observed frequencies and the
    fidelity recomputed by linear inversion (the fidelity is linear in the
    data, so this needs no per-resample optimization).
    """
    fid = fidelity(as_density(rho) if isinstance(rho, (DensityMatrix, PureState)) else rho, target)
    if data is None or not data.has_counts:
        return WitnessReport.from_values(fid)
    counts = data.counts_matrix()
    freq = counts / counts.sum(axis=1, keepdims=True)
    rng = np.random.default_rng(seed)
    boot = np.empty((resamples,) + freq.shape)
    for b in range(resamples):
        for s in range(freq.shape[0]):
            boot[b, s] = rng.multinomial(counts[s].sum(), freq[s])
    boot /= counts.sum(axis=1, keepdims=True)
    rhos = _linear_from_freq(boot, data.n_qubits)
    t = target.amplitudes
    fids = np.real(np.einsum("i,bij,j->b", t.conj(), rhos, t))
    return WitnessReport.from_values(fid, float(np.std(fids, ddof=1)))
