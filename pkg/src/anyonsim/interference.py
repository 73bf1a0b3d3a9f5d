"""Parity-oscillation scans and the braiding experiments.

The correlation operator is P(gamma) = prod_j (cos gamma Y'_j + sin gamma X'_j).
It is measured by rotating every qubit by gamma about z' and reading out Y'
(the native readout axis). On (|0'...0'> + e^{i phi}|1'...1'>)/sqrt 2 its
expectation is cos(n gamma + phi).
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .dynamics.frames import FrameTracker, wrap_phase
from .dynamics.gates import Rotation, gate_level_backend
from .errors import AnyonsimError, InvalidInputError
from .hilbert import DensityMatrix, HilbertSpace, Operator, X, Y
from .tomo import CountTable, MeasurementSetting, ProbabilityTable, joint_readout, sample_counts

# the gamma pulse is exp(-i GAMMA_SIGN * gamma Z'/2), the same convention as every Z' rotation
GAMMA_SIGN = +1
PERIOD_FACTOR = 4


def correlation_operator(gamma: float, frame: FrameTracker | None = None, n: int = 4) -> Operator:
    """P(gamma); in primed coordinates, or in the reported lab frame when a frame is given."""
    if frame is not None:
        n = frame.n_qubits
    single = np.cos(gamma) * Y + GAMMA_SIGN * np.sin(gamma) * X
    m = reduce(np.kron, [single] * n)
    if frame is not None:
        v = frame.primed_unitary()
        m = v @ m @ v.conj().T
    return Operator(HilbertSpace.qubits(n), m, is_hermitian=True)


@dataclass(frozen=True)
class ParityEstimate:
    value: float
    std_error: float


def _parity_signs(n: int) -> np.ndarray:
    return np.array([(-1) ** bin(i).count("1") for i in range(2**n)], dtype=float)


def parity_from_counts(counts: CountTable | ProbabilityTable) -> ParityEstimate:
    """sum_i (-1)^{|i|} P_i with its binomial standard error (zero for exact tables)."""
    if isinstance(counts, ProbabilityTable):
        return ParityEstimate(float(_parity_signs(counts.n_qubits) @ counts.p), 0.0)
    if counts.shots < 1:
        raise InvalidInputError("parity needs at least one shot")
    v = float(_parity_signs(counts.n_qubits) @ counts.frequencies())
    return ParityEstimate(v, float(np.sqrt(max(0.0, 1.0 - v * v) / counts.shots)))


# ---------------------------------------------------------------------------
# scenarios and backends

@dataclass(frozen=True)
class BraidScenario:
    label: str
    ops: tuple

    def __post_init__(self):
        allowed = {"Z'", "Z'/2", "-Z'/2", "C_loop", "gamma"}
        for op in self.ops:
            name = op if isinstance(op, str) else op[0]
            if name not in allowed:
                raise InvalidInputError(f"scenario op {name!r} not in {sorted(allowed)}")


SCENARIOS = {
    "empty_vertex": BraidScenario("empty_vertex", ("C_loop",)),
    # an e anyon is created on the vertex, encircled, then annihilated
    "e_vertex": BraidScenario("e_vertex", (("Z'", 0), "C_loop", ("Z'", 0))),
    # the vertex holds a superposition of no anyon and one e anyon
    "half_filled": BraidScenario("half_filled", (("Z'/2", 0), "C_loop", ("-Z'/2", 0))),
    "ground": BraidScenario("ground", ()),
    "e_state": BraidScenario("e_state", (("Z'", 0),)),
}
BRAID_SET = ("empty_vertex", "e_vertex", "half_filled")


def get_scenario(scenario) -> BraidScenario:
    if isinstance(scenario, BraidScenario):
        return scenario
    try:
        return SCENARIOS[scenario]
    except KeyError:
        raise InvalidInputError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}") from None


Y_PRIME_READOUT = "X"  # X/2 pre-rotation maps Y' onto the computational basis


class GateBackend:
    """Ideal rotations from a perfect GHZ preparation, in primed coordinates."""

    name = "gate"

    def __init__(self, n_qubits: int = 4):
        self.n = n_qubits

    def prepare(self, ops):
        return gate_level_backend(["GHZ", *ops], n=self.n)

    def readout(self, prepared, gamma: float) -> ProbabilityTable:
        psi = gate_level_backend([Rotation("z", GAMMA_SIGN * gamma, tuple(range(self.n)), "gamma")],
                                 prepared, self.n)
        return joint_readout(psi, MeasurementSetting((Y_PRIME_READOUT,) * self.n))

    def primed_state(self, ops) -> DensityMatrix:
        return self.prepare(ops).to_density()


class PulseBackend:
    """Pulse-level simulation; the gamma rotation is a 10 ns FWHM pulse about z'.

    Readout is the native lab-z measurement, which is Y' in the primed frame.
    """

    name = "pulse"

    def __init__(self, params, noise=None, dt: float | None = None):
        from .dynamics.protocol import PulseProgram, prepare_ghz

        self.params, self.noise = params, noise
        self.prep = prepare_ghz(params, noise, dt)
        self._program = PulseProgram
        self.n = params.n_qubits

    def prepare(self, ops):
        return self._program(self.prep).then(tuple(ops))

    def readout(self, prepared, gamma: float) -> ProbabilityTable:
        res = prepared.then([("gamma", GAMMA_SIGN * gamma)]).state
        return joint_readout(res.qubit_state, MeasurementSetting(("I",) * self.n))

    def primed_state(self, ops) -> DensityMatrix:
        return self.prepare(ops).rho_primed()


# ---------------------------------------------------------------------------
# scans

@dataclass(frozen=True)
class CorrelationScan:
    gammas: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    shots: int | None
    scenario: str = ""
    backend: str = ""

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        e = np.asarray(self.errors, dtype=float)
        if g.ndim != 1 or g.size == 0 or v.shape != g.shape or e.shape != g.shape:
            raise InvalidInputError("gammas, values and errors must be equal-length 1-d arrays")
        if np.any(np.diff(g) <= 0):
            raise InvalidInputError("gammas must be strictly increasing")
        if np.any(np.abs(v) > 1 + 3 * e + 1e-9):
            raise InvalidInputError("parity values outside [-1, 1] beyond three standard errors")
        for name, arr in (("gammas", g), ("values", v), ("errors", e)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("gamma_rad,parity,parity_stderr,shots\n")
        shots = "" if self.shots is None else str(self.shots)
        for g, v, e in zip(self.gammas, self.values, self.errors):
            buf.write(f"{g!r},{v!r},{e!r},{shots}\n")
        return buf.getvalue()


def default_gammas(points: int = 21) -> np.ndarray:
    if points < 2:
        raise InvalidInputError("need at least two gamma points")
    return np.linspace(0.0, np.pi, points)


def run_scan(scenario, gammas=None, shots: int | None = 3000, backend=None, seed=None) -> CorrelationScan:
    """Prepare, apply the scenario, rotate by gamma about z', read out Y'.

    ``shots=None`` returns exact expectations with zero error bars.
    ``backend`` defaults to the ideal gate backend.
    """
    sc = get_scenario(scenario)
    gammas = default_gammas() if gammas is None else np.asarray(gammas, dtype=float)
    if gammas.size == 0:
        raise InvalidInputError("gammas must not be empty")
    if np.any(gammas < 0) or np.any(gammas > np.pi + 1e-12):
        raise InvalidInputError("gammas must lie in [0, pi]")
    backend = GateBackend() if backend is None else backend
    rng = np.random.default_rng(seed)
    prepared = backend.prepare(sc.ops)
    vals, errs = [], []
    for k, g in enumerate(gammas):
        try:
            table = backend.readout(prepared, float(g))
        except AnyonsimError as exc:
            exc.gamma_index = k
            exc.args = (f"at gamma index {k} ({g:.4f} rad): {exc.args[0] if exc.args else ''}",) + exc.args[1:]
            raise
        est = parity_from_counts(table if shots is None else sample_counts(table, shots, rng))
        vals.append(est.value)
        errs.append(est.std_error)
    return CorrelationScan(gammas, np.array(vals), np.array(errs), shots, sc.label, backend.name)


# ---------------------------------------------------------------------------
# fits

@dataclass(frozen=True)
class CosineFit:
    phi: float
    contrast: float
    offset: float
    residual_rms: float
    phi_error: float
    frequency: float = PERIOD_FACTOR

    def curve(self, gammas) -> np.ndarray:
        g = np.asarray(gammas, dtype=float)
        return self.contrast * np.cos(self.frequency * g + self.phi) + self.offset

    def to_dict(self) -> dict:
        return {"phi_rad": self.phi, "phi_err": self.phi_error, "contrast": self.contrast,
                "offset": self.offset, "residual_rms": self.residual_rms}


def fit_cosine(scan: CorrelationScan, frequency: float = PERIOD_FACTOR) -> CosineFit:
    """Weighted linear least squares for A cos(4 gamma + phi) + c.

    Solves for (A cos phi, -A sin phi, c) against (cos 4g, sin 4g, 1), then
    phi = atan2. With exact data (zero error bars) the fit is unweighted and
    the residual variance sets the uncertainty.
    """
    g, v, e = scan.gammas, scan.values, scan.errors
    if g.size < 8:
        raise InvalidInputError("cosine fit needs at least 8 points")
    if g[-1] - g[0] < 2 * np.pi / frequency - 1e-12:
        raise InvalidInputError("gamma range must span at least one oscillation period")
    design = np.column_stack([np.cos(frequency * g), np.sin(frequency * g), np.ones_like(g)])
    weighted = bool(np.all(e > 0))
    w = 1.0 / e**2 if weighted else np.ones_like(g)
    a = design * np.sqrt(w)[:, None]
    b = v * np.sqrt(w)
    if np.linalg.matrix_rank(a, tol=1e-10 * max(1.0, np.abs(a).max())) < 3:
        raise InvalidInputError("degenerate design: gammas do not resolve the oscillation")
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    normal_inv = np.linalg.inv(a.T @ a)
    resid = v - design @ coef
    if weighted:
        cov = normal_inv
    else:
        dof = max(g.size - 3, 1)
        cov = normal_inv * float(resid @ resid) / dof
    p, q, c = coef
    amp = float(np.hypot(p, q))
    phi = float(wrap_phase(np.arctan2(-q, p)))
    if amp > 0:
        var = (q * q * cov[0, 0] + p * p * cov[1, 1] - 2 * p * q * cov[0, 1]) / amp**4
        phi_err = float(np.sqrt(max(var, 0.0)))
    else:
        phi_err = float(np.pi)
    return CosineFit(phi, amp, float(c), float(np.sqrt(np.mean(resid**2))), phi_err, frequency)


def fit_frequency(scan: CorrelationScan, grid: Sequence[float] | None = None) -> tuple[float, float]:
    """Diagnostic fit with the angular frequency floated; returns (frequency, 1-sigma error).

    A coarse grid over the frequency seeds a nonlinear least-squares refine.
    """
    g, v = scan.gammas, scan.values
    grid = np.arange(1.0, 8.01, 0.05) if grid is None else np.asarray(grid, dtype=float)
    best = None
    for k in grid:
        d = np.column_stack([np.cos(k * g), np.sin(k * g), np.ones_like(g)])
        coef, *_ = np.linalg.lstsq(d, v, rcond=None)
        r = float(np.sum((v - d @ coef) ** 2))
        if best is None or r < best[0]:
            best = (r, k, coef)
    _, k0, (p, q, c) = best

    def model(x, k, p, q, c):
        return p * np.cos(k * x) + q * np.sin(k * x) + c

    sigma = scan.errors if np.all(scan.errors > 0) else None
    with warnings.catch_warnings():
        # a perfect fit to exact data has no estimable covariance; report zero error then
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, pcov = curve_fit(model, g, v, p0=[k0, p, q, c], sigma=sigma, absolute_sigma=sigma is not None)
    err = float(np.sqrt(pcov[0, 0])) if np.isfinite(pcov[0, 0]) else 0.0
    return float(popt[0]), err


@dataclass(frozen=True)
class PhaseDifference:
    delta_phi: float
    error: float

    def to_dict(self) -> dict:
        return {"delta_phi_rad": self.delta_phi, "error_rad": self.error,
                "delta_phi_over_pi": self.delta_phi / np.pi}


def braiding_phase_difference(scan_a: CorrelationScan | CosineFit,
                              scan_b: CorrelationScan | CosineFit) -> PhaseDifference:
    fa = scan_a if isinstance(scan_a, CosineFit) else fit_cosine(scan_a)
    fb = scan_b if isinstance(scan_b, CosineFit) else fit_cosine(scan_b)
    return PhaseDifference(float(wrap_phase(fb.phi - fa.phi)), float(np.hypot(fa.phi_error, fb.phi_error)))


def phase_distance(a: float, b: float) -> float:
    """Smallest absolute angular separation."""
    return abs(float(wrap_phase(a - b)))


def fit_json(fit: CosineFit) -> str:
    return json.dumps(fit.to_dict(), indent=1, sort_keys=True)
