"""Single-qubit Ramsey sweeps and envelope fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..hilbert import DensityMatrix, PureState
from .evolve import evolve_lindblad
from .params import MHZ, NS, TWO_PI, DeviceParams, NoiseParams
from .pulses import GaussianDrive, PulseSequence

RAMSEY_FWHM = 5 * NS
HERMITE_NODES = 48


@dataclass(frozen=True)
class RamseyResult:
    taus: np.ndarray
    envelope: np.ndarray
    p1_x: np.ndarray  # P1(+x) - P1(-x)
    p1_y: np.ndarray  # P1(+y) - P1(-y)

    def to_rows(self):
        return [(float(t), float(e), float(a), float(b))
                for t, e, a, b in zip(self.taus, self.envelope, self.p1_x, self.p1_y)]


@dataclass(frozen=True)
class EnvelopeFit:
    model: str
    t1: float | None
    t2: float | None
    t2star: float | None
    amplitude: float
    residual_rms: float


def _single_qubit_device() -> DeviceParams:
    return DeviceParams(omega_r=TWO_PI * 6.2e9, omega_idle=(TWO_PI * 6.2e9 - 500 * MHZ,),
                        g=0.0, delta_int=-57 * MHZ, n_ph=2)


def _quasi_static(rho: np.ndarray, sigma: float, tau: float) -> np.ndarray:
    """Average ``rho`` over a Gaussian spread of static detunings acting for ``tau``."""
    if sigma == 0:
        return rho
    x, w = np.polynomial.hermite.hermgauss(HERMITE_NODES)
    factor = np.sum(w * np.exp(1j * np.sqrt(2) * sigma * x * tau)) / np.sqrt(np.pi)
    out = rho.copy()
    # qubit coherences sit between the |0,n> and |1,n> blocks
    half = rho.shape[0] // 2
    out[:half, half:] *= np.conj(factor)
    out[half:, :half] *= factor
    return out


def ramsey_sweep(taus, t1: float = 600 * NS, t2eff: float | None = None,
                 t2star: float | None = None, dt: float = 0.05 * NS) -> RamseyResult:
    """X/2, idle for ``tau``, then a second pi/2 pulse along +-x or +-y.

    Differences of opposite-phase readouts (``p1_x``, ``p1_y``) cancel the
    relaxed population that leaks in during the finite second pulse; their
    quadrature sum is the envelope.

    ``t2eff`` sets Markovian dephasing (default none, i.e. 2 t1). ``t2star``
    adds quasi-static Gaussian detuning noise with envelope ``exp(-(tau/t2star)^2)``.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0 or np.any(taus < 0):
        raise InvalidInputError("taus must be a non-empty list of non-negative delays")
    params = _single_qubit_device()
    noise = NoiseParams((t1,), (2 * t1 if t2eff is None else t2eff,))
    sigma = 0.0 if t2star is None else np.sqrt(2.0) / t2star
    slot = GaussianDrive(0, RAMSEY_FWHM, 0.0).duration
    p1x, p1y = [], []
    for tau in taus:
        first = GaussianDrive(0, RAMSEY_FWHM, np.pi / 2, 0.0, 0.0)
        head = PulseSequence((first,), 1, slot + tau)
        mid = evolve_lindblad(params, noise, head, PureState.basis("0"), dt)
        rho = _quasi_static(mid.final_state.matrix, sigma, tau)
        state = DensityMatrix(mid.final_state.space, rho)
        p1 = []
        for phase in (0.0, np.pi, np.pi / 2, -np.pi / 2):
            second = GaussianDrive(0, RAMSEY_FWHM, np.pi / 2, phase, slot + tau)
            seq = PulseSequence((first, second), 1)
            out = evolve_lindblad(params, noise, seq, state, dt, t_start=slot + tau)
            p1.append(float(np.real(out.qubit_state.matrix[1, 1])))
        p1x.append(p1[0] - p1[1])
        p1y.append(p1[2] - p1[3])
    p1x, p1y = np.array(p1x), np.array(p1y)
    return RamseyResult(taus, np.hypot(p1x, p1y), p1x, p1y)


def fit_envelope(taus, envelope, model: str = "exponential") -> EnvelopeFit:
    """Linear least squares on ``ln E``.

    ``exponential``: ln E = c - tau/T2.
    ``gaussian``:    ln E = c - tau/(2 T1) - (tau/T2*)^2.
    """
    taus = np.asarray(taus, dtype=float)
    env = np.asarray(envelope, dtype=float)
    keep = env > 1e-6
    if keep.sum() < 3:
        raise InvalidInputError("need at least three positive envelope points")
    t, y = taus[keep], np.log(env[keep])
    if model == "exponential":
        design = np.column_stack([np.ones_like(t), -t])
    elif model == "gaussian":
        design = np.column_stack([np.ones_like(t), -t, -t * t])
    else:
        raise InvalidInputError(f"unknown envelope model {model!r}")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    amp = float(np.exp(coef[0]))
    if model == "exponential":
        rate = float(coef[1])
        return EnvelopeFit(model, None, 1 / rate if rate > 0 else np.inf, None, amp, resid)
    a, b = float(coef[1]), float(coef[2])
    t1 = 1 / (2 * a) if a > 0 else np.inf
    t2s = float(1 / np.sqrt(b)) if b > 0 else np.inf
    return EnvelopeFit(model, t1, None, t2s, amp, resid)
