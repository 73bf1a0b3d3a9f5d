"""Rotating-frame bookkeeping and sampling of the control schedule.

Three frames appear:

* the simulation frame, rotating at the resonator frequency for every factor;
* each qubit's local frame, rotating at its current (dressed) frequency;
  ``theta_j(t)`` is its accumulated angle relative to the simulation frame;
* the interaction frame, rotating at ``omega_r + delta``.

``Phi_j(t) = theta_j(t) - delta * t`` is the angle of qubit j's local frame
relative to the interaction frame. A drive is specified in the interaction
frame as it stood at a reference time (the start of the qubit's frequency
excursion for earlier pulses, its end for later ones), so its simulation-frame
phase is ``phase + Phi_j(t_ref) - theta_j(t)``. Evolved states are reported in
the same referenced frame, where the dynamical phase gathered by idling after
the excursion no longer appears.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..hilbert import HilbertSpace, Operator, tensor_product
from .params import DeviceParams
from .pulses import GaussianDrive, PulseSequence, SquareDetune


def wrap_phase(x):
    """Map angles into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y <= -np.pi + 1e-12, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def primed_basis(alpha: float) -> np.ndarray:
    """Columns |0'>, |1'> for a primed frame with z' = (cos a, sin a, 0).

    x' = (-sin a, cos a, 0) and y' is the lab z axis, so the primed Pauli
    matrices take their standard form in this basis.
    """
    e = np.exp(1j * alpha)
    return np.array([[1, -1j], [e, 1j * e]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class FrameTracker:
    """Per-qubit dynamical phases and primed-frame axes.

    ``phi[j]`` is the phase qubit j gathered against the interaction frame
    after leaving it. ``ref_phase[j]`` is the full simulation-to-reported-frame
    rotation at the end of the sequence. ``axes[j]`` is the azimuth of z'.
    """

    phi: tuple[float, ...]
    ref_phase: tuple[float, ...] = ()
    axes: tuple[float, ...] = ()
    reference: str = "interaction"

    def __post_init__(self):
        n = len(self.phi)
        object.__setattr__(self, "phi", tuple(float(wrap_phase(p)) for p in self.phi))
        if not self.ref_phase:
            object.__setattr__(self, "ref_phase", (0.0,) * n)
        if not self.axes:
            object.__setattr__(self, "axes", (0.0,) * n)

    @property
    def n_qubits(self) -> int:
        return len(self.phi)

    def with_axes(self, axes) -> "FrameTracker":
        return FrameTracker(self.phi, self.ref_phase, tuple(float(a) for a in axes), "primed")

    def primed_unitary(self) -> np.ndarray:
        """``V`` with ``rho_primed = V^dag rho V`` on the qubit register."""
        u = np.array([[1.0 + 0j]])
        for a in self.axes:
            u = np.kron(u, primed_basis(a))
        return u

    def phase_correction(self) -> Operator:
        """``prod_j exp(-i phi_j Z_j / 2)``; undoes the dynamical phases."""
        space = HilbertSpace.qubits(self.n_qubits)
        ops = [Operator(HilbertSpace.qubits(1), np.diag([np.exp(-0.5j * p), np.exp(0.5j * p)]),
                        is_unitary=True) for p in self.phi]
        return tensor_product(ops) if ops else Operator.identity(space)


class Schedule:
    """Samples detunings and complex drive amplitudes of a pulse sequence."""

    def __init__(self, params: DeviceParams, sequence: PulseSequence):
        if sequence.n_qubits != params.n_qubits:
            raise ValueError("sequence and device disagree on the number of qubits")
        self.params = params
        self.sequence = sequence
        n = params.n_qubits
        self.bare = np.array([params.idle_detuning(j) for j in range(n)])
        self.dressed = np.array([params.dressed_idle_detuning(j) for j in range(n)])
        self.squares = [[p for p in sequence.of_type(SquareDetune) if p.qubit == j] for j in range(n)]
        self.drives = sequence.of_type(GaussianDrive)

    def theta(self, j: int, t):
        """Local-frame angle of qubit j against the simulation frame."""
        t = np.asarray(t, dtype=float)
        out = self.dressed[j] * t
        for sq in self.squares[j]:
            rate = sq.target_frequency - self.params.omega_r - self.dressed[j]
            overlap = np.clip(t - sq.start_time, 0.0, sq.duration)
            out = out + rate * overlap
        return out

    def bare_theta(self, j: int, t):
        """``integral of (omega_j - omega_r)`` with undressed frequencies."""
        t = np.asarray(t, dtype=float)
        out = self.bare[j] * t
        for sq in self.squares[j]:
            rate = sq.target_frequency - self.params.omega_r - self.bare[j]
            out = out + rate * np.clip(t - sq.start_time, 0.0, sq.duration)
        return out

    def bare_thetas(self, t) -> np.ndarray:
        """Stacked on the last axis: shape ``t.shape + (n_qubits,)``."""
        return np.stack([self.bare_theta(j, t) for j in range(self.params.n_qubits)], axis=-1)

    def Phi(self, j: int, t):
        return self.theta(j, t) - self.params.delta_int * np.asarray(t, dtype=float)

    def reference_time(self, j: int, t: float) -> float:
        sq = self.squares[j]
        if not sq:
            return 0.0
        ended = [s.start_time + s.duration for s in sq if s.start_time + s.duration <= t + 1e-15]
        if ended:
            return max(ended)
        return sq[0].start_time

    def detunings(self, mids: np.ndarray) -> np.ndarray:
        """Bare detunings ``omega_j(t) - omega_r``; shape (len(mids), n_qubits).

        Square pulses are judged active by step midpoints so that boundary
        samples take the value of the step they belong to.
        """
        out = np.tile(self.bare, (mids.size, 1))
        for j, sqs in enumerate(self.squares):
            for sq in sqs:
                on = (mids > sq.start_time) & (mids < sq.start_time + sq.duration)
                out[on, j] = sq.target_frequency - self.params.omega_r
        return out

    def drive_amplitudes(self, times: np.ndarray, mids: np.ndarray) -> np.ndarray:
        """Complex RWA amplitudes ``u_j(t)``; shape (len(times), n_qubits)."""
        out = np.zeros((times.size, self.params.n_qubits), dtype=complex)
        for p in self.drives:
            on = (mids > p.start_time) & (mids < p.start_time + p.duration)
            if not on.any():
                continue
            t = times[on]
            ref = self.reference_time(p.qubit, p.start_time)
            psi = p.drive_phase + self.Phi(p.qubit, ref) - self.theta(p.qubit, t)
            out[on, p.qubit] += 0.5 * p.envelope(t) * np.exp(1j * psi)
        return out

    def frame_at(self, t: float) -> FrameTracker:
        n = self.params.n_qubits
        phi, ref_phase = [], []
        for j in range(n):
            tr = self.reference_time(j, t)
            phi.append(float(self.Phi(j, t) - self.Phi(j, tr)))
            ref_phase.append(float(self.theta(j, t) - self.Phi(j, tr)))
        return FrameTracker(tuple(phi), tuple(ref_phase))


def track_frames(params: DeviceParams, sequence: PulseSequence) -> FrameTracker:
    """Dynamical phases at the end of ``sequence``."""
    return Schedule(params, sequence).frame_at(sequence.duration)


@dataclass(frozen=True)
class TimeGrid:
    """Fixed steps that never straddle a pulse boundary."""

    edges: np.ndarray
    segment_ends: tuple[int, ...] = field(default=())

    @property
    def dts(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def rk4_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Start, middle and end time of every step, shape (steps, 3), plus
        the owning midpoints used to decide which pulses are active."""
        times = np.stack([self.edges[:-1], self.mids, self.edges[1:]], axis=1)
        return times, np.repeat(self.mids[:, None], 3, axis=1)


def build_grid(breakpoints, t_start: float, t_end: float, dt: float) -> TimeGrid:
    pts = sorted({t_start, t_end, *[b for b in breakpoints if t_start < b < t_end]})
    edges = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        n = max(1, int(np.ceil((b - a) / dt - 1e-9)))
        edges.extend(np.linspace(a, b, n + 1)[1:])
    return TimeGrid(np.asarray(edges, dtype=float))
