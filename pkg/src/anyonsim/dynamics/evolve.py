"""Unitary and Lindblad propagation of pulse sequences."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..errors import InvalidInputError, PhysicsInvariantError
from ..hilbert import (
    TOL_PROP,
    TOL_PSD,
    DensityMatrix,
    HilbertSpace,
    Operator,
    PureState,
    partial_trace_matrix,
)
from .frames import FrameTracker, Schedule, build_grid
from .model import CircuitModel
from .params import NS, DeviceParams, NoiseParams
from .pulses import PulseSequence, VirtualZ

MAX_DT = 0.05 * NS
DEFAULT_DT = 0.01 * NS
TRACE_TOL = 1e-6
POSITIVITY_CLIP = 1e-6


@dataclass(frozen=True)
class EvolutionResult:
    """Outcome of a propagation.

    ``final_state`` lives on the full space in the simulation frame and can
    seed a resumed run; ``qubit_state`` is the reduced qubit register in the
    referenced frame described in :mod:`anyonsim.dynamics.frames`.
    """

    final_state: DensityMatrix
    qubit_state: DensityMatrix
    frame: FrameTracker
    t_end: float
    wall_times: tuple[float, ...] = ()
    final_vector: np.ndarray | None = field(default=None, repr=False)
    trace_drift: float = 0.0


def hamiltonian_at(params: DeviceParams, sequence: PulseSequence | list, t: float) -> Operator:
    """Simulation-frame Hamiltonian at time ``t`` (rad/s)."""
    if not isinstance(sequence, PulseSequence):
        sequence = PulseSequence(tuple(sequence), params.n_qubits)
    if not 0 <= t <= sequence.duration:
        raise InvalidInputError(f"t = {t} outside the sequence span")
    model = CircuitModel.from_params(params)
    sched = Schedule(params, sequence)
    # nudge to decide activity for pulses starting exactly at t
    probe = np.array([t + 1e-18])
    det = sched.detunings(probe)[0]
    drv = sched.drive_amplitudes(np.array([t]), probe)[0]
    return Operator(model.space, model.dense_hamiltonian(det, drv), is_hermitian=True)


def _check_dt(dt: float):
    if not 0 < dt <= MAX_DT * (1 + 1e-12):
        raise InvalidInputError(f"dt = {dt / NS:.4g} ns outside (0, {MAX_DT / NS:g}] ns")


def _lift(initial, model: CircuitModel) -> np.ndarray:
    """Full-space vector or matrix; a qubit-only input is paired with the resonator vacuum."""
    arr = initial.amplitudes if isinstance(initial, PureState) else initial.matrix
    d = arr.shape[0]
    if d == model.dim:
        return np.array(arr, dtype=complex)
    if d != 2**model.n_qubits:
        raise InvalidInputError(f"initial state of dimension {d} fits neither the qubits nor the full space")
    vac = np.zeros(model.n_ph)
    vac[0] = 1.0
    if arr.ndim == 1:
        return np.kron(arr, vac).astype(complex)
    return np.kron(arr, np.outer(vac, vac)).astype(complex)


def _segments(sequence: PulseSequence, t_start: float, t_end: float):
    """Split [t_start, t_end] at virtual-Z times; yields (a, b, [vz at b])."""
    vz = [p for p in sequence.of_type(VirtualZ) if t_start <= p.start_time <= t_end]
    cuts = sorted({p.start_time for p in vz})
    a = t_start
    for c in cuts:
        yield a, c, [p for p in vz if p.start_time == c]
        a = c
    yield a, t_end, []


def _virtual_z_diag(model: CircuitModel, pulses) -> np.ndarray:
    d = np.ones(model.dim, dtype=complex)
    for p in pulses:
        e = model.exc[p.qubit]
        d *= np.where(e > 0, np.exp(0.5j * p.angle), np.exp(-0.5j * p.angle))
    return d


def _diag_phase(model: CircuitModel, sched: Schedule, t: float) -> np.ndarray:
    """Diagonal of ``exp(-i integral H_diag)`` up to time ``t``."""
    return np.exp(-1j * (sched.bare_thetas(np.asarray(t)) @ model.exc))


def _reduce(model: CircuitModel, full: np.ndarray, frame: FrameTracker) -> DensityMatrix:
    """Trace out the resonator and rotate into the referenced frame."""
    dims = [2] * model.n_qubits + [model.n_ph]
    if full.ndim == 1:
        full = np.outer(full, full.conj())
    red = partial_trace_matrix(full, dims, list(range(model.n_qubits)))
    w = np.exp(1j * (np.asarray(frame.ref_phase) @ model.exc[:, ::model.n_ph]))
    red = w[:, None] * red * w.conj()[None, :]
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(HilbertSpace.qubits(model.n_qubits), red / np.trace(red).real)


def _sequence_checks(sequence: PulseSequence, params: DeviceParams, t_start: float):
    if sequence.n_qubits != params.n_qubits:
        raise InvalidInputError("sequence and device disagree on the number of qubits")
    if not 0 <= t_start <= sequence.duration:
        raise InvalidInputError("t_start outside the sequence span")
    starts = [p.start_time for p in sequence.pulses]
    if starts != sorted(starts):  # pragma: no cover - PulseSequence sorts on construction
        raise InvalidInputError("pulses out of time order")


# Commutator-free fourth-order Magnus (CF4): two exponentials per step built
# from Gauss-point samples of the drive.
_CF4_NODES = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)
_CF4_WEIGHTS = (0.25 - np.sqrt(3) / 6, 0.25 + np.sqrt(3) / 6)


def _cf4_substeps(sched: Schedule, grid, det: np.ndarray):
    """Each step becomes two half-length steps with constant detuning and
    drives ``2(a2 u1 + a1 u2)`` then ``2(a1 u1 + a2 u2)``."""
    c1, c2 = _CF4_NODES
    a1, a2 = _CF4_WEIGHTS
    t0, dts, mids = grid.edges[:-1], grid.dts, grid.mids
    times = np.stack([t0 + c1 * dts, t0 + c2 * dts], axis=1)
    u = sched.drive_amplitudes(times.ravel(), np.repeat(mids, 2)).reshape(times.shape + (det.shape[1],))
    first = 2 * (a2 * u[:, 0] + a1 * u[:, 1])
    second = 2 * (a1 * u[:, 0] + a2 * u[:, 1])
    drv = np.stack([first, second], axis=1).reshape(-1, det.shape[1])
    return np.repeat(0.5 * dts, 2), np.repeat(det, 2, axis=0), drv


def evolve_unitary(params: DeviceParams, sequence: PulseSequence, initial, dt: float = DEFAULT_DT,
                   t_start: float = 0.0) -> EvolutionResult:
    """Propagation by products of exponentials of constant Hamiltonians (CF4 Magnus scheme)."""
    _check_dt(dt)
    _sequence_checks(sequence, params, t_start)
    model = CircuitModel.from_params(params)
    if not isinstance(initial, PureState):
        raise InvalidInputError("evolve_unitary needs a PureState; use evolve_lindblad for mixed input")
    psi = _lift(initial, model)
    norm0 = np.linalg.norm(psi)
    sched = Schedule(params, sequence)
    lo, hi = model.flips
    csrc, cdst, camp = model.couplings
    walls = []
    t_end = sequence.duration
    for a, b, vz in _segments(sequence, t_start, t_end):
        t0 = time.perf_counter()
        if b > a:
            grid = build_grid(sequence.breakpoints(), a, b, dt)
            dts, det, drv = _cf4_substeps(sched, grid, sched.detunings(grid.mids))
            psi, _ = _kernels.unitary_steps(psi, dts, np.ascontiguousarray(det), np.ascontiguousarray(drv),
                                            model.exc, lo, hi, csrc, cdst, camp, float(model.g))
        if vz:
            psi = _virtual_z_diag(model, vz) * psi
        walls.append(time.perf_counter() - t0)
    drift = abs(np.linalg.norm(psi) - norm0)
    if drift > TOL_PROP * max(1.0, (t_end - t_start) / (100 * NS)) * 100:
        raise PhysicsInvariantError(f"norm drift {drift:.3g} during unitary propagation")
    psi = psi / np.linalg.norm(psi)
    frame = sched.frame_at(t_end)
    full = DensityMatrix(model.space, np.outer(psi, psi.conj()))
    return EvolutionResult(full, _reduce(model, psi, frame), frame, t_end, tuple(walls), psi, drift)


def _positivity(matrix: np.ndarray, space: HilbertSpace) -> np.ndarray:
    h = 0.5 * (matrix + matrix.conj().T)
    w, v = np.linalg.eigh(h)
    if w[0] < -POSITIVITY_CLIP:
        raise PhysicsInvariantError(f"density matrix eigenvalue {w[0]:.3g} below -{POSITIVITY_CLIP:g}")
    if w[0] < 0:
        if w[0] < -TOL_PSD:
            warnings.warn(f"clipping negative eigenvalue {w[0]:.2e}", RuntimeWarning, stacklevel=3)
        w = np.clip(w, 0.0, None)
        h = (v * w) @ v.conj().T
    return h / np.trace(h).real


def evolve_lindblad(params: DeviceParams, noise: NoiseParams | None, sequence: PulseSequence, initial,
                    dt: float = DEFAULT_DT, t_start: float = 0.0) -> EvolutionResult:
    """Fixed-step RK4 integration of the master equation.

    Collapse operators are ``sqrt(1/T1) sigma_j`` and ``sqrt(1/(2 T_phi)) Z_j``
    with ``1/T_phi = 1/T2eff - 1/(2 T1)``, plus ``sqrt(kappa) a`` when set.
    """
    _check_dt(dt)
    _sequence_checks(sequence, params, t_start)
    model = CircuitModel.from_params(params)
    rho = _lift(initial, model)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    sched = Schedule(params, sequence)
    lo, hi = model.flips
    csrc, cdst, camp = model.couplings
    rsrc, rdst, ramp = model.resonator_jumps
    if noise is None:
        decay = np.zeros((model.dim, model.dim))
        gamma1 = np.zeros(params.n_qubits)
        kappa = 0.0
    else:
        noise = noise.for_qubits(params.n_qubits)
        decay = model.decay_matrix(noise)
        gamma1 = np.ascontiguousarray(noise.gamma1, dtype=float)
        kappa = float(noise.resonator_kappa)
    walls = []
    drift_max = 0.0
    t_end = sequence.duration
    for a, b, vz in _segments(sequence, t_start, t_end):
        t0 = time.perf_counter()
        if b > a:
            grid = build_grid(sequence.breakpoints(), a, b, dt)
            times, owner = grid.rk4_points()
            shape = times.shape + (params.n_qubits,)
            rot = np.exp(1j * sched.bare_thetas(times))
            drv = sched.drive_amplitudes(times.ravel(), owner.ravel()).reshape(shape) * rot
            cpl = model.g * rot
            d = _diag_phase(model, sched, a)
            rho = d.conj()[:, None] * rho * d[None, :]
            rho, status, drift = _kernels.lindblad_rk4(
                rho, grid.dts, np.ascontiguousarray(drv), np.ascontiguousarray(cpl),
                lo, hi, csrc, cdst, camp, decay, gamma1, kappa, rsrc, rdst, ramp)
            if status != _kernels.STATUS_OK:
                raise PhysicsInvariantError(
                    f"trace drift {drift:.3g} exceeded 1e-4 near t = {b / NS:.2f} ns; reduce dt")
            d = _diag_phase(model, sched, b)
            rho = d[:, None] * rho * d.conj()[None, :]
            drift_max = max(drift_max, drift)
        if vz:
            d = _virtual_z_diag(model, vz)
            rho = d[:, None] * rho * d.conj()[None, :]
        walls.append(time.perf_counter() - t0)
    if drift_max > TRACE_TOL:
        warnings.warn(f"trace drift {drift_max:.2e} above {TRACE_TOL:g}", RuntimeWarning, stacklevel=2)
    rho = _positivity(rho, model.space)
    frame = sched.frame_at(t_end)
    full = DensityMatrix(model.space, rho)
    return EvolutionResult(full, _reduce(model, rho, frame), frame, t_end, tuple(walls), None, drift_max)

