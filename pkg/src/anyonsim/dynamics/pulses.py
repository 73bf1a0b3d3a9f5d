"""Pulse primitives and sequences."""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import erf, log, sqrt
from typing import Iterable, Union

import numpy as np

from ..errors import InvalidInputError

# Gaussian envelopes are truncated at +-TRUNCATION * FWHM around the centre.
TRUNCATION = 2.0
FWHM_TO_SIGMA = 1.0 / (2.0 * sqrt(2.0 * log(2.0)))


@dataclass(frozen=True)
class GaussianDrive:
    """Resonant microwave rotation by ``angle`` about the equatorial axis ``drive_phase``.

    ``drive_phase`` is expressed in the interaction-referenced frame (see
    :mod:`anyonsim.dynamics.frames`), so phase 0 is the x axis there.
    """

    qubit: int
    fwhm: float
    angle: float
    drive_phase: float = 0.0
    start_time: float = 0.0

    def __post_init__(self):
        if self.fwhm <= 0:
            raise InvalidInputError("Gaussian FWHM must be positive")
        if self.qubit < 0:
            raise InvalidInputError("qubit index must be non-negative")

    @property
    def duration(self) -> float:
        return 2.0 * TRUNCATION * self.fwhm

    @property
    def center(self) -> float:
        return self.start_time + 0.5 * self.duration

    @property
    def sigma(self) -> float:
        return self.fwhm * FWHM_TO_SIGMA

    @property
    def peak_rabi(self) -> float:
        """Peak Rabi rate (rad/s) giving an envelope integral of ``angle``."""
        half = TRUNCATION * self.fwhm
        area = self.sigma * sqrt(2 * np.pi) * erf(half / (self.sigma * sqrt(2)))
        return self.angle / area

    def envelope(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x = t - self.center
        inside = np.abs(x) <= TRUNCATION * self.fwhm
        return np.where(inside, self.peak_rabi * np.exp(-0.5 * (x / self.sigma) ** 2), 0.0)


@dataclass(frozen=True)
class SquareDetune:
    """Move ``qubit`` to absolute angular frequency ``target_frequency`` for ``duration``."""

    qubit: int
    target_frequency: float
    duration: float
    start_time: float = 0.0

    def __post_init__(self):
        if self.duration <= 0:
            raise InvalidInputError("SquareDetune duration must be positive")


@dataclass(frozen=True)
class VirtualZ:
    """Instantaneous rotation ``exp(-i angle Z/2)`` about the lab z axis."""

    qubit: int
    angle: float
    start_time: float = 0.0

    @property
    def duration(self) -> float:
        return 0.0


Pulse = Union[GaussianDrive, SquareDetune, VirtualZ]


def pulse_end(p: Pulse) -> float:
    return p.start_time + p.duration


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple[Pulse, ...] = ()
    n_qubits: int = 4
    end_time: float | None = None

    def __post_init__(self):
        pulses = tuple(sorted(self.pulses, key=lambda p: (p.start_time, _variant(p), p.qubit)))
        object.__setattr__(self, "pulses", pulses)
        for p in pulses:
            if not 0 <= p.qubit < self.n_qubits:
                raise InvalidInputError(f"pulse on qubit {p.qubit} outside 0..{self.n_qubits - 1}")
            if p.start_time < 0:
                raise InvalidInputError("pulse start times must be non-negative")
        for q in range(self.n_qubits):
            sq = [p for p in pulses if isinstance(p, SquareDetune) and p.qubit == q]
            for a, b in zip(sq, sq[1:]):
                if b.start_time < pulse_end(a) - 1e-18:
                    raise InvalidInputError(f"overlapping SquareDetune pulses on qubit {q}")
        if self.end_time is not None and self.end_time < self.natural_end - 1e-18:
            raise InvalidInputError("end_time precedes the last pulse")

    @property
    def natural_end(self) -> float:
        return max((pulse_end(p) for p in self.pulses), default=0.0)

    @property
    def duration(self) -> float:
        return self.end_time if self.end_time is not None else self.natural_end

    def of_type(self, kind) -> list:
        return [p for p in self.pulses if isinstance(p, kind)]

    def on_qubit(self, q: int) -> list[Pulse]:
        return [p for p in self.pulses if p.qubit == q]

    def extend(self, pulses: Iterable[Pulse], end_time: float | None = None) -> "PulseSequence":
        return PulseSequence(self.pulses + tuple(pulses), self.n_qubits, end_time)

    def shifted(self, dt: float) -> "PulseSequence":
        from dataclasses import replace
        moved = tuple(replace(p, start_time=p.start_time + dt) for p in self.pulses)
        end = None if self.end_time is None else self.end_time + dt
        return PulseSequence(moved, self.n_qubits, end)

    def breakpoints(self) -> list[float]:
        pts = {0.0, self.duration}
        for p in self.pulses:
            pts.add(p.start_time)
            pts.add(pulse_end(p))
        return sorted(pts)

    def to_json(self) -> str:
        return json.dumps([pulse_record(p) for p in self.pulses], indent=1)


def _variant(p: Pulse) -> str:
    return type(p).__name__


def pulse_record(p: Pulse) -> dict:
    rec = {
        "variant": _variant(p),
        "qubit": p.qubit,
        "start_ns": p.start_time * 1e9,
        "duration_ns": p.duration * 1e9,
        "angle_rad": 0.0,
        "phase_rad": 0.0,
    }
    if isinstance(p, GaussianDrive):
        rec["angle_rad"] = p.angle
        rec["phase_rad"] = p.drive_phase
        rec["fwhm_ns"] = p.fwhm * 1e9
    elif isinstance(p, VirtualZ):
        rec["angle_rad"] = p.angle
    else:
        rec["target_ghz"] = p.target_frequency / (2 * np.pi * 1e9)
    return rec
