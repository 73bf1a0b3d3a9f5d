"""Device and noise parameters (SI units: rad/s and seconds)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidInputError

TWO_PI = 2.0 * np.pi
GHZ = TWO_PI * 1e9
MHZ = TWO_PI * 1e6
NS = 1e-9


def _default_idle() -> tuple[float, ...]:
    return tuple(TWO_PI * 6.2e9 - MHZ * off for off in (500.0, 550.0, 600.0, 650.0))


@dataclass(frozen=True)
class DeviceParams:
    """Four qubits coupled to one resonator mode.

    ``interaction_time`` overrides the dispersive estimate ``pi*|delta|/(2 g^2)``
    when set.
    """

    omega_r: float = TWO_PI * 6.2e9
    omega_idle: tuple[float, ...] = field(default_factory=_default_idle)
    g: float = MHZ * 15.5
    delta_int: float = MHZ * -57.0
    n_ph: int = 5
    interaction_time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega_idle", tuple(float(w) for w in self.omega_idle))
        if self.n_ph < 2:
            raise InvalidInputError(f"resonator truncation n_ph must be >= 2, got {self.n_ph}")
        if not self.omega_idle:
            raise InvalidInputError("at least one qubit is required")
        if abs(self.delta_int) <= 2 * abs(self.g):
            raise InvalidInputError(
                f"|delta| = {abs(self.delta_int) / MHZ:.1f} MHz must exceed 2g = "
                f"{2 * abs(self.g) / MHZ:.1f} MHz"
            )
        if self.interaction_time is not None and self.interaction_time <= 0:
            raise InvalidInputError("interaction_time must be positive")

    @property
    def n_qubits(self) -> int:
        return len(self.omega_idle)

    @property
    def omega_int(self) -> float:
        return self.omega_r + self.delta_int

    @property
    def dispersive_time(self) -> float:
        """``pi*|delta|/(2 g^2)``: entangling time of the one-step protocol."""
        return np.pi * abs(self.delta_int) / (2.0 * self.g**2)

    @property
    def tau(self) -> float:
        return self.interaction_time if self.interaction_time is not None else self.dispersive_time

    def idle_detuning(self, j: int) -> float:
        return self.omega_idle[j] - self.omega_r

    def dressed_idle_detuning(self, j: int) -> float:
        """Idle qubit frequency relative to the resonator including the vacuum
        dispersive shift (exact single-excitation two-level result)."""
        d = self.idle_detuning(j)
        if self.g == 0 or d == 0:
            return d
        return 0.5 * d + np.sign(d) * np.sqrt(0.25 * d * d + self.g**2)

    def replace(self, **changes) -> "DeviceParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class NoiseParams:
    """Per-qubit T1 and effective Markovian T2 plus optional photon loss rate (1/s)."""

    t1: tuple[float, ...] = (600 * NS,) * 4
    t2eff: tuple[float, ...] = (1200 * NS,) * 4
    resonator_kappa: float = 0.0

    def __post_init__(self):
        t1, t2 = np.broadcast_arrays(np.atleast_1d(self.t1).astype(float),
                                     np.atleast_1d(self.t2eff).astype(float))
        t1, t2 = tuple(t1.tolist()), tuple(t2.tolist())
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2eff", t2)
        for a, b in zip(t1, t2):
            if a <= 0 or b <= 0:
                raise InvalidInputError("coherence times must be positive")
            if b > 2 * a * (1 + 1e-12):
                raise InvalidInputError(
                    f"t2eff = {b / NS:.1f} ns exceeds 2*t1 = {2 * a / NS:.1f} ns"
                )
        if self.resonator_kappa < 0:
            raise InvalidInputError("resonator_kappa must be non-negative")

    @classmethod
    def uniform(cls, t1: float, t2eff: float, n: int = 4, resonator_kappa: float = 0.0) -> "NoiseParams":
        return cls((t1,) * n, (t2eff,) * n, resonator_kappa)

    @property
    def gamma1(self) -> np.ndarray:
        return 1.0 / np.asarray(self.t1)

    @property
    def gamma_phi(self) -> np.ndarray:
        """Rate multiplying ``D[Z]``: ``1/(2 T_phi)`` with ``1/T_phi = 1/T2 - 1/(2 T1)``."""
        inv_tphi = 1.0 / np.asarray(self.t2eff) - 0.5 / np.asarray(self.t1)
        return 0.5 * np.clip(inv_tphi, 0.0, None)

    def for_qubits(self, n: int) -> "NoiseParams":
        if len(self.t1) == n:
            return self
        if len(self.t1) == 1:
            return NoiseParams((self.t1[0],) * n, (self.t2eff[0],) * n, self.resonator_kappa)
        raise InvalidInputError(f"noise given for {len(self.t1)} qubits, device has {n}")
