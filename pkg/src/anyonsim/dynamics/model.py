"""Structured representation of the qubits-plus-resonator Hamiltonian.

In the frame rotating at the resonator frequency,

    H(t) = sum_j d_j(t) s+_j s-_j + g sum_j (s+_j a + s-_j a+)
           + sum_j (u_j(t) s+_j + conj(u_j(t)) s-_j),

with ``d_j = omega_j(t) - omega_r`` and the rotating-wave drive
``u_j = (Omega/2) exp(i psi)``, i.e. ``(Omega/2)(cos psi X + sin psi Y)``.
Index ``i = q * n_ph + n`` with qubit Q1 the most significant bit of ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..hilbert import SIGMA_MINUS, HilbertSpace, Operator, embed
from .params import DeviceParams, NoiseParams


@dataclass(frozen=True, eq=False)
class CircuitModel:
    n_qubits: int
    n_ph: int
    g: float

    @classmethod
    def from_params(cls, params: DeviceParams) -> "CircuitModel":
        return _model_cache(params.n_qubits, params.n_ph, float(params.g))

    @property
    def dim(self) -> int:
        return (2**self.n_qubits) * self.n_ph

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace((2,) * self.n_qubits + (self.n_ph,))

    @cached_property
    def exc(self) -> np.ndarray:
        """``exc[j, i]``: excitation of qubit j in basis state i."""
        q = np.arange(self.dim) // self.n_ph
        shifts = self.n_qubits - 1 - np.arange(self.n_qubits)
        return ((q[None, :] >> shifts[:, None]) & 1).astype(np.float64)

    @cached_property
    def nphot(self) -> np.ndarray:
        return (np.arange(self.dim) % self.n_ph).astype(np.float64)

    @cached_property
    def flips(self) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs (lo, hi) with qubit j in |0> and |1>, shape (n_qubits, dim/2)."""
        lo = np.stack([np.flatnonzero(self.exc[j] == 0) for j in range(self.n_qubits)])
        hi = lo + (1 << (self.n_qubits - 1 - np.arange(self.n_qubits)))[:, None] * self.n_ph
        return lo.astype(np.int64), hi.astype(np.int64)

    @cached_property
    def couplings(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``s+_j a`` maps src -> dst with amplitude sqrt(n); arrays of shape (n_qubits, m)."""
        src, dst, amp = [], [], []
        for j in range(self.n_qubits):
            mask = (self.exc[j] == 0) & (self.nphot >= 1)
            s = np.flatnonzero(mask)
            src.append(s)
            dst.append(s + (1 << (self.n_qubits - 1 - j)) * self.n_ph - 1)
            amp.append(np.sqrt(self.nphot[s]))
        return (np.stack(src).astype(np.int64), np.stack(dst).astype(np.int64),
                np.stack(amp).astype(np.float64))

    @cached_property
    def resonator_jumps(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = np.flatnonzero(self.nphot >= 1)
        return s.astype(np.int64), (s - 1).astype(np.int64), np.sqrt(self.nphot[s])

    # dense operators, used by the numpy path and by diagnostics
    @cached_property
    def sigma_minus(self) -> list[np.ndarray]:
        return [embed(SIGMA_MINUS, [j], self.space).matrix for j in range(self.n_qubits)]

    @cached_property
    def a(self) -> np.ndarray:
        a1 = np.diag(np.sqrt(np.arange(1, self.n_ph)), 1).astype(complex)
        return embed(a1, [self.n_qubits], self.space).matrix

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """``g sum_j (s+_j a + s-_j a+)`` as a dense matrix."""
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for sm in self.sigma_minus:
            h += sm.conj().T @ self.a
        return self.g * (h + h.conj().T)

    def total_excitation(self) -> Operator:
        n = np.diag(self.exc.sum(axis=0) + self.nphot).astype(complex)
        return Operator(self.space, n, is_hermitian=True)

    def dense_hamiltonian(self, detunings, drives) -> np.ndarray:
        h = self.coupling_matrix.copy()
        h[np.diag_indices(self.dim)] += np.asarray(detunings, dtype=float) @ self.exc
        lo, hi = self.flips
        for j, u in enumerate(np.asarray(drives, dtype=complex)):
            if u != 0:
                h[hi[j], lo[j]] += u
                h[lo[j], hi[j]] += np.conj(u)
        return h

    def decay_matrix(self, noise: NoiseParams) -> np.ndarray:
        """Element-wise part of the dissipator: ``drho_ab/dt += decay_ab * rho_ab``."""
        g1 = noise.gamma1
        gphi = noise.gamma_phi
        exc = self.exc
        m = np.zeros((self.dim, self.dim))
        for j in range(self.n_qubits):
            e = exc[j]
            m -= 0.5 * g1[j] * (e[:, None] + e[None, :])
            m -= 2.0 * gphi[j] * (e[:, None] != e[None, :])
        n = self.nphot
        m -= 0.5 * noise.resonator_kappa * (n[:, None] + n[None, :])
        return m


_MODELS: dict[tuple, CircuitModel] = {}


def _model_cache(n_qubits: int, n_ph: int, g: float) -> CircuitModel:
    key = (n_qubits, n_ph, g)
    if key not in _MODELS:
        _MODELS[key] = CircuitModel(n_qubits, n_ph, g)
    return _MODELS[key]
