"""Abstract rotations and the ideal gate-level backend.

Gate-level states are expressed in primed coordinates: the computational
basis is |0'>, |1'> per qubit, so Z', X', Y' are the ordinary Pauli matrices.
The pi rotations Z', X', Y' and C_loop act as those Paulis, i.e. without the
global phase -i of ``exp(-i pi/2 sigma)``, so anyon phases read off directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from ..errors import InvalidInputError
from ..hilbert import I2, HilbertSpace, PureState, X, Y, Z
from ..toric import ghz_state

AXES = {"x": X, "y": Y, "z": Z}


@dataclass(frozen=True)
class Rotation:
    """``exp(-i angle/2 sigma_axis)`` on each listed qubit, all at once.

    With ``pauli=True`` (angle pi only) the bare Pauli ``sigma_axis`` is applied.
    """

    axis: str
    angle: float
    qubits: tuple[int, ...]
    label: str = ""
    pauli: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidInputError(f"unknown rotation axis {self.axis!r}")
        if len(set(self.qubits)) != len(self.qubits) or not self.qubits:
            raise InvalidInputError(f"bad qubit list {self.qubits}")
        if self.pauli and self.angle != np.pi:
            raise InvalidInputError("a Pauli gate is a rotation by pi")

    def single(self) -> np.ndarray:
        if self.pauli:
            return AXES[self.axis].astype(complex)
        c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
        return c * I2 - 1j * s * AXES[self.axis]

    def matrix(self, n: int) -> np.ndarray:
        if max(self.qubits) >= n or min(self.qubits) < 0:
            raise InvalidInputError(f"rotation on qubits {self.qubits} outside a {n}-qubit register")
        u = self.single()
        return reduce(np.kron, [u if k in self.qubits else I2 for k in range(n)])


@dataclass(frozen=True)
class GHZPrep:
    """Marker for an ideal GHZ preparation in the primed frame."""

    sign: int = +1
    label: str = "GHZ"


def parse_op(op, n: int = 4):
    """Accepts a Rotation, GHZPrep, or a label such as ``"Z'"``, ``("Z'/2", 0)``,
    ``("C_loop",)`` or ``("gamma", angle)``.

    Single-qubit labels default to qubit 0 (Q1); ``C_loop`` and ``gamma``
    act on every qubit.
    """
    if isinstance(op, (Rotation, GHZPrep)):
        return op
    if isinstance(op, str):
        op = (op,)
    label, *rest = op
    everyone = tuple(range(n))
    if label in ("GHZ", "ghz"):
        return GHZPrep()
    if label in ("C_loop", "X'x4"):
        return Rotation("x", np.pi, everyone, "C_loop", pauli=True)
    if label == "gamma":
        if not rest:
            raise InvalidInputError("gamma rotation needs an angle")
        return Rotation("z", float(rest[0]), everyone, "gamma")
    table = {
        "Z'": ("z", np.pi), "X'": ("x", np.pi), "Z'/2": ("z", np.pi / 2),
        "-Z'/2": ("z", -np.pi / 2), "X/2": ("x", np.pi / 2), "Y'": ("y", np.pi),
    }
    if label not in table:
        raise InvalidInputError(f"unknown operation label {label!r}")
    axis, angle = table[label]
    qubits = rest[0] if rest else 0
    qubits = tuple(qubits) if isinstance(qubits, (tuple, list)) else (int(qubits),)
    return Rotation(axis, angle, qubits, label, pauli=label in ("Z'", "X'", "Y'"))


def gate_level_backend(ops: Sequence, initial: PureState | None = None, n: int = 4) -> PureState:
    """Exact matrix application of ideal rotations in the primed frame."""
    if initial is None:
        initial = PureState.basis("0" * n)
    n = initial.space.n_factors
    vec = initial.amplitudes.copy()
    for op in ops:
        op = parse_op(op, n)
        if isinstance(op, GHZPrep):
            vec = ghz_state(n, op.sign).amplitudes.copy()
        else:
            vec = op.matrix(n) @ vec
    return PureState(HilbertSpace.qubits(n), vec)


def compose(ops: Iterable, n: int = 4) -> np.ndarray:
    """Unitary of a rotation list (no preparation markers)."""
    u = np.eye(2**n, dtype=complex)
    for op in ops:
        op = parse_op(op, n)
        if isinstance(op, GHZPrep):
            raise InvalidInputError("compose() cannot include a state preparation")
        u = op.matrix(n) @ u
    return u
