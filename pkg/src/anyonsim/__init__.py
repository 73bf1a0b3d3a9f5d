"""Toric-code anyon braiding emulated on a four-qubit plus resonator circuit."""

__version__ = "0.1.0"

from . import dynamics, hilbert, interference, tomo, toric  # noqa: E402
from .errors import (AnyonsimError, ConfigError, DimensionMismatchError,  # noqa: E402
                     InvalidInputError, NonConvergenceError, PhysicsInvariantError)

__all__ = [
    "__version__", "dynamics", "hilbert", "interference", "tomo", "toric",
    "AnyonsimError", "ConfigError", "DimensionMismatchError", "InvalidInputError",
    "NonConvergenceError", "PhysicsInvariantError",
]
