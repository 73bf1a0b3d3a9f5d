"""Pulse-level simulation of four qubits coupled to one resonator mode."""

from .evolve import EvolutionResult, evolve_lindblad, evolve_unitary, hamiltonian_at
from .frames import FrameTracker, primed_basis, track_frames, wrap_phase
from .gates import GHZPrep, Rotation, compose, gate_level_backend, parse_op
from .params import GHZ, MHZ, NS, TWO_PI, DeviceParams, NoiseParams
from .protocol import (GHZPreparation, PhaseAdjustment, PulseProgram, T2Calibration,
                       calibrate_interaction_time, calibrate_t2eff, continue_with, ghz_sequence,
                       optimize_phase_adjustments, prepare_ghz, tuned_params)
from .pulses import GaussianDrive, PulseSequence, SquareDetune, VirtualZ
from .ramsey import EnvelopeFit, RamseyResult, fit_envelope, ramsey_sweep

__all__ = [
    "EvolutionResult", "evolve_lindblad", "evolve_unitary", "hamiltonian_at",
    "FrameTracker", "primed_basis", "track_frames", "wrap_phase",
    "GHZPrep", "Rotation", "compose", "gate_level_backend", "parse_op",
    "GHZ", "MHZ", "NS", "TWO_PI", "DeviceParams", "NoiseParams",
    "GHZPreparation", "PhaseAdjustment", "PulseProgram", "T2Calibration",
    "calibrate_interaction_time", "calibrate_t2eff", "continue_with", "ghz_sequence",
    "optimize_phase_adjustments", "prepare_ghz", "tuned_params",
    "GaussianDrive", "PulseSequence", "SquareDetune", "VirtualZ",
    "EnvelopeFit", "RamseyResult", "fit_envelope", "ramsey_sweep",
]
