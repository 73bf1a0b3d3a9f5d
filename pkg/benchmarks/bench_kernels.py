"""Compare the numba and pure-numpy propagation kernels.

    python3 benchmarks/bench_kernels.py [--steps 2000] [--n-ph 5]

Inputs mimic an interaction-picture segment of the GHZ protocol: four qubits,
a resonator truncated at ``n_ph`` levels, constant drives and couplings with
random phases. Both kernels run on identical inputs; the script reports wall
time per step and the largest difference between their outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from anyonsim import _kernels
from anyonsim.dynamics.model import CircuitModel
from anyonsim.dynamics.params import MHZ, NS, NoiseParams


def _inputs(n_ph: int, steps: int, dt: float, seed: int = 0):
    model = CircuitModel(4, n_ph, 15.5 * MHZ)
    rng = np.random.default_rng(seed)
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(steps, 3, 4)))
    drv = 2 * np.pi * 20 * MHZ * phase
    cpl = model.g * phase.conj()
    lo, hi = model.flips
    csrc, cdst, camp = model.couplings
    rsrc, rdst, ramp = model.resonator_jumps
    noise = NoiseParams.uniform(600 * NS, 500 * NS, 4)
    psi = np.zeros(model.dim, complex)
    psi[0] = 1
    rho = np.outer(psi, psi.conj())
    lind = (rho, np.full(steps, dt), drv, cpl, lo, hi, csrc, cdst, camp, model.decay_matrix(noise),
            np.ascontiguousarray(noise.gamma1), 0.0, rsrc, rdst, ramp)
    det = rng.uniform(-600, 600, size=(steps, 4)) * MHZ
    uni = (psi, np.full(steps, dt), det, drv[:, 1], model.exc, lo, hi, csrc, cdst, camp, model.g)
    return lind, uni


def _time(fn, args, repeat: int = 3) -> tuple[float, object]:
    best, out = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--n-ph", type=int, default=5)
    ap.add_argument("--dt-ns", type=float, default=0.05)
    a = ap.parse_args(argv)
    lind, uni = _inputs(a.n_ph, a.steps, a.dt_ns * NS)
    print(f"dim = {16 * a.n_ph}, steps = {a.steps}, active backend = {_kernels.BACKEND}")
    if not _kernels.HAVE_NUMBA:
        print("numba not importable; only the numpy kernels can be timed")
    rows = [("lindblad_rk4", _kernels.lindblad_rk4_numpy, getattr(_kernels, "lindblad_rk4_numba", None), lind),
            ("unitary_steps", _kernels.unitary_steps_numpy, getattr(_kernels, "unitary_steps_numba", None), uni)]
    for name, np_fn, nb_fn, args in rows:
        t_np, out_np = _time(np_fn, args, repeat=1)
        line = f"{name:14s} numpy {1e6 * t_np / a.steps:9.1f} us/step"
        if nb_fn is not None:
            nb_fn(*args)  # compile
            t_nb, out_nb = _time(nb_fn, args)
            diff = float(np.abs(out_np[0] - out_nb[0]).max())
            line += f"   numba {1e6 * t_nb / a.steps:8.1f} us/step   speedup {t_np / t_nb:6.1f}x   max|diff| {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()
