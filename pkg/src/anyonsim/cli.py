"""Command-line entry point.

    anyonsim ghz       GHZ preparation, optional tomography and witness
    anyonsim e-anyon   GHZ plus Z' on Q1 (one e anyon), tomography and witness
    anyonsim braid     the three parity scans and their phase difference
    anyonsim ramsey    single-qubit Ramsey sweep and envelope fits
    anyonsim calibrate bisect t2eff to a target GHZ fidelity

Exit codes: 0 success, 2 configuration or input error, 3 physics-invariant
violation, 4 non-convergence. Only explicit flags and the config file are
consulted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import KVConfig, device_from_kv, load_kv, load_noise, noise_from_kv, noise_to_json
from .errors import ConfigError, InvalidInputError, NonConvergenceError, PhysicsInvariantError
from .hilbert import PureState, fidelity, to_json_dict
from .interference import (BRAID_SET, GateBackend, PulseBackend, braiding_phase_difference,
                           default_gammas, fit_cosine, run_scan)
from .svg import matrix_plot, parity_plot
from .tomo import DEFAULT_SHOTS, ghz_witness, reconstruct_linear, reconstruct_mle, simulate_tomography
from .toric import ghz_state

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_CONVERGENCE = 0, 2, 3, 4
NS = 1e-9


@dataclass
class RunConfig:
    command: str
    backend: str = "gate"
    shots: int = DEFAULT_SHOTS
    seed: int = 0
    out_dir: Path = Path("anyonsim_out")
    gammas: int = 21
    tomography: bool = True
    noise: object = None
    noise_source: str = "off"
    kv: KVConfig = field(default_factory=KVConfig)
    extra: dict = field(default_factory=dict)

    def snapshot(self) -> dict:
        snap = {"command": self.command, "backend": self.backend, "shots": self.shots, "seed": self.seed,
                "gammas": self.gammas, "tomography": self.tomography, "noise_source": self.noise_source,
                "noise": None if self.noise is None else noise_to_json(self.noise),
                "config_entries": {k: e.value for k, e in sorted(self.kv.entries.items())}}
        snap.update(self.extra)
        return snap


# ---------------------------------------------------------------------------
# helpers

def _json(obj) -> bytes:
    return (json.dumps(obj, indent=1, sort_keys=True) + "\n").encode()


def load_device(cfg: RunConfig):
    """DeviceParams for pulse runs with the interaction time resolved by policy."""
    from .dynamics.protocol import tuned_params

    params, policy = device_from_kv(cfg.kv)
    if policy == "tuned":
        params = tuned_params(params)
    cfg.extra["device"] = {
        "omega_r_ghz": params.omega_r / (2e9 * np.pi),
        "omega_idle_ghz": [w / (2e9 * np.pi) for w in params.omega_idle],
        "g_ghz": params.g / (2e9 * np.pi), "delta_ghz": params.delta_int / (2e9 * np.pi),
        "n_ph": params.n_ph, "tau_ns": params.tau / NS, "tau_policy": policy,
        "dispersive_time_ns": params.dispersive_time / NS,
    }
    return params


def _dt(cfg: RunConfig):
    dt = cfg.kv.get_float("dt")
    if dt is not None and dt <= 0:
        cfg.kv._fail("dt", "must be positive")
    return None if dt is None else dt * NS


def _labels(n: int) -> list[str]:
    return [format(i, f"0{n}b") for i in range(2**n)]


def _state_products(name: str, rho_true, target: PureState, cfg: RunConfig, extra: dict) -> dict:
    """Tomography (optional), rho JSON, bar-chart data, SVG and the fidelity report."""
    files = {}
    report = dict(extra)
    report["fidelity"] = fidelity(rho_true, target)
    rho_out = rho_true
    if cfg.tomography:
        shots = cfg.shots if cfg.shots > 0 else None
        data = simulate_tomography(rho_true, shots, cfg.seed)
        files[f"{name}_tomography.json"] = (data.to_json() + "\n").encode()
        lin = reconstruct_linear(data)
        mle = reconstruct_mle(data)
        rho_out = mle.rho
        wit = ghz_witness(mle.rho, target, data if shots else None, seed=cfg.seed)
        report["tomography"] = {
            "shots_per_setting": shots, "settings": mle.settings_used,
            "linear_fidelity": fidelity(lin.rho, target), "linear_psd_distance": lin.psd_distance,
            "mle_fidelity": wit.fidelity, "mle_iterations": mle.iterations, "mle_converged": mle.converged,
            "max_imag": float(np.abs(mle.rho.matrix.imag).max()),
        }
        report["witness"] = wit.to_dict()
    else:
        wit = ghz_witness(rho_true, target)
        report["witness"] = wit.to_dict()
    files[f"{name}_rho.json"] = _json(to_json_dict(rho_out))
    m = rho_out.matrix
    n = rho_out.space.n_factors
    labs = _labels(n)
    rows = ["row,col,row_label,col_label,re,im"]
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            rows.append(f"{i},{j},{labs[i]},{labs[j]},{m[i, j].real!r},{m[i, j].imag!r}")
    files[f"{name}_rho_bars.csv"] = ("\n".join(rows) + "\n").encode()
    files[f"{name}_rho_real.svg"] = matrix_plot(m.real, f"Re(ρ) {name}, primed basis", labs).encode()
    files[f"{name}_report.json"] = _json(report)
    return files


def _prepared_state(cfg: RunConfig, ops):
    if cfg.backend == "gate":
        return GateBackend().primed_state(ops), {}, None
    params = load_device(cfg)
    be = PulseBackend(params, cfg.noise, _dt(cfg))
    rho = be.primed_state(ops)
    adj = be.prep.adjustment
    extra = {"phase_adjustment": {"axes_rad": list(adj.axes), "angles_rad": list(adj.angles),
                                  "optimizer_fidelity": adj.fidelity, "evaluations": adj.evaluations,
                                  "converged": adj.converged}}
    return rho, extra, be


# ---------------------------------------------------------------------------
# commands

def cmd_ghz(cfg: RunConfig) -> dict:
    out = _prepared_state(cfg, ())
    rho, extra = out[0], out[1]
    files = _state_products("ghz", rho, ghz_state(4, +1), cfg, extra)
    if cfg.backend == "pulse":
        files["ghz_sequence.json"] = (out[2].prep.sequence.to_json() + "\n").encode()
    return files


def cmd_e_anyon(cfg: RunConfig) -> dict:
    out = _prepared_state(cfg, (("Z'", 0),))
    return _state_products("e_anyon", out[0], ghz_state(4, -1), cfg, out[1])


def cmd_braid(cfg: RunConfig) -> dict:
    backend = GateBackend() if cfg.backend == "gate" else PulseBackend(load_device(cfg), cfg.noise, _dt(cfg))
    gammas = default_gammas(cfg.gammas)
    shots = cfg.shots if cfg.shots > 0 else None
    files, fits, series = {}, {}, []
    fine = np.linspace(0, np.pi, 181)
    for k, name in enumerate(BRAID_SET):
        scan = run_scan(name, gammas, shots, backend, seed=cfg.seed + k)
        fit = fit_cosine(scan)
        fits[name] = fit
        files[f"scan_{name}.csv"] = scan.to_csv().encode()
        files[f"fit_{name}.json"] = _json(fit.to_dict())
        series.append((name, scan.gammas, scan.values, scan.errors, fine, fit.curve(fine)))
    diffs = {
        "empty_vertex->half_filled": braiding_phase_difference(fits["empty_vertex"], fits["half_filled"]).to_dict(),
        "empty_vertex->e_vertex": braiding_phase_difference(fits["empty_vertex"], fits["e_vertex"]).to_dict(),
        "phi_over_pi": {k: f.phi / np.pi for k, f in fits.items()},
    }
    files["braid_phase_report.json"] = _json(diffs)
    rows = ["gamma_rad," + ",".join(f"fit_{n}" for n in BRAID_SET)]
    for i, g in enumerate(fine):
        rows.append(f"{g!r}," + ",".join(f"{s[5][i]!r}" for s in series))
    files["braid_plot.csv"] = ("\n".join(rows) + "\n").encode()
    files["braid_plot.svg"] = parity_plot(series, f"parity scans ({cfg.backend} backend)").encode()
    return files


def cmd_ramsey(cfg: RunConfig) -> dict:
    from .dynamics.ramsey import fit_envelope, ramsey_sweep

    opts = cfg.extra["ramsey"]
    t1 = opts["t1_ns"] * NS
    t2 = None if opts["t2eff_ns"] is None else opts["t2eff_ns"] * NS
    t2s = None if opts["t2star_ns"] is None else opts["t2star_ns"] * NS
    horizon = opts["tau_max_ns"]
    if horizon is None:
        horizon = 3 * (2 * opts["t1_ns"] if t2 is None else opts["t2eff_ns"])
        if t2s is not None:
            horizon = min(horizon, 1.5 * opts["t2star_ns"])
    taus = np.linspace(0.0, horizon, opts["points"]) * NS
    res = ramsey_sweep(taus, t1, t2, t2s)
    rows = ["tau_ns,envelope,p1_x,p1_y"]
    rows += [f"{t / NS!r},{e!r},{a!r},{b!r}" for t, e, a, b in res.to_rows()]
    fits = [fit_envelope(taus, res.envelope, "exponential"), fit_envelope(taus, res.envelope, "gaussian")]
    out = ["model,t1_ns,t2_ns,t2star_ns,amplitude,residual_rms"]

    def ns(x):
        return "" if x is None else repr(x / NS)

    for f in fits:
        out.append(f"{f.model},{ns(f.t1)},{ns(f.t2)},{ns(f.t2star)},{f.amplitude!r},{f.residual_rms!r}")
    return {"ramsey.csv": ("\n".join(rows) + "\n").encode(), "ramsey_fit.csv": ("\n".join(out) + "\n").encode()}


def cmd_calibrate(cfg: RunConfig) -> dict:
    from .dynamics.params import NoiseParams
    from .dynamics.protocol import calibrate_t2eff

    params = load_device(cfg)
    target = cfg.extra["calibrate"]["target"]
    t1 = cfg.extra["calibrate"]["t1_ns"] * NS
    cal = calibrate_t2eff(params, target, t1, dt=_dt(cfg))
    noise = NoiseParams.uniform(t1, cal.t2eff, params.n_qubits)
    doc = noise_to_json(noise)
    doc.update({"target_fidelity": target, "achieved_fidelity": cal.fidelity, "t2eff_common_ns": cal.t2eff / NS,
                "at_bracket_edge": cal.at_bracket_edge,
                "probes": [{"t2eff_ns": t / NS, "fidelity": f} for t, f in cal.probes]})
    return {"calibration.json": _json(doc)}


COMMANDS = {"ghz": cmd_ghz, "e-anyon": cmd_e_anyon, "braid": cmd_braid,
            "ramsey": cmd_ramsey, "calibrate": cmd_calibrate}


# ---------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key-value config file")
    common.add_argument("--backend", choices=("gate", "pulse"), help="ideal gates or pulse-level simulation")
    common.add_argument("--noise", help="'off' or a noise file (calibration JSON or key-value)")
    common.add_argument("--shots", type=int, help=f"shots per setting or gamma point, 0 = exact (default {DEFAULT_SHOTS})")
    common.add_argument("--seed", type=int, help="RNG seed (default 0)")
    common.add_argument("--out", type=Path, default=Path("anyonsim_out"), help="output directory")
    common.add_argument("--gammas", type=int, help="gamma grid points on [0, pi] (default 21)")
    tomo = argparse.ArgumentParser(add_help=False)
    tomo.add_argument("--no-tomography", action="store_true", help="skip state tomography")

    p = argparse.ArgumentParser(prog="anyonsim", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"anyonsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ghz", parents=[common, tomo], help="GHZ preparation")
    sub.add_parser("e-anyon", parents=[common, tomo], help="GHZ with an e anyon on the vertex")
    sub.add_parser("braid", parents=[common], help="parity scans of the braiding experiment")
    r = sub.add_parser("ramsey", parents=[common], help="single-qubit Ramsey sweep")
    r.add_argument("--t1", type=float, help="T1 in ns (default 600)")
    r.add_argument("--t2eff", type=float, help="Markovian T2 in ns (default 2 T1)")
    r.add_argument("--t2star", type=float, help="quasi-static Gaussian dephasing time in ns")
    r.add_argument("--tau-max", type=float, help="longest delay in ns (default 3 T2)")
    r.add_argument("--points", type=int, default=31, help="number of delays")
    c = sub.add_parser("calibrate", parents=[common], help="fit t2eff to a GHZ fidelity")
    c.add_argument("--target", type=float, default=0.574, help="target GHZ fidelity")
    c.add_argument("--t1", type=float, help="T1 in ns (default 600)")
    return p


def resolve(args) -> RunConfig:
    kv = load_kv(args.config) if args.config else KVConfig()
    cfg = RunConfig(args.command, out_dir=args.out)
    cfg.kv = kv
    cfg.backend = args.backend or "gate"
    if args.command in ("calibrate", "ramsey"):
        cfg.backend = "pulse"
    cfg.shots = args.shots if args.shots is not None else kv.get_int("shots", DEFAULT_SHOTS)
    cfg.seed = args.seed if args.seed is not None else kv.get_int("seed", 0)
    cfg.gammas = args.gammas if args.gammas is not None else kv.get_int("gammas", 21)
    cfg.tomography = kv.get_bool("tomography", True) and not getattr(args, "no_tomography", False)
    if cfg.shots < 0:
        raise ConfigError("--shots must be non-negative")
    if cfg.gammas < 8:
        raise ConfigError("--gammas must be at least 8 for a cosine fit")
    if args.noise is None:
        cfg.noise = noise_from_kv(kv)
        cfg.noise_source = "config" if cfg.noise is not None else "off"
    elif args.noise == "off":
        cfg.noise, cfg.noise_source = None, "off"
    else:
        cfg.noise, cfg.noise_source = load_noise(args.noise), Path(args.noise).name
    if args.command == "ramsey":
        t1 = args.t1 if args.t1 is not None else (cfg.noise.t1[0] / NS if cfg.noise else 600.0)
        t2 = args.t2eff if args.t2eff is not None else (cfg.noise.t2eff[0] / NS if cfg.noise else None)
        if args.points < 3:
            raise ConfigError("--points must be at least 3")
        cfg.extra["ramsey"] = {"t1_ns": t1, "t2eff_ns": t2, "t2star_ns": args.t2star,
                               "tau_max_ns": args.tau_max, "points": args.points}
    if args.command == "calibrate":
        t1 = args.t1 if args.t1 is not None else kv.get_float("t1", 600.0)
        cfg.extra["calibrate"] = {"target": args.target, "t1_ns": t1}
    return cfg


def write_outputs(cfg: RunConfig, files: dict, started: float) -> Path:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    listing = []
    for name in sorted(files):
        data = files[name]
        (out / name).write_bytes(data)
        listing.append({"file": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    manifest = {"library_version": __version__, "config": cfg.snapshot(), "artifacts": listing,
                "wall_seconds": round(time.perf_counter() - started, 3)}
    path = out / "manifest.json"
    path.write_bytes(_json(manifest))
    return path


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = resolve(args)
        files = COMMANDS[args.command](cfg)
        manifest = write_outputs(cfg, files, started)
    except (ConfigError, InvalidInputError) as exc:
        print(f"anyonsim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsInvariantError as exc:
        print(f"anyonsim: physics invariant violated: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except NonConvergenceError as exc:
        print(f"anyonsim: did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(f"wrote {len(files)} artifacts and {manifest}")
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
