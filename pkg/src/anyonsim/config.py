"""Flat key-value configuration files.

One ``key = value`` per line, ``#`` starts a comment. Frequencies are in GHz
(cyclic, converted to rad/s), times in ns, rates in 1/ns. Lists are
comma-separated. Recognised keys:

    omega_r           resonator frequency                         6.2
    omega_idle        idle qubit frequencies                      5.7, 5.65, 5.6, 5.55
    g                 qubit-resonator coupling                    0.0155
    delta             interaction detuning from the resonator     -0.057
    n_ph              resonator levels kept                       5
    interaction_time  excursion length in ns, or "formula"/"tuned"  tuned
    t1                energy relaxation time(s)                   600
    t2eff             effective dephasing time(s)                 (noise off)
    resonator_kappa   photon loss rate                            0
    shots, seed, gammas, dt, tomography (on/off)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics.params import GHZ, NS, DeviceParams, NoiseParams
from .errors import ConfigError, InvalidInputError

DEVICE_KEYS = {"omega_r", "omega_idle", "g", "delta", "n_ph", "interaction_time"}
NOISE_KEYS = {"t1", "t2eff", "resonator_kappa"}
RUN_KEYS = {"shots", "seed", "gammas", "dt", "tomography"}
KNOWN = DEVICE_KEYS | NOISE_KEYS | RUN_KEYS


@dataclass(frozen=True)
class Entry:
    value: str
    line: int


@dataclass(frozen=True)
class KVConfig:
    entries: dict = field(default_factory=dict)
    path: str | None = None

    def has(self, key: str) -> bool:
        return key in self.entries

    def _fail(self, key: str, msg: str):
        e = self.entries.get(key)
        raise ConfigError(f"{key}: {msg}", e.line if e else None, self.path)

    def get_float(self, key: str, default=None) -> float | None:
        if key not in self.entries:
            return default
        try:
            return float(self.entries[key].value)
        except ValueError:
            self._fail(key, f"expected a number, got {self.entries[key].value!r}")

    def get_int(self, key: str, default=None) -> int | None:
        if key not in self.entries:
            return default
        try:
            return int(self.entries[key].value)
        except ValueError:
            self._fail(key, f"expected an integer, got {self.entries[key].value!r}")

    def get_list(self, key: str, default=None) -> list[float] | None:
        if key not in self.entries:
            return default
        try:
            return [float(x) for x in self.entries[key].value.split(",") if x.strip()]
        except ValueError:
            self._fail(key, f"expected comma-separated numbers, got {self.entries[key].value!r}")

    def get_str(self, key: str, default=None) -> str | None:
        return self.entries[key].value if key in self.entries else default

    def get_bool(self, key: str, default: bool = False) -> bool:
        if key not in self.entries:
            return default
        v = self.entries[key].value.lower()
        if v in ("on", "true", "yes", "1"):
            return True
        if v in ("off", "false", "no", "0"):
            return False
        self._fail(key, f"expected on/off, got {self.entries[key].value!r}")


def parse_kv(text: str, path: str | None = None, allowed=KNOWN) -> KVConfig:
    entries = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", n, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", n, path)
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", n, path)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first on line {entries[key].line})", n, path)
        if not value:
            raise ConfigError(f"missing value for {key!r}", n, path)
        entries[key] = Entry(value, n)
    return KVConfig(entries, path)


def load_kv(path) -> KVConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(p)) from exc
    return parse_kv(text, str(p))


def device_from_kv(cfg: KVConfig) -> tuple[DeviceParams, str]:
    """DeviceParams plus the interaction-time policy ("formula", "tuned" or "fixed")."""
    base = DeviceParams()
    kw = {}
    if cfg.has("omega_r"):
        kw["omega_r"] = cfg.get_float("omega_r") * GHZ
    if cfg.has("omega_idle"):
        kw["omega_idle"] = tuple(w * GHZ for w in cfg.get_list("omega_idle"))
    if cfg.has("g"):
        kw["g"] = cfg.get_float("g") * GHZ
    if cfg.has("delta"):
        kw["delta_int"] = cfg.get_float("delta") * GHZ
    if cfg.has("n_ph"):
        kw["n_ph"] = cfg.get_int("n_ph")
    policy = "tuned"
    it = cfg.get_str("interaction_time")
    if it is not None:
        if it in ("formula", "tuned"):
            policy = it
        else:
            policy = "fixed"
            kw["interaction_time"] = cfg.get_float("interaction_time") * NS
    try:
        return base.replace(**kw), policy
    except InvalidInputError as exc:
        key = next((k for k in DEVICE_KEYS if cfg.has(k)), None)
        line = cfg.entries[key].line if key else None
        raise ConfigError(str(exc), line, cfg.path) from exc


def noise_from_kv(cfg: KVConfig, n_qubits: int = 4) -> NoiseParams | None:
    if not cfg.has("t2eff") and not cfg.has("t1"):
        return None
    t1 = cfg.get_list("t1", [600.0])
    t2 = cfg.get_list("t2eff", [2 * x for x in t1])
    kappa = cfg.get_float("resonator_kappa", 0.0)
    try:
        return NoiseParams(tuple(x * NS for x in t1), tuple(x * NS for x in t2),
                           kappa / NS).for_qubits(n_qubits)
    except (InvalidInputError, ValueError) as exc:
        line = cfg.entries["t2eff"].line if cfg.has("t2eff") else None
        raise ConfigError(str(exc), line, cfg.path) from exc


def noise_to_json(noise: NoiseParams) -> dict:
    return {"t1_ns": [t / NS for t in noise.t1], "t2eff_ns": [t / NS for t in noise.t2eff],
            "resonator_kappa_per_ns": noise.resonator_kappa * NS}


def load_noise(path, n_qubits: int = 4) -> NoiseParams | None:
    """Noise from a calibration JSON or a key-value file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read noise file: {exc.strerror}", None, str(p)) from exc
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            noise = NoiseParams(tuple(x * NS for x in doc["t1_ns"]), tuple(x * NS for x in doc["t2eff_ns"]),
                                doc.get("resonator_kappa_per_ns", 0.0) / NS)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, str(p)) from exc
        except (KeyError, TypeError, InvalidInputError, ValueError) as exc:
            raise ConfigError(f"bad noise document: {exc}", None, str(p)) from exc
        return noise.for_qubits(n_qubits)
    return noise_from_kv(parse_kv(text, str(p), NOISE_KEYS), n_qubits)
