import csv
import hashlib
import inspect
import json

import pytest

from anyonsim import cli
from anyonsim.errors import NonConvergenceError, PhysicsInvariantError

DEEP_CFG = "omega_idle = 5.2, 5.15, 5.1, 5.05\ndelta = -0.5\nn_ph = 3\n"


def run(tmp_path, *argv, out="out"):
    code = cli.run([*argv, "--out", str(tmp_path / out)])
    return code, tmp_path / out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def artifacts(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


@pytest.fixture
def deep_cfg(tmp_path):
    path = tmp_path / "deep.cfg"
    path.write_text(DEEP_CFG)
    return str(path)


class TestCommands:
    def test_ghz_gate(self, tmp_path):
        code, out = run(tmp_path, "ghz", "--shots", "2000")
        assert code == 0
        report = json.loads((out / "ghz_report.json").read_text())
        assert report["fidelity"] == pytest.approx(1.0, abs=1e-12)
        assert report["tomography"]["mle_fidelity"] > 0.95
        assert report["witness"]["passes"]
        with open(out / "ghz_rho_bars.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 256 and rows[15]["col_label"] == "1111"

    def test_e_anyon_gate(self, tmp_path):
        code, out = run(tmp_path, "e-anyon", "--no-tomography")
        assert code == 0
        assert json.loads((out / "e_anyon_report.json").read_text())["fidelity"] == pytest.approx(1.0)

    def test_braid_gate_exact(self, tmp_path):
        code, out = run(tmp_path, "braid", "--shots", "0")
        assert code == 0
        report = json.loads((out / "braid_phase_report.json").read_text())
        phis = report["phi_over_pi"]
        assert abs(phis["empty_vertex"]) < 1e-9 and abs(phis["e_vertex"]) < 1e-9
        assert abs(abs(phis["half_filled"]) - 1) < 1e-9
        assert abs(abs(report["empty_vertex->half_filled"]["delta_phi_over_pi"]) - 1) < 1e-9
        assert {f"scan_{n}.csv" for n in ("empty_vertex", "e_vertex", "half_filled")} <= set(artifacts(out))
        assert (out / "braid_plot.svg").read_text().startswith("<svg")

    def test_ramsey_no_dephasing(self, tmp_path):
        code, out = run(tmp_path, "ramsey", "--t1", "600", "--points", "25")
        assert code == 0
        with open(out / "ramsey_fit.csv") as fh:
            fit = {r["model"]: r for r in csv.DictReader(fh)}
        assert float(fit["exponential"]["t2_ns"]) == pytest.approx(1200, rel=0.02)
        assert float(fit["exponential"]["residual_rms"]) < 0.01

    def test_ramsey_dephased(self, tmp_path):
        code, out = run(tmp_path, "ramsey", "--t1", "600", "--t2eff", "300", "--points", "25")
        assert code == 0
        with open(out / "ramsey_fit.csv") as fh:
            fit = {r["model"]: r for r in csv.DictReader(fh)}
        assert float(fit["exponential"]["t2_ns"]) < 1200

    def test_pulse_ghz_deep(self, tmp_path, deep_cfg):
        code, out = run(tmp_path, "ghz", "--backend", "pulse", "--config", deep_cfg, "--no-tomography")
        assert code == 0
        assert json.loads((out / "ghz_report.json").read_text())["fidelity"] >= 0.99
        dev = manifest(out)["config"]["device"]
        assert dev["n_ph"] == 3 and dev["tau_policy"] == "tuned"
        assert "ghz_sequence.json" in artifacts(out)


class TestManifest:
    def test_hashes_cover_every_file(self, tmp_path):
        code, out = run(tmp_path, "ghz", "--shots", "500")
        assert code == 0
        doc = manifest(out)
        listed = {a["file"]: a["sha256"] for a in doc["artifacts"]}
        files = artifacts(out)
        assert set(listed) == set(files)
        for name, data in files.items():
            assert listed[name] == hashlib.sha256(data).hexdigest()
        assert doc["library_version"] and doc["wall_seconds"] >= 0
        assert doc["config"]["seed"] == 0 and doc["config"]["backend"] == "gate"

    @pytest.mark.parametrize("argv", [("ghz", "--shots", "300"), ("e-anyon", "--shots", "300"),
                                      ("braid", "--shots", "300"), ("ramsey", "--t1", "600", "--points", "9")])
    def test_byte_deterministic(self, tmp_path, argv):
        _, a = run(tmp_path, *argv, "--seed", "11", out="a")
        _, b = run(tmp_path, *argv, "--seed", "11", out="b")
        assert artifacts(a) == artifacts(b)
        ma, mb = manifest(a), manifest(b)
        ma.pop("wall_seconds"), mb.pop("wall_seconds")
        assert ma == mb

    def test_seed_changes_counts(self, tmp_path):
        _, a = run(tmp_path, "braid", "--shots", "300", "--seed", "1", out="a")
        _, b = run(tmp_path, "braid", "--shots", "300", "--seed", "2", out="b")
        assert artifacts(a)["scan_half_filled.csv"] != artifacts(b)["scan_half_filled.csv"]


class TestLayering:
    def test_gate_backend_never_loads_device(self, tmp_path, monkeypatch):
        def forbidden(cfg):
            raise AssertionError("device loaded")

        monkeypatch.setattr(cli, "load_device", forbidden)
        for cmd in ("ghz", "e-anyon", "braid"):
            assert run(tmp_path, cmd, "--shots", "200", out=cmd)[0] == 0

    def test_no_environment_lookups(self):
        src = inspect.getsource(cli)
        assert "environ" not in src and "getenv" not in src


class TestExitCodes:
    def test_config_error_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("seed = 3\nspeed = 9\n")
        code, _ = run(tmp_path, "ghz", "--config", str(bad))
        assert code == cli.EXIT_CONFIG
        assert f"{bad}:2:" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [("ghz", "--shots", "-1"), ("braid", "--gammas", "5"),
                                      ("ghz", "--noise", "missing.json"), ("ramsey", "--points", "2")])
    def test_invalid_flags(self, tmp_path, argv):
        assert run(tmp_path, *argv)[0] == cli.EXIT_CONFIG

    def test_bad_dt(self, tmp_path):
        cfg = tmp_path / "dt.cfg"
        cfg.write_text(DEEP_CFG + "dt = 0\n")
        assert run(tmp_path, "ghz", "--backend", "pulse", "--config", str(cfg))[0] == cli.EXIT_CONFIG

    def test_unreachable_target(self, tmp_path, deep_cfg):
        assert run(tmp_path, "calibrate", "--config", deep_cfg, "--target", "0.05")[0] == cli.EXIT_CONFIG

    @pytest.mark.parametrize("exc,code", [(PhysicsInvariantError("trace drift"), 3),
                                          (NonConvergenceError("bisection stalled"), 4)])
    def test_failure_codes(self, tmp_path, monkeypatch, exc, code):
        def boom(cfg):
            raise exc

        monkeypatch.setitem(cli.COMMANDS, "ghz", boom)
        assert run(tmp_path, "ghz")[0] == code
        assert not (tmp_path / "out" / "manifest.json").exists()


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        cli.run(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.startswith("anyonsim ")
