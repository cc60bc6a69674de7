import csv
import json
from pathlib import Path

import jsonschema
import pytest

from instability import cli

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def _load(path: Path) -> dict:
    return json.loads(path.read_text())


def _validate(payload: dict, schema_name: str) -> None:
    jsonschema.validate(payload, _load(SCHEMAS / schema_name))


def _rows(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


class TestBenchmarkCommand:
    def test_artifacts_and_schema(self, tmp_path):
        code = cli.main(["benchmark", "--r", "7", "--c", "15",
                         "--out-dir", str(tmp_path)])
        assert code == 0
        payload = _load(tmp_path / "benchmark.json")
        _validate(payload, "benchmark.schema.json")
        assert payload["threshold"] == pytest.approx(0.2904, abs=1e-3)
        assert payload["boundary_mode"] == "smooth_pasting"
        rows = _rows(tmp_path / "benchmark.csv")
        assert list(rows[0]) == ["x", "v", "control", "v_minus_identity"]
        # 17-significant-digit serialization round-trips
        assert float(rows[1]["x"]) == 0.0005

    def test_short_domain_absorbed(self, tmp_path):
        cli.main(["benchmark", "--r", "7", "--c", "15", "--domain-hi", "0.2",
                  "--out-dir", str(tmp_path)])
        assert _load(tmp_path / "benchmark.json")["boundary_mode"] == "absorbed"

    def test_invalid_r_exits_2_naming_key(self, tmp_path, capsys):
        code = cli.main(["benchmark", "--r", "0", "--c", "15",
                         "--out-dir", str(tmp_path)])
        assert code == 2
        assert "r" in capsys.readouterr().err

    def test_side_b_mirrors(self, tmp_path):
        cli.main(["benchmark", "--r", "7", "--c", "15", "--side", "b",
                  "--out-dir", str(tmp_path)])
        payload = _load(tmp_path / "benchmark.json")
        assert payload["threshold"] == pytest.approx(1.0 - 0.2904, abs=1e-3)


class TestEquilibriumCommand:
    def test_accommodating(self, tmp_path):
        code = cli.main(["equilibrium", "--ra", "7", "--ca", "15",
                         "--rb", "7", "--cb", "15", "--out-dir", str(tmp_path)])
        assert code == 0
        payload = _load(tmp_path / "equilibrium.json")
        _validate(payload, "equilibrium.schema.json")
        assert payload["regime"] == "accommodating"
        assert payload["pass"] is True
        assert payload["stable_lo"] == pytest.approx(0.2904, abs=1e-3)
        assert payload["stable_hi"] == pytest.approx(0.7096, abs=1e-3)

    def test_xbar_not_allowed_in_accommodating(self, tmp_path, capsys):
        code = cli.main(["equilibrium", "--ra", "7", "--ca", "15",
                         "--rb", "7", "--cb", "15", "--xbar", "0.5",
                         "--out-dir", str(tmp_path)])
        assert code == 2
        assert "xbar not allowed: accommodating regime" in capsys.readouterr().err

    def test_deterrence_balanced(self, tmp_path):
        code = cli.main(["equilibrium", "--ra", "1", "--ca", "2",
                         "--rb", "1", "--cb", "2", "--xbar", "0.5",
                         "--out-dir", str(tmp_path)])
        assert code == 0
        payload = _load(tmp_path / "equilibrium.json")
        _validate(payload, "equilibrium.schema.json")
        assert payload["regime"] == "deterrence"
        assert payload["xbar"] == 0.5
        assert payload["pass"] is True

    def test_deterrence_missing_xbar(self, tmp_path, capsys):
        code = cli.main(["equilibrium", "--ra", "1", "--ca", "2",
                         "--rb", "1", "--cb", "2", "--out-dir", str(tmp_path)])
        assert code == 2
        assert "xbar required" in capsys.readouterr().err

    def test_failed_verification_exits_4_with_artifacts(self, tmp_path):
        code = cli.main(["equilibrium", "--ra", "1", "--ca", "2",
                         "--rb", "1", "--cb", "2", "--xbar", "0.25",
                         "--n", "1001", "--out-dir", str(tmp_path)])
        assert code == 4
        payload = _load(tmp_path / "equilibrium.json")
        _validate(payload, "equilibrium.schema.json")
        assert payload["pass"] is False


class TestSimulateCommand:
    CFG = ["simulate", "--ra", "1", "--ca", "2", "--rb", "1", "--cb", "2",
           "--xbar", "0.5", "--x0", "0.1", "--dt", "1e-3", "--t-max", "5",
           "--n-paths", "50", "--seed", "3"]

    def test_artifacts_schema_and_determinism(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        assert cli.main(self.CFG + ["--out-dir", str(d1)]) == 0
        assert cli.main(self.CFG + ["--out-dir", str(d2)]) == 0
        assert (d1 / "sim_checkpoints.csv").read_bytes() == (
            d2 / "sim_checkpoints.csv"
        ).read_bytes()
        payload = _load(d1 / "sim.json")
        _validate(payload, "sim.schema.json")
        assert payload["region"] == "a_side"
        assert payload["containment_ok"] is True

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "ra=1\nca=2\nrb=1\ncb=2\nxbar=mid\nx0=0.1\ndt=1e-3\n"
            "t-max=5\nn-paths=10\nseed=3\n"
        )
        out = tmp_path / "out"
        code = cli.main(["simulate", "--config", str(cfg), "--seed", "4",
                         "--out-dir", str(out)])
        assert code == 0
        assert _load(out / "sim.json")["config"]["seed"] == 4
        assert _load(out / "sim.json")["config"]["x0"] == 0.1

    def test_stable_start(self, tmp_path):
        code = cli.main(["simulate", "--ra", "1", "--ca", "2", "--rb", "1",
                         "--cb", "2", "--xbar", "0.5", "--x0", "0.5",
                         "--dt", "1e-3", "--t-max", "2", "--n-paths", "10",
                         "--seed", "1", "--out-dir", str(tmp_path)])
        assert code == 0
        payload = _load(tmp_path / "sim.json")
        assert payload["terminal"]["frozen_fraction"] == 1.0
        assert payload["submartingale_ok"] is None
        rows = _rows(tmp_path / "sim_checkpoints.csv")
        assert all(r["frac_converged"] == "1" for r in rows)


class TestSweepCommand:
    def test_full_axis(self, tmp_path):
        code = cli.main(["sweep", "--rb", "7", "--cb", "15",
                         "--axis-lo", "200", "--axis-hi", "20",
                         "--axis-points", "21", "--out-dir", str(tmp_path)])
        assert code == 0
        payload = _load(tmp_path / "sweep.json")
        _validate(payload, "sweep.schema.json")
        assert payload["regime_flips"] == 1
        assert payload["theta"] == pytest.approx(50.3767, abs=1e-3)
        assert payload["all_sso_ok"] and payload["all_containment_ok"]
        rows = _rows(tmp_path / "sweep.csv")
        assert len(rows) == 21
        assert rows[0]["sso_ok"] == "" and rows[1]["sso_ok"] == "true"

    def test_single_point_trivial(self, tmp_path):
        code = cli.main(["sweep", "--rb", "7", "--cb", "15", "--axis", "100",
                         "--out-dir", str(tmp_path)])
        assert code == 0
        payload = _load(tmp_path / "sweep.json")
        assert payload["regime_flips"] == 0
        assert payload["all_sso_ok"] and payload["all_containment_ok"]

    def test_theta_null_with_reason(self, tmp_path):
        code = cli.main(["sweep", "--rb", "1", "--cb", "10", "--axis", "50",
                         "--out-dir", str(tmp_path)])
        assert code == 0
        payload = _load(tmp_path / "sweep.json")
        _validate(payload, "sweep.schema.json")
        assert payload["theta"] is None
        assert "no finite threshold" in payload["theta_reason"]

    def test_bad_axis_exits_2(self, tmp_path, capsys):
        code = cli.main(["sweep", "--rb", "7", "--cb", "15",
                         "--axis", "10,abc", "--out-dir", str(tmp_path)])
        assert code == 2
        assert "axis" in capsys.readouterr().err


class TestVerifyCommand:
    def test_single_fast_suite(self, capsys):
        code = cli.main(["verify", "--suite", "closed-form"])
        assert code == 0
        assert "closed-form  PASS" in capsys.readouterr().out

    def test_failing_suite_exits_1(self, monkeypatch, capsys):
        monkeypatch.setitem(cli._SUITES, "closed-form",
                            lambda args: (False, "injected failure"))
        code = cli.main(["verify", "--suite", "closed-form"])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out
