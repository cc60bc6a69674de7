import json

import pytest

from instability_plots import cli
from instability_plots.artifacts import ArtifactError, load


class TestLoad:
    def test_missing_column_named(self, benchmark_dir):
        csv_path = benchmark_dir / "benchmark.csv"
        text = csv_path.read_text().replace("control", "ctrl")
        csv_path.write_text(text)
        with pytest.raises(ArtifactError, match="'control'"):
            load("benchmark", [benchmark_dir])

    def test_missing_key_named(self, benchmark_dir):
        json_path = benchmark_dir / "benchmark.json"
        payload = json.loads(json_path.read_text())
        del payload["threshold"]
        json_path.write_text(json.dumps(payload))
        with pytest.raises(ArtifactError, match="'threshold'"):
            load("benchmark", [benchmark_dir])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactError, match="missing"):
            load("benchmark", [tmp_path])

    def test_unknown_family(self, benchmark_dir):
        with pytest.raises(ArtifactError, match="family"):
            load("surface", [benchmark_dir])

    def test_explicit_file_pair(self, benchmark_dir):
        art = load("benchmark", [benchmark_dir / "benchmark.csv",
                                 benchmark_dir / "benchmark.json"])
        assert art.summary["threshold"] == 0.3
        assert len(art.table["x"]) == 21


class TestRenderFamilies:
    def _run(self, family, src, out):
        code = cli.main(["render", "--family", family, "--in", str(src),
                         "--out", str(out)])
        assert code == 0
        assert out.exists() and out.stat().st_size > 0

    def test_benchmark(self, benchmark_dir, tmp_path):
        self._run("benchmark", benchmark_dir, tmp_path / "benchmark.svg")

    def test_equilibrium(self, equilibrium_dir, tmp_path):
        self._run("equilibrium", equilibrium_dir, tmp_path / "eq.svg")

    def test_simulation(self, simulation_dir, tmp_path):
        self._run("simulation", simulation_dir, tmp_path / "sim.svg")

    def test_sweep(self, sweep_dir, tmp_path):
        self._run("sweep", sweep_dir, tmp_path / "sweep.svg")

    def test_png_output(self, benchmark_dir, tmp_path):
        self._run("benchmark", benchmark_dir, tmp_path / "benchmark.png")


class TestDeterminism:
    def test_byte_stable_svg(self, benchmark_dir, tmp_path):
        outs = []
        for name in ("one.svg", "two.svg"):
            out = tmp_path / name
            assert cli.main(["render", "--family", "benchmark",
                             "--in", str(benchmark_dir),
                             "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_empty_overlay_unchanged(self, benchmark_dir, tmp_path):
        base, with_empty = tmp_path / "base.svg", tmp_path / "empty.svg"
        cli.main(["render", "--family", "benchmark", "--in",
                  str(benchmark_dir), "--out", str(base)])
        cli.main(["render", "--family", "benchmark", "--in",
                  str(benchmark_dir), "--out", str(with_empty), "--overlay"])
        assert base.read_bytes() == with_empty.read_bytes()


class TestStyle:
    def test_style_title_and_identity_toggle(self, benchmark_dir, tmp_path):
        style = tmp_path / "style.cfg"
        style.write_text("title=Benchmark comparative statics\nidentity_line=false\n")
        out = tmp_path / "styled.svg"
        code = cli.main(["render", "--family", "benchmark",
                         "--in", str(benchmark_dir), "--out", str(out),
                         "--style", str(style)])
        assert code == 0
        text = out.read_text()
        assert "Benchmark comparative statics" in text

    def test_bad_artifact_exit_2(self, tmp_path, capsys):
        code = cli.main(["render", "--family", "benchmark",
                         "--in", str(tmp_path), "--out",
                         str(tmp_path / "x.svg")])
        assert code == 2
        assert "missing" in capsys.readouterr().err
