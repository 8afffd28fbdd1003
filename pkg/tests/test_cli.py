import os
from pathlib import Path

import pytest
import yaml

from rdmsim.cli import RunConfig, emit_plot_data, main, parse_config, run
from rdmsim.errors import MissingArtifactError, ParseError, ValidationError


MINIMAL_FOURBOX = """
experiment: fourbox
"""

FAST_SAMPLE = """
experiment: sample
grid: {x_min: -8.0, x_max: 8.0, n: 128}
state: {kind: gaussian, center: 0.0, sigma: 0.7071067811865476}
time: {dt: 1.0e-3, t_final: 0.5, stride: 1}
sample: {n_trajectories: 2, stationary: true}
seed: 11
"""


class TestParseConfig:
    def test_minimal_config_fills_defaults(self):
        cfg = parse_config(MINIMAL_FOURBOX)
        assert cfg.experiment == "fourbox"
        assert cfg.grid.n == 512
        assert cfg.fourbox.mode == "entangled"
        assert cfg.seed == 1
        assert cfg.softening == pytest.approx(2.0 * cfg.grid_obj.dx)

    def test_non_power_of_two_grid_rejected(self):
        with pytest.raises(ValidationError, match="grid.n"):
            parse_config("experiment: evolve\ngrid: {n: 100}\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ParseError, match="gird"):
            parse_config("experiment: evolve\ngird: {n: 128}\n")

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ParseError, match="grid.m"):
            parse_config("experiment: evolve\ngrid: {m: 128}\n")

    def test_malformed_yaml_reports_position(self):
        with pytest.raises(ParseError, match="line"):
            parse_config("experiment: evolve\ngrid: {x_min: [unclosed\n")

    def test_experiment_mismatch(self):
        with pytest.raises(ValidationError, match="experiment"):
            parse_config("experiment: sample\n", experiment="evolve")

    def test_subcommand_fills_experiment(self):
        cfg = parse_config("{}", experiment="convergence")
        assert cfg.experiment == "convergence"

    def test_invalid_timestep_division(self):
        with pytest.raises(ValidationError, match="time.dt"):
            parse_config("experiment: evolve\ntime: {dt: 3.0e-4, t_final: 1.0}\n")

    def test_contrast_lambdas_must_include_zero(self):
        with pytest.raises(ValidationError, match="lambdas"):
            parse_config("experiment: contrast\ncontrast: {lambdas: [1.0, 2.0]}\n")

    def test_reads_from_file(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text(MINIMAL_FOURBOX)
        assert parse_config(path).experiment == "fourbox"


class TestRun:
    def test_sample_run_deterministic(self, tmp_path):
        cfg = parse_config(FAST_SAMPLE)
        out_a = run(cfg, out_override=str(tmp_path / "a"))
        out_b = run(cfg, out_override=str(tmp_path / "b"))
        assert out_a.status == 0 and out_b.status == 0
        names = sorted(p.name for p in out_a.outdir.iterdir())
        assert names == sorted(p.name for p in out_b.outdir.iterdir())
        for name in names:
            a = (out_a.outdir / name).read_text().splitlines()
            b = (out_b.outdir / name).read_text().splitlines()
            if name == "manifest.yaml":
                a = [ln for ln in a if not ln.startswith("wall_time")]
                b = [ln for ln in b if not ln.startswith("wall_time")]
            assert a == b, f"{name} differs between identical runs"

    def test_seed_changes_tables(self, tmp_path):
        cfg = parse_config(FAST_SAMPLE)
        out_a = run(cfg, out_override=str(tmp_path / "a"))
        out_b = run(cfg, out_override=str(tmp_path / "b"), seed_override=99)
        ta = (out_a.outdir / "trajectory_000.csv").read_bytes()
        tb = (out_b.outdir / "trajectory_000.csv").read_bytes()
        assert ta != tb

    def test_manifest_structure(self, tmp_path):
        cfg = parse_config(FAST_SAMPLE)
        outcome = run(cfg, out_override=str(tmp_path / "m"))
        manifest = yaml.safe_load((outcome.outdir / "manifest.yaml").read_text())
        assert manifest["experiment"] == "sample"
        assert manifest["seed"] == 11
        assert manifest["status"] == "pass"
        assert manifest["config"]["grid"]["n"] == 128
        assert all({"name", "passed", "detail"} <= set(c) for c in manifest["checks"])

    def test_failing_check_gives_nonzero_exit(self, tmp_path):
        # an unreachable displacement threshold turns the run red
        cfg = parse_config(
            "experiment: contrast\n"
            "grid: {x_min: -32.0, x_max: 32.0, n: 512}\n"
            "time: {dt: 1.0e-3, t_final: 0.1, stride: 10}\n"
            "contrast: {lambdas: [0.0, 1.0], strong_threshold_dx: 1.0e+6}\n"
        )
        outcome = run(cfg, out_override=str(tmp_path / "fail"))
        assert outcome.status == 1
        manifest = yaml.safe_load((outcome.outdir / "manifest.yaml").read_text())
        assert manifest["status"] == "fail"

    def test_convergence_table_has_ratio_column(self, tmp_path):
        cfg = parse_config(
            "experiment: convergence\n"
            "grid: {x_min: -20.0, x_max: 20.0, n: 256}\n"
            "state: {center: -5.0}\n"
            "time: {dt: 2.0e-3, t_final: 0.4, stride: 10}\n"
            "convergence: {rungs: 3, base_n: 256}\n"
        )
        outcome = run(cfg, out_override=str(tmp_path / "conv"))
        assert outcome.status == 0
        lines = (outcome.outdir / "convergence.csv").read_text().splitlines()
        assert lines[0] == "rung,n,dt,snapshot_spacing,residual_norm,ratio"
        ratios = [float(ln.split(",")[5]) for ln in lines[2:]]
        assert all(3.5 <= r <= 4.5 for r in ratios)


class TestMain:
    def test_cli_end_to_end(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(FAST_SAMPLE)
        status = main(["sample", "--config", str(cfg_path),
                       "--out", str(tmp_path / "out")])
        assert status == 0
        captured = capsys.readouterr()
        assert "[pass]" in captured.out

    def test_seed_env_override(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(FAST_SAMPLE)
        monkeypatch.setenv("SEED_OVERRIDE", "4242")
        status = main(["sample", "--config", str(cfg_path),
                       "--out", str(tmp_path / "out")])
        assert status == 0
        manifest = yaml.safe_load((tmp_path / "out" / "manifest.yaml").read_text())
        assert manifest["seed"] == 4242

    def test_bad_config_exits_2(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.yaml"
        cfg_path.write_text("experiment: evolve\ngrid: {n: 97}\n")
        status = main(["evolve", "--config", str(cfg_path)])
        assert status == 2
        assert "grid.n" in capsys.readouterr().err


class TestEmitPlotData:
    def test_missing_artifact(self, tmp_path):
        with pytest.raises(MissingArtifactError):
            emit_plot_data(tmp_path)

    def test_sample_plot_tables(self, tmp_path):
        cfg = parse_config(FAST_SAMPLE)
        outcome = run(cfg, out_override=str(tmp_path / "s"))
        scatter = outcome.outdir / "fig_trajectory_scatter.csv"
        assert scatter.exists()
        assert scatter.read_text().splitlines()[0] == "t,x"
        overlay = outcome.outdir / "fig_density_overlay.csv"
        assert overlay.read_text().splitlines()[0] == "slab_t,x,rho_hat,stderr,rho_model"

    def test_fourbox_center_tracks_wide_format(self, tmp_path):
        cfg = parse_config(
            "experiment: fourbox\n"
            "grid: {x_min: -16.0, x_max: 16.0, n: 128}\n"
            "physics: {q1q2: -100.0, softening: 0.25}\n"
            "time: {dt: 2.0e-3, t_final: 0.2, stride: 10}\n"
        )
        outcome = run(cfg, out_override=str(tmp_path / "fb"))
        tracks = outcome.outdir / "fig_center_tracks.csv"
        header = tracks.read_text().splitlines()[0]
        assert header == "t,center_A1,center_A2,center_B1,center_B2"
