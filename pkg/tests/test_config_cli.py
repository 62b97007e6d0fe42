import os

import numpy as np
import pytest

from unobs_stab.cli import analyze, draw_initial_conditions, main, run_scenario
from unobs_stab.config import ConfigError, parse_config

FINITE_CFG = """
# embedded-observer benchmark
strategy = finite
seed = 42
init.rho = 3.0
init.count = 3
params.poles = -1.0, -2.0
params.alpha = 10.0
params.delta_frac = 0.5
integrator.step = 1e-3
integrator.horizon = 2.0
integrator.record_every = 10
"""

SPECTRAL_CFG = """
strategy = spectral
seed = 7
init.radius_x = 1.0
init.count = 2
params.K = 1.0, -2.0
params.alpha = 1.0
params.delta = 0.003
params.Delta = 0.05
params.mu = 0.1
params.N = 12
output.kind = norm_sq
integrator.method = exact_linear
integrator.step = 0.05
integrator.horizon = 5.0
"""


def write(tmp_path, text, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParseConfig:
    def test_valid_finite(self, tmp_path):
        cfg = parse_config(write(tmp_path, FINITE_CFG))
        assert cfg.strategy == "finite"
        assert cfg.seed == 42
        assert cfg.poles == [-1.0, -2.0]
        assert cfg.delta_frac == 0.5
        assert cfg.warnings == []

    def test_valid_spectral(self, tmp_path):
        cfg = parse_config(write(tmp_path, SPECTRAL_CFG))
        assert cfg.strategy == "spectral"
        assert cfg.output_kind == "norm_sq"
        assert cfg.Delta == 0.05

    def test_sample_period_constraint(self, tmp_path):
        text = SPECTRAL_CFG.replace("params.Delta = 0.05", "params.Delta = 4.0")
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, text))
        assert any("params.Delta" in p and "(0, pi)" in p for p in err.value.problems)

    def test_oversized_delta_warns(self, tmp_path):
        text = FINITE_CFG.replace("params.delta_frac = 0.5", "params.delta = 5.0")
        cfg = parse_config(write(tmp_path, text))
        assert any("delta_margin" in w for w in cfg.warnings)

    def test_all_errors_reported_at_once(self, tmp_path):
        text = "strategy = nope\nbogus.key = 1\ninit.radius_x = -2.0\n"
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, text))
        joined = "\n".join(err.value.problems)
        assert "strategy" in joined
        assert "bogus.key" in joined
        assert "init.radius_x" in joined

    def test_duplicate_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(write(tmp_path, "strategy = finite\nstrategy = finite\n"))

    def test_explicit_pair_requires_both(self, tmp_path):
        text = FINITE_CFG + "init.x0 = 1.0, 0.0\n"
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, text))
        assert any("init.x0" in p for p in err.value.problems)

    def test_explicit_point_lists(self, tmp_path):
        text = (FINITE_CFG
                + "init.x0 = 1.0, 0.0, -0.5, 0.25\n"
                + "init.xhat0 = 0.0, 0.0, 0.1, -0.1\n")
        cfg = parse_config(write(tmp_path, text))
        assert cfg.x0.shape == (2, 2)
        from unobs_stab.cli import draw_initial_conditions
        pairs = draw_initial_conditions(cfg, 0)
        assert len(pairs) == 2
        assert np.allclose(pairs[1][0], [-0.5, 0.25])
        assert np.allclose(pairs[1][1], [0.1, -0.1])

    def test_odd_length_point_list_rejected(self, tmp_path):
        text = (FINITE_CFG + "init.x0 = 1.0, 0.0, 2.0\n"
                + "init.xhat0 = 0.0, 0.0, 1.0\n")
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, text))
        assert any("multiple of 2" in p for p in err.value.problems)


class TestDraws:
    def test_seeded_draws_are_reproducible(self, tmp_path):
        cfg = parse_config(write(tmp_path, FINITE_CFG))
        a = draw_initial_conditions(cfg, 42)
        b = draw_initial_conditions(cfg, 42)
        for (xa, ha), (xb, hb) in zip(a, b):
            assert np.array_equal(xa, xb) and np.array_equal(ha, hb)
        assert all(np.linalg.norm(x) <= 3.0 for x, _ in a)

    def test_env_seed_override(self, tmp_path, monkeypatch):
        cfg = parse_config(write(tmp_path, FINITE_CFG))
        monkeypatch.setenv("UNOBS_STAB_SEED", "99")
        out = tmp_path / "out"
        run_scenario(cfg, str(out))
        text = (out / "summary.txt").read_text()
        assert "seed=99" in text


class TestRunScenario:
    def test_equilibrium_produces_zero_csv(self, tmp_path):
        text = FINITE_CFG + "init.x0 = 0.0, 0.0\ninit.xhat0 = 0.0, 0.0\n"
        cfg = parse_config(write(tmp_path, text))
        out = tmp_path / "out"
        code = run_scenario(cfg, str(out))
        assert code == 0
        lines = (out / "run_000.csv").read_text().strip().splitlines()
        assert lines[0] == "t,x1,x2,u,eps_norm,c_eps_abs"
        for line in lines[1:]:
            values = [float(v) for v in line.split(",")[1:]]
            assert all(v == 0.0 for v in values)

    def test_csv_has_full_precision(self, tmp_path):
        cfg = parse_config(write(tmp_path, SPECTRAL_CFG))
        out = tmp_path / "out"
        run_scenario(cfg, str(out))
        lines = (out / "run_000.csv").read_text().strip().splitlines()
        assert lines[0].endswith("weak_eps")
        row = lines[2].split(",")
        # 17 significant digits survive a round trip
        assert float(row[1]) == float("%.17g" % float(row[1]))
        assert any(len(v.replace("-", "").replace(".", "").lstrip("0")) > 12
                   for v in row[1:])

    def test_jobs_match_serial(self, tmp_path):
        cfg = parse_config(write(tmp_path, FINITE_CFG))
        out1, out2 = tmp_path / "serial", tmp_path / "parallel"
        run_scenario(cfg, str(out1), jobs=1)
        run_scenario(cfg, str(out2), jobs=2)
        for name in sorted(os.listdir(out1)):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_svg_written(self, tmp_path):
        text = FINITE_CFG + "init.x0 = 1.0, 0.0\ninit.xhat0 = 0.5, 0.0\n"
        cfg = parse_config(write(tmp_path, text))
        out = tmp_path / "out"
        run_scenario(cfg, str(out), svg=True)
        svg = (out / "run_000.svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg

    def test_threshold_failure_sets_exit_code(self, tmp_path):
        text = FINITE_CFG + "thresholds.trailing_x_max = 1e-12\n"
        cfg = parse_config(write(tmp_path, text))
        assert run_scenario(cfg, str(tmp_path / "out")) == 1


class TestAnalyze:
    def test_report_contents(self, tmp_path):
        text = SPECTRAL_CFG + "analyze.trials = 20\nanalyze.u_grid = 0.0, 0.3\n"
        cfg = parse_config(write(tmp_path, text))
        path = analyze(cfg, str(tmp_path / "out"))
        report = dict(line.split("=", 1) for line in
                      open(path).read().strip().splitlines())
        assert float(report["det_check.max_rel_err"]) < 1e-9
        assert report["det_check.singular_when_unperturbed"] == "1"
        assert float(report["gramian.u_0.lambda_min"]) < 1e-14
        assert "umax.applicable" in report
        assert report["bounds.satisfied"] == "1"

    def test_unperturbed_finite_reports_singular_certificate(self, tmp_path):
        text = FINITE_CFG.replace("params.delta_frac = 0.5", "params.delta_frac = 1e-9")
        cfg = parse_config(write(tmp_path, text))
        cfg.delta = 0.0
        cfg.delta_frac = None
        path = analyze(cfg, str(tmp_path / "out"))
        report = open(path).read()
        assert "certificate.singular=1" in report
        assert "certificate.full_rank=0" in report


class TestMain:
    def test_zeros_subcommand(self, capsys):
        assert main(["zeros"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("j0=2.40482555769577")
        assert "j1=1.84118378134067" in out
        assert "nu=1.775766" in out

    def test_simulate_subcommand(self, tmp_path):
        path = write(tmp_path, FINITE_CFG)
        out = tmp_path / "cli_out"
        code = main(["simulate", "--config", path, "--out", str(out)])
        assert code == 0
        assert (out / "summary.txt").exists()

    def test_bad_config_exit_code(self, tmp_path):
        path = write(tmp_path, "strategy = nope\n")
        assert main(["simulate", "--config", path, "--out", str(tmp_path / "o")]) == 2
