# Native and installed modules
import json
import math
import os

import pytest
from click.testing import CliRunner

# Custom modules
import app
from api import workbench
from routes.commands import EXIT_ERROR, EXIT_FAILED, EXIT_PASS
from utils.errors import ConfigError


def test_parse_argv():
    cfg = workbench.parse_config(
        ["distance-sweep", "--family", "poisson", "--beta", "0.75", "--n", "256..8192", "--seed", "42"]
    )
    assert cfg.command == "distance-sweep"
    assert cfg.family == "poisson"
    assert cfg.beta == 0.75
    assert cfg.n_list == [256, 512, 1024, 2048, 4096, 8192]
    assert cfg.seed == 42
    assert cfg.n == 8192


def test_parse_rejects_small_beta():
    with pytest.raises(ConfigError, match="beta"):
        workbench.parse_config(["distance-sweep", "--family", "poisson", "--beta", "0.4"])


def test_parse_requires_family():
    with pytest.raises(ConfigError, match="family"):
        workbench.parse_config(["estimate", "--n", "256"])
    assert workbench.parse_config(["families"]).family is None


def test_parse_rejects_unknown_values():
    with pytest.raises(ConfigError):
        workbench.parse_config(["estimate", "--family", "gamma"])
    with pytest.raises(ConfigError):
        workbench.parse_config(["sweep", "--family", "poisson"])
    with pytest.raises(ConfigError):
        workbench.parse_config(["estimate", "--family", "poisson", "--colour", "red"])
    with pytest.raises(ConfigError):
        workbench.parse_config(["estimate", "--family", "poisson", "--reps", "many"])


def test_dyadic_commands_need_powers_of_two():
    with pytest.raises(ConfigError, match="powers of two"):
        workbench.parse_config(["coupling", "--family", "poisson", "--n", "1000"])
    cfg = workbench.parse_config(["estimate", "--family", "poisson", "--n", "1000,3000"])
    assert cfg.n_list == [1000, 3000]


def test_parse_mapping_with_defaults():
    cfg = workbench.parse_config({"command": "vst-clt", "family": "bernoulli", "reps": "2**10"})
    assert cfg.reps == 1024
    assert cfg.beta == 0.75
    assert cfg.n_list == [256, 512]


def test_theta0_override():
    cfg = workbench.parse_config(["vst-clt", "--family", "poisson", "--theta0", "-0.5,0.5"])
    assert cfg.theta0 == (-0.5, 0.5)
    with pytest.raises(ConfigError):
        workbench.parse_config(["vst-clt", "--family", "exponential", "--theta0", "-1,1"])


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# sweep settings\nfamily = poisson\nbeta: 0.8\nn = 256..1024\n")
    cfg = workbench.parse_config(["distance-sweep", "--config", str(path), "--beta", "0.9"])
    assert cfg.family == "poisson"
    assert cfg.beta == 0.9
    assert cfg.n_list == [256, 512, 1024]

    path.write_text("command = estimate\nfamily = bernoulli\nnoise = false\n")
    cfg = workbench.parse_config(str(path))
    assert cfg.command == "estimate"
    assert cfg.noise is False


def test_hash_ignores_output_options(tmp_path):
    first = workbench.parse_config(["vst-clt", "--family", "poisson", "--out", str(tmp_path / "a")])
    second = workbench.parse_config(["vst-clt", "--family", "poisson", "--out", str(tmp_path / "b")])
    other = workbench.parse_config(["vst-clt", "--family", "poisson", "--seed", "1"])
    assert first.hash == second.hash
    assert first.hash != other.hash


def _run_and_persist(argv):
    cfg = workbench.parse_config(argv)
    report = workbench.run(cfg)
    return report, workbench.persist(cfg, report)


def test_identical_seeds_give_identical_files(tmp_path):
    argv = ["simulate", "--family", "poisson", "--n", "128", "--seed", "7"]
    _, first = _run_and_persist(argv + ["--out", str(tmp_path / "a")])
    _, second = _run_and_persist(argv + ["--out", str(tmp_path / "b")])
    assert [os.path.basename(p) for p in first] == [os.path.basename(p) for p in second]
    for left, right in zip(first, second):
        with open(left, "rb") as a, open(right, "rb") as b:
            assert a.read() == b.read()


def test_simulate_writes_sample_and_f0(tmp_path):
    report, paths = _run_and_persist(
        ["simulate", "--family", "gauss-var", "--kind", "GaussHetero", "--n", "64",
         "--out", str(tmp_path)]
    )
    names = sorted(os.path.basename(p) for p in paths)
    assert names == [
        "simulate-gauss-var-f0.csv",
        "simulate-gauss-var-sample.csv",
        "simulate-gauss-var-sample.csv.json",
        "simulate-gauss-var.csv",
        "simulate-gauss-var.summary.json",
    ]
    with open(tmp_path / "simulate-gauss-var.summary.json") as handle:
        summary = json.load(handle)
    assert summary["summary"]["kind"] == "GaussHetero"
    assert summary["config_hash"]
    assert "rows" not in summary
    assert len(report.rows) == 64


def test_json_rows(tmp_path):
    _, paths = _run_and_persist(
        ["vst-distance", "--family", "poisson", "--n", "256", "--pairs", "3",
         "--format", "json", "--out", str(tmp_path)]
    )
    with open(paths[0]) as handle:
        rows = json.load(handle)
    assert paths[0].endswith("vst-distance-poisson-rows.json")
    assert [row["pair"] for row in rows] == [0, 1, 2]
    assert all(row["seed"] == 0 for row in rows)


def test_distance_sweep_null_model():
    cfg = workbench.parse_config(
        ["distance-sweep", "--family", "gauss-mean", "--n", "64,128", "--reps", "400"]
    )
    report = workbench.run(cfg)
    assert report.passed
    assert report.summary["null_model"] is True
    assert [row["n"] for row in report.rows] == [64, 128]


@pytest.mark.slow
@pytest.mark.parametrize("family", ["poisson", "bernoulli"])
def test_distance_sweep_decreases(family):
    cfg = workbench.parse_config(
        ["distance-sweep", "--family", family, "--n", "256..8192", "--reps", "20000",
         "--seed", "42", "--workers", "4"]
    )
    report = workbench.run(cfg)
    assert report.passed
    assert report.summary["rate"] == "global"
    assert report.summary["slope"] <= -0.05
    h2 = [row["h2"] for row in report.rows]
    se = [row["se"] for row in report.rows]
    for k in range(1, len(h2)):
        assert h2[k] - h2[k - 1] < 2 * math.hypot(se[k], se[k - 1])
    assert h2[0] - h2[-1] > 2 * math.hypot(se[0], se[-1])


def test_parse_sweep_rate():
    assert workbench.parse_config(["distance-sweep", "--family", "poisson"]).rate == "global"
    cfg = workbench.parse_config(
        ["distance-sweep", "--family", "poisson", "--rate", "almost-parametric"]
    )
    assert cfg.rate == "almost-parametric"
    with pytest.raises(ConfigError, match="rate"):
        workbench.parse_config(["distance-sweep", "--family", "poisson", "--rate", "local"])


def test_almost_parametric_sweep_null_model():
    cfg = workbench.parse_config(
        ["distance-sweep", "--family", "gauss-mean", "--n", "64,128", "--reps", "400",
         "--rate", "almost-parametric"]
    )
    report = workbench.run(cfg)
    assert report.passed
    assert report.summary["rate"] == "almost-parametric"
    for row in report.rows:
        assert row["h2_local"] == pytest.approx(0.0, abs=1e-9)
        assert row["radius"] > row["n"] ** -0.5


@pytest.mark.slow
def test_almost_parametric_sweep_poisson_is_bounded():
    cfg = workbench.parse_config(
        ["distance-sweep", "--family", "poisson", "--n", "256..2048", "--reps", "4000",
         "--seed", "42", "--workers", "4", "--rate", "almost-parametric"]
    )
    report = workbench.run(cfg)
    assert report.passed
    assert report.summary["theory_exponent"] == -1.0
    scaled = [row["h2_local"] for row in report.rows]
    scaled_se = [row["se"] / row["local_rate"] for row in report.rows]
    for value, value_se in zip(scaled[1:], scaled_se[1:]):
        assert value - scaled[0] < 2 * math.hypot(value_se, scaled_se[0])
    assert max(scaled) < 1.0


def test_vst_clt_gauss_mean():
    cfg = workbench.parse_config(["vst-clt", "--family", "gauss-mean", "--n", "64", "--reps", "2000"])
    report = workbench.run(cfg)
    assert len(report.rows) == 3
    for row in report.rows:
        assert abs(row["variance"] - 1) <= 4 * row["variance_se"]


def test_transfer_gauss_mean_ratio_is_one():
    cfg = workbench.parse_config(["transfer", "--family", "gauss-mean", "--n", "128", "--reps", "3"])
    report = workbench.run(cfg)
    assert report.passed
    assert report.summary["ratio"] == pytest.approx(1.0)
    assert report.summary["mean_ratio"] == pytest.approx(1.0)


@pytest.mark.slow
def test_transfer_poisson_ci_is_narrow():
    cfg = workbench.parse_config(
        ["transfer", "--family", "poisson", "--n", "4096", "--reps", "200", "--workers", "4"]
    )
    report = workbench.run(cfg)
    assert report.passed
    summary = report.summary
    assert summary["ci_width"] < 0.5
    assert summary["ratio_ci_low"] <= summary["ratio"] <= summary["ratio_ci_high"]
    assert summary["mean_ratio"] > 0


def test_transfer_needs_rough_functions():
    cfg = workbench.parse_config(["transfer", "--family", "poisson", "--beta", "1.2"])
    with pytest.raises(ConfigError):
        workbench.run(cfg)


def test_families_catalogue():
    report = workbench.run(workbench.parse_config(["families"]))
    assert report.passed
    assert report.summary["families"] == 5


def test_families_checks_both_tails():
    report = workbench.run(workbench.parse_config(["families"]))
    checks = report.summary["moment_checks"]
    assert len(checks) == 10
    for row in report.rows:
        mine = [check for check in checks if check["family"] == row["family"]]
        assert sorted(check["t"] for check in mine) == pytest.approx([-row["eps0"] / 2, row["eps0"] / 2])
    for check in checks:
        assert check["exact"] <= check["bound"] + 1e-12
        assert check["estimate"] <= check["bound"] + 3 * check["se"] + 1e-12


def test_exit_codes(tmp_path):
    out = str(tmp_path)
    assert app.main(["families", "--out", out]) == EXIT_PASS
    assert app.main(["distance-sweep", "--family", "poisson", "--beta", "0.4", "--out", out]) == EXIT_ERROR
    failing = ["vst-clt", "--family", "poisson", "--n", "8", "--reps", "2000", "--theta", "-1", "--out", out]
    assert app.main(failing) == EXIT_FAILED


def test_cli_output(tmp_path):
    runner = CliRunner(mix_stderr=False)
    result = runner.invoke(app.cli, ["families", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_PASS
    assert "families: PASS" in result.output
    assert "Poisson" in result.output

    result = runner.invoke(app.cli, ["estimate", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_ERROR
    payload = json.loads(result.stderr.strip().splitlines()[-1])
    assert payload["error"]["code"] == "CONFIG_ERROR"
