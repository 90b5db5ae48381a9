import io
import json
import subprocess
import sys

import pytest

from urlab import ConfigError, ExperimentConfig, FilterSpec, InnovationSpec
from urlab.cli import (
    Targets,
    dispatch,
    load_run,
    main,
    parse_config,
    serialize_config,
)

MINIMAL = """\
[filter]
family = finite
coeffs = 1.0

[innovations]
sigma_omega_sq = 1.0
sigma_sq = 1.0
pi = 1.0
"""

FAST_RUN = """\
[filter]
family = finite
coeffs = 1.0

[innovations]
pi = 1.0

[experiment]
n_grid = 200
reps = 400
base_seed = 5
statistics = fpe_stat

[targets]
fpe_floor = 0.5
"""


def test_minimal_config_is_full_correlation_walk():
    cfg = parse_config(MINIMAL)
    assert cfg.filter_spec.coeffs == (1.0,)
    assert cfg.innovations.pi == 1.0
    assert cfg.innovations.sigma_omega_sq == 1.0  # rho = 1
    assert cfg.varsigma == 1.0
    assert cfg.n_grid == (500,)


def test_all_errors_reported_at_once():
    bad = """\
[filter]
family = geometric
a = 1.0
r = 1.0

[innovations]
pi = 3.0
sigma_sq = not_a_number

[experiment]
reps = 1
volume = 11
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    msgs = exc.value.problems
    assert any("not absolutely summable" in m for m in msgs)
    assert any("Cauchy-Schwarz" in m for m in msgs)
    assert any("sigma_sq" in m and "not_a_number" in m for m in msgs)
    assert any("unknown key 'volume'" in m for m in msgs)
    assert any("reps" in m for m in msgs)
    assert len(msgs) >= 5


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match=r"unknown section \[plotting\]"):
        parse_config(MINIMAL + "\n[plotting]\nstyle = dark\n")


def test_syntax_error_wrapped():
    with pytest.raises(ConfigError, match="config syntax"):
        parse_config("not an ini file at all [")


def test_round_trip_identity():
    configs = [
        parse_config(MINIMAL),
        ExperimentConfig(
            filter_spec=FilterSpec(family="geometric", a=-1.5, r=0.25, tail_tol=1e-10),
            innovations=InnovationSpec(2.0, 3.0, 0.125, "laplace"),
            beta=-0.75,
            varsigma=0.5,
            n_grid=(10, 100, 1000),
            reps=55,
            base_seed=99,
            statistics=("excess_ape", "log_fisher"),
            out_dir="runs/a",
        ),
        ExperimentConfig(
            filter_spec=FilterSpec(family="polynomial", a=0.1, p=2.5, truncation_lag=7),
            innovations=InnovationSpec(1.0, 1.0, 1.0 / 3.0, "uniform"),
        ),
    ]
    for cfg in configs:
        assert parse_config(serialize_config(cfg)) == cfg


def test_targets_round_trip():
    targets = Targets(se_mult=3.0, ks_max=0.05, m_log2=8, bm_reps=1000)
    cfg = parse_config(MINIMAL)
    _, parsed = load_run(serialize_config(cfg, targets))
    assert parsed == targets


def test_all_skips_checks_the_mode_cannot_support(tmp_path):
    base = dict(
        filter_spec=FilterSpec(family="finite", coeffs=(1.0,)),
        innovations=InnovationSpec(sigma_omega_sq=1.0, sigma_sq=1.0, pi=1.0),
        n_grid=(40, 80, 160),
        reps=1000,
        base_seed=13,
    )
    targets = Targets(m_log2=6, bm_reps=2000, limit_reps=1000)

    sink = io.StringIO()
    _, man = dispatch(
        "all", ExperimentConfig(**base), targets,
        out_dir=tmp_path / "unit_root", stream=sink,
    )
    text = sink.getvalue()
    assert "stationary: skipped (" in text
    assert set(man.artifacts) == {
        "fpe_summary.csv", "fpe_summary.json", "ape_curve.csv", "ape_curve.json",
        "mse_summary.csv", "mse_summary.json", "constants.json",
        "cross_moment.json", "limit_check.json",
    }

    sink = io.StringIO()
    _, man = dispatch(
        "all", ExperimentConfig(varsigma=0.5, **base), targets,
        out_dir=tmp_path / "stationary", stream=sink,
    )
    text = sink.getvalue()
    for name in ("fpe", "ape-curve", "mse", "cross-moment", "limit-check"):
        assert f"{name}: skipped (" in text
    assert set(man.artifacts) == {"constants.json", "stationary.json"}

    # outside "all" the mode mismatch stays a hard config error
    with pytest.raises(ConfigError, match="varsigma = 1"):
        dispatch(
            "fpe", ExperimentConfig(varsigma=0.5, **base), targets,
            out_dir=tmp_path / "reject", stream=io.StringIO(),
        )


def test_dispatch_writes_deterministic_artifacts(tmp_path):
    cfg, targets = load_run(FAST_RUN)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    sink = io.StringIO()
    fail_a, man_a = dispatch("fpe", cfg, targets, out_dir=out_a, stream=sink)
    fail_b, man_b = dispatch("fpe", cfg, targets, out_dir=out_b, stream=sink)
    assert fail_a == fail_b == 0
    assert man_a.artifacts == man_b.artifacts  # same checksums byte for byte
    assert set(man_a.artifacts) == {"fpe_summary.csv", "fpe_summary.json"}
    assert (out_a / "manifest.json").exists()
    table = sink.getvalue()
    assert "fpe_stat @ n=200" in table
    assert "pass" in table


def test_dispatch_table_reports_failure(tmp_path):
    cfg, _ = load_run(FAST_RUN)
    strict = Targets(fpe_floor=1e-9, se_mult=1e-9)
    sink = io.StringIO()
    failures, _ = dispatch("fpe", cfg, strict, out_dir=tmp_path, stream=sink)
    assert failures == 1
    assert "FAIL" in sink.getvalue()


def test_dispatch_rejects_unknown_subcommand(tmp_path):
    cfg, targets = load_run(FAST_RUN)
    with pytest.raises(ConfigError, match="subcommand"):
        dispatch("spectra", cfg, targets, out_dir=tmp_path)


def test_constants_subcommand_artifact(tmp_path):
    cfg, _ = load_run(FAST_RUN)
    targets = Targets(m_log2=8, bm_reps=4000)
    sink = io.StringIO()
    failures, manifest = dispatch("constants", cfg, targets, out_dir=tmp_path, stream=sink)
    assert failures == 0
    payload = json.loads((tmp_path / "constants.json").read_text())
    assert abs(payload["k1"]["value"] - 13.3) < 1.5
    assert abs(payload["k2"]["value"] - 5.6) < 0.4
    assert payload["m"] == 256


def test_main_exit_codes(tmp_path):
    good = tmp_path / "good.ini"
    good.write_text(FAST_RUN)
    bad = tmp_path / "bad.ini"
    bad.write_text("[innovations]\npi = 9.0\n")

    assert main(["fpe", str(good), "--out", str(tmp_path / "o1")]) == 0
    assert main(["fpe", str(tmp_path / "missing.ini")]) == 2
    assert main(["fpe", str(bad)]) == 2

    # an impossible floor fails the comparison: exit 1 only under --strict
    hard = tmp_path / "hard.ini"
    hard.write_text(FAST_RUN.replace("fpe_floor = 0.5", "fpe_floor = 1e-12\nse_mult = 1e-12"))
    assert main(["fpe", str(hard), "--out", str(tmp_path / "o2")]) == 0
    assert main(["fpe", str(hard), "--out", str(tmp_path / "o3"), "--strict"]) == 1


def test_ape_curve_needs_three_grid_points(tmp_path, capsys):
    short = tmp_path / "short.ini"
    short.write_text(FAST_RUN.replace("n_grid = 200", "n_grid = 200, 400"))
    assert main(["ape-curve", str(short), "--out", str(tmp_path / "o")]) == 2
    assert "ape-curve needs n_grid" in capsys.readouterr().err


def test_seed_override_changes_outputs(tmp_path):
    good = tmp_path / "good.ini"
    good.write_text(FAST_RUN)
    assert main(["fpe", str(good), "--out", str(tmp_path / "s1"), "--seed", "5"]) == 0
    assert main(["fpe", str(good), "--out", str(tmp_path / "s2"), "--seed", "6"]) == 0
    man1 = json.loads((tmp_path / "s1" / "manifest.json").read_text())
    man2 = json.loads((tmp_path / "s2" / "manifest.json").read_text())
    assert man1["base_seed"] == 5 and man2["base_seed"] == 6
    assert man1["artifacts"] != man2["artifacts"]


def test_console_entry_point(tmp_path):
    good = tmp_path / "good.ini"
    good.write_text(FAST_RUN)
    proc = subprocess.run(
        [sys.executable, "-m", "urlab.cli", "fpe", str(good), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "fpe: pass" in proc.stdout
