"""Config ingestion, experiment dispatch, and artifact emission.

Experiments are described by an INI file with sections [filter],
[innovations], [model], [experiment] and an optional [targets] section
holding pass/fail thresholds.  Thresholds default to the canonical
two-digit constants' own rounding plus a 4x MC-SE band, so a bare config
is already an acceptance run.

Most checks compare against integrated-regressor limits and require
varsigma = 1; the stationary contrast requires |varsigma| < 1.  The "all"
subcommand runs whichever checks the config's mode supports and reports
the others as skipped.

Exit codes: 0 pass, 1 failed comparison under --strict, 2 bad config.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import brownian, monte_carlo, reporting
from .errors import ConfigError
from .innovations import InnovationSpec
from .linear_process import FilterSpec, materialize_filter
from .monte_carlo import ExperimentConfig

SUBCOMMANDS = (
    "fpe",
    "ape-curve",
    "mse",
    "constants",
    "cross-moment",
    "stationary",
    "limit-check",
    "all",
)

_SECTIONS = ("filter", "innovations", "model", "experiment", "targets")


@dataclass(frozen=True)
class Targets:
    """Pass/fail policy: absolute floors, SE multiplier, and the sizes of
    the limit-law batches the brownian checks draw."""

    se_mult: float = 4.0
    fpe_floor: float = 0.1
    mse_floor: float = 0.7
    k1_floor: float = 0.5
    k2_floor: float = 0.2
    slope_rel_band: float = 0.15
    stationary_floor: float = 0.05
    ks_max: float = 0.03
    m_log2: int = 12
    bm_reps: int = 200_000
    limit_reps: int = 10_000


@dataclass(frozen=True)
class RunManifest:
    """What ran and what it wrote; checksums make reruns comparable."""

    config_path: str
    subcommand: str
    out_dir: str
    base_seed: int
    workers: int
    artifacts: dict[str, str]

    def as_dict(self) -> dict:
        return {
            "config_path": self.config_path,
            "subcommand": self.subcommand,
            "out_dir": self.out_dir,
            "base_seed": self.base_seed,
            "workers": self.workers,
            "artifacts": self.artifacts,
        }


class _Section:
    """One config section with typed, error-collecting key access."""

    def __init__(self, name: str, raw: dict, problems: list):
        self.name = name
        self.raw = dict(raw)
        self.problems = problems

    def take(self, key: str, kind, default=None):
        if key not in self.raw:
            return default
        text = self.raw.pop(key).strip()
        try:
            return kind(text)
        except (TypeError, ValueError):
            self.problems.append(
                f"[{self.name}] {key}: cannot parse {text!r} as {kind.__name__}"
            )
            return default

    def finish(self):
        for key in self.raw:
            self.problems.append(f"[{self.name}] unknown key {key!r}")


def _float_tuple(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


def _int_tuple(text: str) -> tuple[int, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(int(p) for p in parts)


def _name_tuple(text: str) -> tuple[str, ...]:
    return tuple(p for p in text.replace(",", " ").split() if p)


def _build(cls, problems: list, **kwargs):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        problems.extend(exc.problems)
        return None


def load_run(text: str) -> tuple[ExperimentConfig, Targets]:
    """Parse an INI config into (ExperimentConfig, Targets).

    Collects every problem before raising: unknown sections and keys,
    unparseable values, and each violated invariant from the domain
    types, all in one ConfigError.
    """
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"config syntax: {exc}"]) from exc

    problems: list[str] = []
    for name in parser.sections():
        if name not in _SECTIONS:
            problems.append(f"unknown section [{name}]; sections are {_SECTIONS}")

    def section(name: str) -> _Section:
        raw = dict(parser[name]) if parser.has_section(name) else {}
        return _Section(name, raw, problems)

    filt = section("filter")
    fkwargs = dict(
        family=filt.take("family", str, "finite"),
        coeffs=filt.take("coeffs", _float_tuple),
        a=filt.take("a", float),
        r=filt.take("r", float),
        p=filt.take("p", float),
        truncation_lag=filt.take("truncation_lag", int, 0),
        tail_tol=filt.take("tail_tol", float, 1e-8),
    )
    filt.finish()

    innov = section("innovations")
    ikwargs = dict(
        sigma_omega_sq=innov.take("sigma_omega_sq", float, 1.0),
        sigma_sq=innov.take("sigma_sq", float, 1.0),
        pi=innov.take("pi", float, 0.0),
        family=innov.take("family", str, "gaussian"),
    )
    innov.finish()

    model = section("model")
    beta = model.take("beta", float, 1.0)
    varsigma = model.take("varsigma", float, 1.0)
    model.finish()

    exp = section("experiment")
    ekwargs = dict(
        n_grid=exp.take("n_grid", _int_tuple, (500,)),
        reps=exp.take("reps", int, 1000),
        base_seed=exp.take("base_seed", int, 0),
        statistics=exp.take("statistics", _name_tuple, ("fpe_stat",)),
        out_dir=exp.take("out_dir", str),
    )
    exp.finish()

    tgt = section("targets")
    tkwargs = {}
    for f in fields(Targets):
        kind = int if f.type == "int" else float
        tkwargs[f.name] = tgt.take(f.name, kind, f.default)
    tgt.finish()

    filter_spec = _build(FilterSpec, problems, **fkwargs)
    innovations = _build(InnovationSpec, problems, **ikwargs)
    # probe stand-ins keep experiment-level validation running even when an
    # earlier section failed, so one parse reports everything at once
    config = _build(
        ExperimentConfig,
        problems,
        filter_spec=filter_spec or FilterSpec(family="finite", coeffs=(1.0,)),
        innovations=innovations or InnovationSpec(),
        beta=beta,
        varsigma=varsigma,
        **ekwargs,
    )
    if filter_spec is None or innovations is None:
        config = None
    if problems:
        raise ConfigError(problems)
    return config, Targets(**tkwargs)


def parse_config(text: str) -> ExperimentConfig:
    """Validated ExperimentConfig from INI text; see load_run."""
    return load_run(text)[0]


def serialize_config(config: ExperimentConfig, targets: Targets | None = None) -> str:
    """INI text that parses back to an equal config (round-trip)."""

    def fmt(value) -> str:
        if isinstance(value, tuple):
            return ", ".join(fmt(v) for v in value)
        if isinstance(value, float):
            return repr(value)
        return str(value)

    fs = config.filter_spec
    lines = ["[filter]", f"family = {fs.family}"]
    for key in ("coeffs", "a", "r", "p"):
        value = getattr(fs, key)
        if value is not None:
            lines.append(f"{key} = {fmt(value)}")
    lines.append(f"truncation_lag = {fs.truncation_lag}")
    lines.append(f"tail_tol = {fmt(fs.tail_tol)}")

    iv = config.innovations
    lines += [
        "",
        "[innovations]",
        f"sigma_omega_sq = {fmt(iv.sigma_omega_sq)}",
        f"sigma_sq = {fmt(iv.sigma_sq)}",
        f"pi = {fmt(iv.pi)}",
        f"family = {iv.family}",
        "",
        "[model]",
        f"beta = {fmt(config.beta)}",
        f"varsigma = {fmt(config.varsigma)}",
        "",
        "[experiment]",
        f"n_grid = {fmt(config.n_grid)}",
        f"reps = {config.reps}",
        f"base_seed = {config.base_seed}",
        f"statistics = {', '.join(config.statistics)}",
    ]
    if config.out_dir is not None:
        lines.append(f"out_dir = {config.out_dir}")
    if targets is not None:
        lines += ["", "[targets]"]
        for f in fields(Targets):
            lines.append(f"{f.name} = {fmt(getattr(targets, f.name))}")
    return "\n".join(lines) + "\n"


def _row(name: str, estimate: float, target: float, band: float) -> dict:
    return {
        "check": name,
        "estimate": estimate,
        "target": target,
        "band": band,
        "passed": bool(abs(estimate - target) <= band),
    }


def _band(floor: float, se: float | None, mult: float) -> float:
    return max(floor, mult * se) if se else floor


def _require_unit_root(config, name):
    if config.varsigma != 1.0:
        raise ConfigError(
            [f"{name} compares against integrated-regressor limits; set varsigma = 1"]
        )


def _run_fpe(config, targets, out_dir, workers):
    _require_unit_root(config, "fpe")
    cfg = replace(config, statistics=("fpe_stat",))
    summaries = monte_carlo.run(cfg, workers=workers)
    target = 2.0 * config.innovations.sigma_sq
    rows = [
        _row(
            f"fpe_stat @ n={s.n}",
            s.mean,
            target,
            _band(targets.fpe_floor, s.mc_se, targets.se_mult),
        )
        for s in summaries
    ]
    arts = [
        reporting.write_summary_csv(Path(out_dir) / "fpe_summary.csv", summaries),
        reporting.write_json(
            Path(out_dir) / "fpe_summary.json", [s.as_dict() for s in summaries]
        ),
    ]
    # asymptotic claim: judged at the largest n, earlier rows are context
    return rows, rows[-1]["passed"], arts


def _run_ape(config, targets, out_dir, workers):
    _require_unit_root(config, "ape-curve")
    if len(config.n_grid) < 3:
        raise ConfigError(
            [f"ape-curve needs n_grid with >= 3 points to fit a slope, got {len(config.n_grid)}"]
        )
    cfg = replace(config, statistics=("excess_ape",))
    summaries = monte_carlo.run(cfg, workers=workers)
    slope = monte_carlo.ape_slope(summaries)
    target = 2.0 * config.innovations.sigma_sq
    rows = [
        _row(f"excess_ape/log n @ n={s.n}", s.mean / math.log(s.n), target, math.inf)
        for s in summaries
    ]
    slope_row = _row("excess_ape slope", slope, target, targets.slope_rel_band * target)
    rows.append(slope_row)
    arts = [
        reporting.write_summary_csv(Path(out_dir) / "ape_curve.csv", summaries),
        reporting.write_json(
            Path(out_dir) / "ape_curve.json",
            {"slope": slope, "target": target, "grid": [s.as_dict() for s in summaries]},
        ),
    ]
    return rows, slope_row["passed"], arts


def _run_mse(config, targets, out_dir, workers):
    _require_unit_root(config, "mse")
    cfg = replace(config, statistics=("norm_est_sq",))
    summaries = monte_carlo.run(cfg, workers=workers)
    filt = materialize_filter(config.filter_spec)
    params = brownian.LimitParams.from_model(filt, config.innovations)
    target = brownian.mse_limit_formula(params)
    rows = [
        _row(
            f"norm_est_sq @ n={s.n}",
            s.mean,
            target,
            _band(targets.mse_floor, s.mc_se, targets.se_mult),
        )
        for s in summaries
    ]
    arts = [
        reporting.write_summary_csv(Path(out_dir) / "mse_summary.csv", summaries),
        reporting.write_json(
            Path(out_dir) / "mse_summary.json",
            {"target": target, "grid": [s.as_dict() for s in summaries]},
        ),
    ]
    return rows, rows[-1]["passed"], arts


def _run_constants(config, targets, out_dir, workers):
    report = brownian.estimate_constants(
        m=1 << targets.m_log2, reps=targets.bm_reps, base_seed=config.base_seed
    )
    rows = [
        _row(
            "K1 (squared-ratio moment)",
            report.k1.value,
            brownian.CANONICAL_K1.value,
            _band(targets.k1_floor, report.k1.se, targets.se_mult),
        ),
        _row(
            "K2 (inverse-energy moment)",
            report.k2.value,
            brownian.CANONICAL_K2.value,
            _band(targets.k2_floor, report.k2.se, targets.se_mult),
        ),
    ]
    arts = [reporting.write_json(Path(out_dir) / "constants.json", report.as_dict())]
    return rows, all(r["passed"] for r in rows), arts


def _run_cross(config, targets, out_dir, workers):
    out = monte_carlo.cross_moment(config, workers=workers)
    iv = config.innovations
    rho = iv.pi / iv.sigma_omega_sq
    joint_target = 2.0 * iv.sigma_sq
    # product limit K2 sigma^2 + (K1 - K2) rho^2 sigma_omega^2
    prod_target = brownian.CANONICAL_K2.value * iv.sigma_sq + (
        brownian.CANONICAL_K1.value - brownian.CANONICAL_K2.value
    ) * rho**2 * iv.sigma_omega_sq
    rows = [
        _row(
            "joint moment",
            out["joint"],
            joint_target,
            _band(targets.fpe_floor, out["joint_se"], targets.se_mult),
        ),
        _row(
            "product of marginals",
            out["product"],
            prod_target,
            _band(targets.mse_floor, out["product_se"], targets.se_mult),
        ),
        # sign test, not a band test: pass means the estimate sits below
        # -band, so the usual |estimate - target| <= band rule is overridden
        _row(
            "correlation (pass: below -band)",
            out["corr"],
            0.0,
            targets.se_mult * out["corr_se"],
        ),
    ]
    rows[-1]["passed"] = bool(
        out["corr"] < 0.0 and abs(out["corr"]) > targets.se_mult * out["corr_se"]
    )
    arts = [reporting.write_json(Path(out_dir) / "cross_moment.json", out)]
    return rows, all(r["passed"] for r in rows), arts


def _run_stationary(config, targets, out_dir, workers):
    out = monte_carlo.stationary_comparison(config, workers=workers)
    sigma_sq = config.innovations.sigma_sq
    rows = [
        _row(
            "joint moment",
            out["joint"],
            sigma_sq,
            _band(targets.stationary_floor, out["joint_se"], targets.se_mult),
        ),
        _row(
            "product of marginals",
            out["product"],
            sigma_sq,
            _band(targets.stationary_floor, out["product_se"], targets.se_mult),
        ),
        _row("joint - product", out["diff"], 0.0, targets.se_mult * out["diff_se"]),
    ]
    arts = [reporting.write_json(Path(out_dir) / "stationary.json", out)]
    return rows, all(r["passed"] for r in rows), arts


def _run_limit_check(config, targets, out_dir, workers):
    _require_unit_root(config, "limit-check")
    n = config.n_grid[-1]
    arrays = monte_carlo.sample_statistics(config, n, want_ape=False, workers=workers)
    filt = materialize_filter(config.filter_spec)
    params = brownian.LimitParams.from_model(filt, config.innovations)
    draws = brownian.limit_sample_batch(
        params, 1 << targets.m_log2, targets.limit_reps, config.base_seed
    )
    ks = monte_carlo.limit_distribution_check(arrays["fpe_stat"], draws["fpe_limit_draw"])
    rows = [_row(f"KS(finite n={n}, limit law)", ks, 0.0, targets.ks_max)]
    arts = [
        reporting.write_json(
            Path(out_dir) / "limit_check.json",
            {
                "n": n,
                "reps_finite": int(config.reps),
                "reps_limit": int(targets.limit_reps),
                "m": 1 << targets.m_log2,
                "ks_distance": ks,
                "ks_max": targets.ks_max,
            },
        )
    ]
    return rows, rows[0]["passed"], arts


_HANDLERS = {
    "fpe": _run_fpe,
    "ape-curve": _run_ape,
    "mse": _run_mse,
    "constants": _run_constants,
    "cross-moment": _run_cross,
    "stationary": _run_stationary,
    "limit-check": _run_limit_check,
}


def _print_rows(rows, stream) -> None:
    width = max(28, max(len(r["check"]) for r in rows) + 2)
    print(f"{'check':<{width}}{'estimate':>14}{'target':>12}{'band':>12}  flag", file=stream)
    for r in rows:
        band = "-" if math.isinf(r["band"]) else f"{r['band']:.4g}"
        flag = "pass" if r["passed"] else "FAIL"
        print(
            f"{r['check']:<{width}}{r['estimate']:>14.6g}{r['target']:>12.6g}"
            f"{band:>12}  {flag}",
            file=stream,
        )


def dispatch(
    subcommand: str,
    config: ExperimentConfig,
    targets: Targets | None = None,
    out_dir: str | Path = "urlab-out",
    workers: int = 1,
    config_path: str = "<memory>",
    stream=None,
) -> tuple[int, RunManifest]:
    """Run one subcommand (or all), write artifacts, print the table.

    Returns (number of failed comparisons, manifest).  Artifacts and the
    manifest are byte-deterministic for a fixed config and seed.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError([f"subcommand must be one of {SUBCOMMANDS}, got {subcommand!r}"])
    stream = stream if stream is not None else sys.stdout
    names = list(_HANDLERS) if subcommand == "all" else [subcommand]
    failures = 0
    artifacts: list[Path] = []
    for name in names:
        try:
            rows, passed, arts = _HANDLERS[name](config, targets or Targets(), out_dir, workers)
        except ConfigError as exc:
            if subcommand != "all":
                raise
            # mode-gated check: report it as skipped rather than aborting
            print(f"== {name} ==", file=stream)
            print(f"{name}: skipped ({exc.problems[0]})", file=stream)
            continue
        print(f"== {name} ==", file=stream)
        _print_rows(rows, stream)
        print(f"{name}: {'pass' if passed else 'FAIL'}", file=stream)
        failures += 0 if passed else 1
        artifacts.extend(arts)
    manifest = RunManifest(
        config_path=str(config_path),
        subcommand=subcommand,
        out_dir=str(out_dir),
        base_seed=config.base_seed,
        workers=workers,
        artifacts={p.name: reporting.checksum(p) for p in artifacts},
    )
    reporting.write_json(Path(out_dir) / "manifest.json", manifest.as_dict())
    return failures, manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="urlab",
        description="Finite-sample and limit-law checks for least squares "
        "prediction with an integrated regressor.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("config", help="path to an INI experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override base_seed")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument(
        "--strict", action="store_true", help="exit 1 when any comparison fails"
    )
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        config, targets = load_run(text)
        if args.seed is not None:
            config = replace(config, base_seed=args.seed)
        out_dir = args.out or config.out_dir or "urlab-out"
        failures, _ = dispatch(
            args.subcommand,
            config,
            targets,
            out_dir=out_dir,
            workers=args.workers,
            config_path=args.config,
        )
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    if failures and args.strict:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
