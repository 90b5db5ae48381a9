"""Replicated finite-n experiments over sample-size grids.

The engine vectorizes across replications in fixed-size batches while
keeping one keyed stream per replication, so every per-path statistic is
bit-identical no matter the worker count, batch shape, or completion
order.  Aggregation happens once, on assembled full-length arrays, to
keep reductions deterministic too.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import brownian
from .errors import ConfigError
from .innovations import InnovationSpec, _standardized, derived_correlation
from .linear_process import FilterSpec, materialize_filter, stationary_burn_in
from .streams import ROLE_PATH, substream

STATISTICS = (
    "excess_ape",
    "fpe_stat",
    "norm_est_sq",
    "x_n_sq_over_n",
    "cross_moment",
    "log_fisher",
)

# Internal per-path columns the engine can produce.
_COLUMNS = (
    "ape",
    "excess_ape",
    "fpe_stat",
    "norm_est_sq",
    "x_n_sq_over_n",
    "x_n_sq",
    "n_est_sq",
    "log_fisher",
    "beta_hat_final",
)

_CHUNK = 4096        # replications per deterministic work unit
_ROW_VALUES = 1 << 22  # float budget per generation batch

MAX_FAILURE_RATE = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    """Model plus experiment layout for one run."""

    filter_spec: FilterSpec
    innovations: InnovationSpec
    beta: float = 1.0
    varsigma: float = 1.0
    n_grid: tuple[int, ...] = (500,)
    reps: int = 1000
    base_seed: int = 0
    statistics: tuple[str, ...] = ("fpe_stat",)
    out_dir: str | None = None

    def problems(self) -> list[str]:
        out = []
        if self.reps < 2:
            out.append(f"reps must be >= 2, got {self.reps}")
        grid = tuple(self.n_grid)
        if not grid:
            out.append("n_grid must be non-empty")
        else:
            if any(n < 3 for n in grid):
                out.append(f"every n must be >= 3 (shorter paths score nothing), got {grid}")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                out.append(f"n_grid must be strictly increasing, got {grid}")
        if not (abs(self.varsigma) < 1.0 or self.varsigma == 1.0):
            out.append(
                f"varsigma must be 1 (unit root) or |varsigma| < 1 (stationary), got {self.varsigma}"
            )
        unknown = [s for s in self.statistics if s not in STATISTICS]
        if unknown:
            out.append(f"unknown statistics {unknown}; menu is {STATISTICS}")
        if not self.statistics:
            out.append("statistics must name at least one entry")
        return out

    def __post_init__(self):
        if not isinstance(self.n_grid, tuple):
            object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if not isinstance(self.statistics, tuple):
            object.__setattr__(self, "statistics", tuple(self.statistics))
        probs = self.problems()
        if probs:
            raise ConfigError(probs)


@dataclass(frozen=True)
class McSummary:
    """Aggregate of one statistic at one sample size."""

    statistic: str
    n: int
    mean: float
    mc_se: float | None  # reported only when reps >= 30
    reps: int
    seed: int
    ratio: float | None  # mean over its asymptotic target, when one exists

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "n": self.n,
            "mean": self.mean,
            "mc_se": self.mc_se,
            "reps": self.reps,
            "seed": self.seed,
            "ratio": self.ratio,
        }


def _degenerate_mask(u: np.ndarray) -> np.ndarray:
    """Rows on which no prediction can ever be scored.

    A path is usable only if some regressor before the final pair is
    nonzero; otherwise the estimate either never exists or exists too
    late to predict anything.
    """
    return ~np.any(u[:, :-1] != 0.0, axis=1)


def _path_columns(
    om: np.ndarray,
    eps: np.ndarray,
    filt_coeffs: np.ndarray,
    beta: float,
    varsigma: float,
    burn: int,
    n: int,
    want_ape: bool,
) -> tuple[dict, np.ndarray]:
    """Per-path statistics for a batch of draw matrices.

    Row results are independent of how rows are batched: every operation
    acts along axis 1.  Returns (columns, degenerate row mask).
    """
    eta = signal.lfilter(filt_coeffs, [1.0], om[:, :-1], axis=1)
    if varsigma == 1.0:
        xs = np.cumsum(eta, axis=1)
    else:
        xs = signal.lfilter([1.0], [1.0, -varsigma], eta, axis=1)
    x = xs[:, burn:]                    # x_1 .. x_n
    y = beta * x + eps[:, burn + 1 :]   # y_2 .. y_{n+1}
    u = x[:, : n - 1]                   # pair regressors x_1 .. x_{n-1}
    v = y[:, : n - 1]                   # pair responses  y_2 .. y_n
    bad = _degenerate_mask(u)

    uu = u * u
    uv = u * v
    s_xx = uu.sum(axis=1)
    s_xy = uv.sum(axis=1)
    safe_xx = np.where(s_xx > 0.0, s_xx, 1.0)
    beta_hat = s_xy / safe_xx
    d = beta_hat - beta
    x_n = x[:, -1]

    cols: dict[str, np.ndarray] = {}
    cols["beta_hat_final"] = beta_hat
    cols["norm_est_sq"] = (n * d) ** 2
    cols["x_n_sq_over_n"] = x_n**2 / n
    cols["fpe_stat"] = cols["x_n_sq_over_n"] * cols["norm_est_sq"]
    cols["x_n_sq"] = x_n**2
    cols["n_est_sq"] = n * d**2
    with np.errstate(divide="ignore"):
        cols["log_fisher"] = np.where(
            s_xx > 0.0, np.log(safe_xx) - 2.0 * math.log(n), np.nan
        )

    if want_ape:
        c_xx = np.cumsum(uu, axis=1)[:, :-1]  # energy after pairs 1..n-2
        c_xy = np.cumsum(uv, axis=1)[:, :-1]
        ok = c_xx > 0.0
        bh_path = c_xy / np.where(ok, c_xx, 1.0)
        err = v[:, 1:] - u[:, 1:] * bh_path
        ape = np.where(ok, err * err, 0.0).sum(axis=1)
        eps_scored = eps[:, burn + 2 : burn + n]
        sse = np.where(ok, eps_scored * eps_scored, 0.0).sum(axis=1)
        cols["ape"] = ape
        cols["excess_ape"] = ape - sse
    return cols, bad


def _chunk_worker(args) -> tuple[dict, int]:
    (
        filt,
        innov,
        beta,
        varsigma,
        n,
        rep_start,
        rep_stop,
        base_seed,
        want_ape,
        max_failures,
    ) = args
    burn = stationary_burn_in(varsigma)
    total = burn + n + 1
    count = rep_stop - rep_start
    rho, sigma_theta_sq = derived_correlation(innov)
    s_om = math.sqrt(innov.sigma_omega_sq)
    s_th = math.sqrt(sigma_theta_sq)

    out = {name: np.empty(count) for name in _COLUMNS if want_ape or name not in ("ape", "excess_ape")}
    failures = 0
    rows = max(4, _ROW_VALUES // (2 * total))
    for block in range(rep_start, rep_stop, rows):
        stop = min(block + rows, rep_stop)
        reps = list(range(block, stop))
        attempt = dict.fromkeys(reps, 0)
        pending = reps
        while pending:
            z = np.empty((len(pending), total, 2))
            for k, rep in enumerate(pending):
                rng = substream(base_seed, ROLE_PATH, rep, attempt[rep])
                z[k] = _standardized(rng, innov.family, (total, 2))
            om = s_om * z[:, :, 0]
            eps = rho * om + s_th * z[:, :, 1]
            cols, bad = _path_columns(
                om, eps, filt.coeffs, beta, varsigma, burn, n, want_ape
            )
            good = ~bad
            idx = np.array([r - rep_start for r in pending])
            for name, col in cols.items():
                out[name][idx[good]] = col[good]
            failed = [pending[j] for j in np.nonzero(bad)[0]]
            failures += len(failed)
            if failures > max_failures:
                raise RuntimeError(
                    f"degenerate-path rate exceeded {MAX_FAILURE_RATE:.1%} "
                    f"({failures} resample events); model cannot score predictions"
                )
            for rep in failed:
                attempt[rep] += 1
            pending = failed
    return out, failures


def sample_statistics(
    config: ExperimentConfig,
    n: int,
    want_ape: bool | None = None,
    workers: int = 1,
) -> dict[str, np.ndarray]:
    """Per-path statistic columns over all replications at one n.

    Deterministic for fixed (config, n): replication streams are keyed by
    global replication index, work is cut into fixed-size chunks, and
    chunk results are reassembled in index order regardless of which
    worker produced them.
    """
    if want_ape is None:
        want_ape = "excess_ape" in config.statistics
    filt = materialize_filter(config.filter_spec)
    max_failures = max(1.0, MAX_FAILURE_RATE * config.reps)
    chunks = [
        (
            filt,
            config.innovations,
            config.beta,
            config.varsigma,
            n,
            start,
            min(start + _CHUNK, config.reps),
            config.base_seed,
            want_ape,
            max_failures,
        )
        for start in range(0, config.reps, _CHUNK)
    ]
    if workers <= 1 or len(chunks) == 1:
        results = [_chunk_worker(c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_worker, chunks))
    failures = sum(r[1] for r in results)
    if failures > max_failures:
        raise RuntimeError(
            f"degenerate-path rate exceeded {MAX_FAILURE_RATE:.1%} "
            f"({failures} resample events over {config.reps} reps)"
        )
    merged = {
        name: np.concatenate([r[0][name] for r in results])
        for name in results[0][0]
    }
    merged["resampled"] = np.array([failures])
    return merged


def _mean_se(a: np.ndarray) -> tuple[float, float]:
    r = len(a)
    mean = float(np.sum(a) / r)
    if r < 2:
        return mean, float("nan")
    var = float(np.sum((a - mean) ** 2) / (r - 1))
    return mean, math.sqrt(var / r)


def _ratio_target(config: ExperimentConfig, statistic: str, n: int) -> float | None:
    """Asymptotic normalization for each statistic, if one applies.

    The targets are integrated-regressor limits, so stationary-mode runs
    get no ratio column.
    """
    if config.varsigma != 1.0:
        return None
    sigma_sq = config.innovations.sigma_sq
    filt = materialize_filter(config.filter_spec)
    if statistic == "fpe_stat":
        return 2.0 * sigma_sq
    if statistic == "excess_ape":
        return 2.0 * sigma_sq * math.log(n)
    if statistic == "norm_est_sq":
        params = brownian.LimitParams.from_model(filt, config.innovations)
        return brownian.mse_limit_formula(params)
    if statistic == "x_n_sq_over_n":
        return filt.lambda_given(math.sqrt(config.innovations.sigma_omega_sq)) ** 2
    if statistic == "log_fisher":
        return 2.0 * math.log(n)
    return None


def run(config: ExperimentConfig, workers: int = 1) -> list[McSummary]:
    """Mean and MC standard error of each requested statistic at each n."""
    scalar_stats = [s for s in config.statistics if s != "cross_moment"]
    summaries = []
    for n in config.n_grid:
        arrays = sample_statistics(config, n, workers=workers)
        for stat in scalar_stats:
            mean, se = _mean_se(arrays[stat])
            target = _ratio_target(config, stat, n)
            summaries.append(
                McSummary(
                    statistic=stat,
                    n=n,
                    mean=mean,
                    mc_se=se if config.reps >= 30 else None,
                    reps=config.reps,
                    seed=config.base_seed,
                    ratio=mean / target if target else None,
                )
            )
    return summaries


def ape_slope(summaries: list[McSummary]) -> float:
    """OLS slope of mean excess APE against log n over the grid."""
    pts = [(math.log(s.n), s.mean) for s in summaries if s.statistic == "excess_ape"]
    if len(pts) < 3:
        raise ValueError(f"need >= 3 excess_ape grid points, got {len(pts)}")
    lx = np.array([p[0] for p in pts])
    ly = np.array([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def cross_moment(
    config: ExperimentConfig, workers: int = 1, n: int | None = None
) -> dict:
    """Joint vs product-of-marginals moments of (x_n^2/n, n^2(bh-b)^2).

    The joint moment is the mean of the per-path product, which is the
    per-path fpe_stat by construction; the marginal product estimates the
    limit of the decoupled moments.
    """
    if config.varsigma != 1.0:
        raise ConfigError(["cross_moment requires unit-root mode (varsigma = 1)"])
    if n is None:
        n = config.n_grid[-1]
    arrays = sample_statistics(config, n, want_ape=False, workers=workers)
    a = arrays["x_n_sq_over_n"]
    b = arrays["norm_est_sq"]
    joint, joint_se = _mean_se(arrays["fpe_stat"])
    mean_a, se_a = _mean_se(a)
    mean_b, se_b = _mean_se(b)
    r = len(a)
    cov_ab = float(np.sum((a - mean_a) * (b - mean_b)) / (r - 1))
    product = mean_a * mean_b
    product_se = math.sqrt(
        max(
            mean_b**2 * se_a**2
            + mean_a**2 * se_b**2
            + 2.0 * mean_a * mean_b * cov_ab / r,
            0.0,
        )
    )
    sd_a = math.sqrt(float(np.sum((a - mean_a) ** 2) / (r - 1)))
    sd_b = math.sqrt(float(np.sum((b - mean_b) ** 2) / (r - 1)))
    corr = cov_ab / (sd_a * sd_b)
    corr_se = (1.0 - corr**2) / math.sqrt(r - 3)
    return {
        "n": n,
        "reps": r,
        "joint": joint,
        "joint_se": joint_se,
        "product": product,
        "product_se": product_se,
        "mean_x_n_sq_over_n": mean_a,
        "se_x_n_sq_over_n": se_a,
        "mean_norm_est_sq": mean_b,
        "se_norm_est_sq": se_b,
        "corr": corr,
        "corr_se": corr_se,
    }


def stationary_comparison(
    config: ExperimentConfig, workers: int = 1, n: int | None = None
) -> dict:
    """Joint and product moments of (x_n^2, n(bh-b)^2) in stationary mode.

    Both tend to sigma^2 and decouple in the limit, the contrast with the
    unit-root cross moment.
    """
    if not abs(config.varsigma) < 1.0:
        raise ConfigError(
            [f"stationary_comparison requires |varsigma| < 1, got {config.varsigma}"]
        )
    if n is None:
        n = config.n_grid[-1]
    arrays = sample_statistics(config, n, want_ape=False, workers=workers)
    a = arrays["x_n_sq"]
    b = arrays["n_est_sq"]
    joint, joint_se = _mean_se(a * b)
    mean_a, _ = _mean_se(a)
    mean_b, _ = _mean_se(b)
    r = len(a)
    cov_ab = float(np.sum((a - mean_a) * (b - mean_b)) / (r - 1))
    se_a = math.sqrt(float(np.sum((a - mean_a) ** 2) / (r - 1)) / r)
    se_b = math.sqrt(float(np.sum((b - mean_b) ** 2) / (r - 1)) / r)
    product = mean_a * mean_b
    product_se = math.sqrt(
        max(
            mean_b**2 * se_a**2
            + mean_a**2 * se_b**2
            + 2.0 * mean_a * mean_b * cov_ab / r,
            0.0,
        )
    )
    q = (a - mean_a) * (b - mean_b)
    diff_se = _mean_se(q)[1]
    return {
        "n": n,
        "reps": r,
        "joint": joint,
        "joint_se": joint_se,
        "product": product,
        "product_se": product_se,
        "diff": joint - product,
        "diff_se": diff_se,
    }


def two_sample_ks(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate((a, b))
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def limit_distribution_check(
    finite_sample: np.ndarray, limit_sample: np.ndarray
) -> float:
    """KS distance between finite-n fpe_stat draws and limit-law draws."""
    if len(finite_sample) < 1000 or len(limit_sample) < 1000:
        raise ValueError(
            f"need >= 1000 samples per side, got {len(finite_sample)} and {len(limit_sample)}"
        )
    return two_sample_ks(finite_sample, limit_sample)
