"""Direct simulation of the Brownian-functional limit laws.

Normalized on [0, 1]: a path is m Gaussian increments of variance 1/m,
integrals are left-endpoint Riemann/Ito sums.  Left endpoints are
correctness-critical, not a discretization taste: midpoint or right
sums push the self-integral to the Stratonovich value and every
constant below drifts by a w^2 term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ResamplePathError
from .streams import ROLE_CONSTANTS, substream

# Time integrals below this are treated as degenerate (the exact event has
# probability zero; reaching the threshold is a float pathology, and the
# caller should resample from a tagged substream).
_TIME_INTEGRAL_FLOOR = 1e-12

# Rows per generation batch, sized so a batch stays near 16 MiB of draws.
_BATCH_VALUES = 1 << 21


@dataclass(frozen=True, eq=False)
class BmPath:
    """One two-dimensional Brownian path on a regular grid."""

    m: int
    dwa: np.ndarray
    dwb: np.ndarray
    wa: np.ndarray  # levels at grid points 0..m, wa[0] = 0
    wb: np.ndarray

    @classmethod
    def generate(cls, m: int, rng: np.random.Generator) -> "BmPath":
        if m < 1:
            raise ConfigError([f"grid size m must be >= 1, got {m}"])
        z = rng.standard_normal((m, 2)) * math.sqrt(1.0 / m)
        dwa, dwb = z[:, 0], z[:, 1]
        wa = np.concatenate(([0.0], np.cumsum(dwa)))
        wb = np.concatenate(([0.0], np.cumsum(dwb)))
        return cls(m=m, dwa=dwa, dwb=dwb, wa=wa, wb=wb)


@dataclass(frozen=True)
class LimitParams:
    """Scale parameters entering the limit functionals."""

    rho: float
    sigma_omega: float
    sigma_theta: float
    sigma: float
    iota_sq: float
    lam: float

    def problems(self) -> list[str]:
        out = []
        if not self.sigma_omega > 0.0:
            out.append(f"sigma_omega must be > 0, got {self.sigma_omega}")
        if self.sigma_theta < 0.0:
            out.append(f"sigma_theta must be >= 0, got {self.sigma_theta}")
        if not self.iota_sq > 0.0:
            out.append(f"iota_sq must be > 0, got {self.iota_sq}")
        var = self.rho**2 * self.sigma_omega**2 + self.sigma_theta**2
        if abs(var - self.sigma**2) > 1e-9 * max(1.0, var):
            out.append(
                f"sigma^2 = {self.sigma ** 2:.6g} != rho^2 sigma_omega^2 + sigma_theta^2 "
                f"= {var:.6g}"
            )
        if self.sigma_omega > 0.0 and abs(
            self.iota_sq - self.lam**2 / self.sigma_omega**2
        ) > 1e-9 * max(1.0, self.iota_sq):
            out.append(
                f"iota_sq = {self.iota_sq:.6g} != lambda^2 / sigma_omega^2 "
                f"= {self.lam ** 2 / self.sigma_omega ** 2:.6g}"
            )
        return out

    def __post_init__(self):
        probs = self.problems()
        if probs:
            raise ConfigError(probs)

    @classmethod
    def create(cls, rho: float, sigma_omega: float, sigma_theta: float, theta: float) -> "LimitParams":
        """Build consistent params from the primitive scales."""
        sigma = math.sqrt(rho**2 * sigma_omega**2 + sigma_theta**2)
        return cls(
            rho=rho,
            sigma_omega=sigma_omega,
            sigma_theta=sigma_theta,
            sigma=sigma,
            iota_sq=theta**2,
            lam=sigma_omega * theta,
        )

    @classmethod
    def from_model(cls, filt, innov) -> "LimitParams":
        """Params implied by a materialized filter and an innovation spec."""
        from .innovations import derived_correlation

        rho, sigma_theta_sq = derived_correlation(innov)
        return cls.create(
            rho=rho,
            sigma_omega=math.sqrt(innov.sigma_omega_sq),
            sigma_theta=math.sqrt(sigma_theta_sq),
            theta=filt.theta,
        )


def ito_integral(levels: np.ndarray, increments: np.ndarray) -> float:
    """Left-endpoint Ito sum: sum_k levels[k-1] * increments[k]."""
    if len(levels) != len(increments) + 1:
        raise ValueError(
            f"levels has {len(levels)} points but increments has {len(increments)}; "
            "need len(levels) == len(increments) + 1"
        )
    return float(np.dot(levels[:-1], increments))


def time_integral_sq(levels: np.ndarray) -> float:
    """Left Riemann sum of w^2 over [0, 1]: (1/m) sum_k levels[k-1]^2."""
    if len(levels) < 2:
        raise ValueError("need at least one increment")
    w = levels[:-1]
    return float(np.dot(w, w)) / (len(levels) - 1)


def limit_sample(path: BmPath, p: LimitParams) -> dict:
    """One dependent draw of the two limit functionals from a shared path.

        fpe draw: wa(1)^2 (rho sig_w I_aa + sig_t I_ab)^2 / Q^2
        mse draw: the same ratio without the wa(1)^2 factor, over lambda^2

    with I_aa, I_ab the Ito integrals of wa against dwa, dwb and
    Q the time integral of wa^2.
    """
    q = time_integral_sq(path.wa)
    if q < _TIME_INTEGRAL_FLOOR:
        raise ResamplePathError(f"time integral {q:.3g} below {_TIME_INTEGRAL_FLOOR}")
    i_aa = ito_integral(path.wa, path.dwa)
    i_ab = ito_integral(path.wa, path.dwb)
    num = (p.rho * p.sigma_omega * i_aa + p.sigma_theta * i_ab) ** 2
    return {
        "fpe_limit_draw": path.wa[-1] ** 2 * num / q**2,
        "mse_limit_draw": num / (p.lam**2 * q**2),
    }


def _batch_rows(m: int) -> int:
    return max(1, _BATCH_VALUES // max(m, 1))


def limit_sample_batch(
    p: LimitParams, m: int, reps: int, base_seed: int, role: int = 1
) -> dict:
    """Vectorized limit_sample over ``reps`` paths.

    Draws are keyed by (base_seed, role, batch index) with a fixed batch
    width, so results do not depend on how the loop is scheduled.
    Degenerate paths (time integral under the floor) are replaced from
    attempt-tagged substreams and counted.
    """
    fpe = np.empty(reps)
    mse = np.empty(reps)
    rows = _batch_rows(2 * m)
    resampled = 0
    start = 0
    batch = 0
    scale = math.sqrt(1.0 / m)
    while start < reps:
        take = min(rows, reps - start)
        rng = substream(base_seed, role, batch)
        z = rng.standard_normal((take, m, 2)) * scale
        dwa, dwb = z[:, :, 0], z[:, :, 1]
        wa = np.cumsum(dwa, axis=1)
        lev = np.concatenate((np.zeros((take, 1)), wa), axis=1)
        q = np.einsum("ij,ij->i", lev[:, :-1], lev[:, :-1]) / m
        for r in np.nonzero(q < _TIME_INTEGRAL_FLOOR)[0]:
            attempt = 1
            while True:
                sub = substream(base_seed, role, start + int(r), attempt)
                z2 = sub.standard_normal((m, 2)) * scale
                la = np.concatenate(([0.0], np.cumsum(z2[:, 0])))
                if time_integral_sq(la) >= _TIME_INTEGRAL_FLOOR:
                    dwa[r], dwb[r] = z2[:, 0], z2[:, 1]
                    lev[r] = la
                    q[r] = time_integral_sq(la)
                    break
                attempt += 1
            resampled += 1
        i_aa = np.einsum("ij,ij->i", lev[:, :-1], dwa)
        i_ab = np.einsum("ij,ij->i", lev[:, :-1], dwb)
        num = (p.rho * p.sigma_omega * i_aa + p.sigma_theta * i_ab) ** 2
        fpe[start : start + take] = lev[:, -1] ** 2 * num / q**2
        mse[start : start + take] = num / (p.lam**2 * q**2)
        start += take
        batch += 1
    return {"fpe_limit_draw": fpe, "mse_limit_draw": mse, "resampled": resampled}


@dataclass(frozen=True)
class ConstantEstimate:
    """A limit-constant value with its provenance."""

    name: str
    value: float
    se: float | None
    m: int | None
    reps: int | None
    seed: int | None
    source: str

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "se": self.se,
            "m": self.m,
            "reps": self.reps,
            "seed": self.seed,
            "source": self.source,
        }


# Two-digit constants as printed in the source analysis; usable wherever a
# formula needs K1/K2 without paying for re-estimation.
CANONICAL_K1 = ConstantEstimate("K1", 13.3, None, None, None, None, "canonical")
CANONICAL_K2 = ConstantEstimate("K2", 5.6, None, None, None, None, "canonical")


@dataclass(frozen=True)
class ConstantsReport:
    """Estimates at grid m plus the matched-path refinement at 2m."""

    m: int
    reps: int
    seed: int
    k1: ConstantEstimate
    k2: ConstantEstimate
    k1_refined: ConstantEstimate
    k2_refined: ConstantEstimate
    k1_gap: float  # |K1(m) - K1(2m)| on common paths
    k2_gap: float

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "reps": self.reps,
            "seed": self.seed,
            "k1": self.k1.as_dict(),
            "k2": self.k2.as_dict(),
            "k1_refined": self.k1_refined.as_dict(),
            "k2_refined": self.k2_refined.as_dict(),
            "k1_gap": self.k1_gap,
            "k2_gap": self.k2_gap,
        }


def estimate_constants(
    m: int = 1 << 12, reps: int = 200_000, base_seed: int = 0
) -> ConstantsReport:
    """Monte Carlo estimates of K1 = E[(I/Q)^2] and K2 = E[1/Q].

    Paths are simulated once at grid 2m and coarsened to m by summing
    increment pairs (exact in law), so the (m, 2m) refinement gap is a
    matched-path discretization measurement rather than two noisy runs.
    """
    if m < 2:
        raise ConfigError([f"grid size m must be >= 2, got {m}"])
    if reps < 2:
        raise ConfigError([f"reps must be >= 2, got {reps}"])
    m_fine = 2 * m
    rows = _batch_rows(m_fine)
    sums = np.zeros(4)
    sums_sq = np.zeros(4)
    gaps = np.zeros(2)
    start = 0
    batch = 0
    scale = math.sqrt(1.0 / m_fine)
    while start < reps:
        take = min(rows, reps - start)
        rng = substream(base_seed, ROLE_CONSTANTS, batch)
        dw_f = rng.standard_normal((take, m_fine)) * scale
        lev_f = np.concatenate((np.zeros((take, 1)), np.cumsum(dw_f, axis=1)), axis=1)
        k1_f, k2_f = _constant_draws(lev_f, dw_f, m_fine)
        dw_c = dw_f.reshape(take, m, 2).sum(axis=2)
        lev_c = lev_f[:, ::2]
        k1_c, k2_c = _constant_draws(lev_c, dw_c, m)
        draws = (k1_c, k2_c, k1_f, k2_f)
        sums += np.array([d.sum() for d in draws])
        sums_sq += np.array([(d**2).sum() for d in draws])
        gaps += np.array([(k1_c - k1_f).sum(), (k2_c - k2_f).sum()])
        start += take
        batch += 1
    means = sums / reps
    variances = np.maximum(sums_sq / reps - means**2, 0.0)
    ses = np.sqrt(variances / (reps - 1))
    mk = lambda name, j, grid: ConstantEstimate(
        name, float(means[j]), float(ses[j]), grid, reps, base_seed, "estimated"
    )
    return ConstantsReport(
        m=m,
        reps=reps,
        seed=base_seed,
        k1=mk("K1", 0, m),
        k2=mk("K2", 1, m),
        k1_refined=mk("K1", 2, m_fine),
        k2_refined=mk("K2", 3, m_fine),
        k1_gap=abs(float(gaps[0] / reps)),
        k2_gap=abs(float(gaps[1] / reps)),
    )


def _constant_draws(lev: np.ndarray, dw: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    w = lev[:, :-1]
    q = np.einsum("ij,ij->i", w, w) / m
    q = np.maximum(q, _TIME_INTEGRAL_FLOOR)  # guards the astronomically rare zero path
    i_self = np.einsum("ij,ij->i", w, dw)
    return (i_self / q) ** 2, 1.0 / q


def mse_limit_formula(
    p: LimitParams,
    k1: float = CANONICAL_K1.value,
    k2: float = CANONICAL_K2.value,
) -> float:
    """Limit of n^2 E(beta_hat - beta)^2 implied by (K1, K2) and the scales."""
    return (p.rho**2 / p.iota_sq) * k1 + (
        p.sigma_theta**2 / (p.iota_sq * p.sigma_omega**2)
    ) * k2
