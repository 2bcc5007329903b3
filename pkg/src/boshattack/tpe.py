"""Tree Parzen Estimator resampling over archived directions.

The archive is split at the ``alpha`` quantile of recorded distances into a
good set and a bad set. An isotropic Gaussian KDE is fitted to each, with the
bandwidth chosen by leave-one-out likelihood. New directions are drawn from the
good-set density and the draw with the best good/bad density ratio is kept.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.special import logsumexp

from .attackers import Configuration
from .geometry import Env, distortion_c, normalize


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class ArchiveEntry:
    u: np.ndarray
    c_value: float


@dataclass(frozen=True)
class Kde:
    points: np.ndarray  # (n, d)
    bandwidth: float

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def log_density(self, u) -> float:
        return kde_log_density(self, u)

    def log_density_many(self, us: np.ndarray) -> np.ndarray:
        us = np.atleast_2d(np.asarray(us, dtype=np.float64))
        b2 = self.bandwidth ** 2
        sq = (
            np.sum(us * us, axis=1)[:, None]
            - 2.0 * us @ self.points.T
            + np.sum(self.points * self.points, axis=1)[None, :]
        )
        sq = np.maximum(sq, 0.0)
        n, d = self.points.shape
        log_norm = -0.5 * d * math.log(2 * math.pi * b2) - math.log(n)
        return logsumexp(-sq / (2 * b2), axis=1) + log_norm

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.integers(0, self.points.shape[0], size=size)
        return self.points[idx] + self.bandwidth * rng.standard_normal((size, self.dim))


@dataclass
class TpeConfig:
    alpha: float = 0.20
    inner_samples: int = 100
    bandwidth_grid: Sequence[float] | None = None  # None: Scott's rule times GRID_FACTORS
    prefer: Literal["max", "min"] = "max"
    max_redraws: int = 20

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.inner_samples < 1:
            raise ValueError("inner_samples must be positive")
        if self.prefer not in ("max", "min"):
            raise ValueError("prefer must be 'max' or 'min'")


GRID_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


def split_archive(entries: Sequence[ArchiveEntry], alpha: float) -> tuple[list[ArchiveEntry], list[ArchiveEntry]]:
    """Lowest ``ceil(alpha * n)`` entries by ``c_value`` versus the rest.

    The sort is stable, so ties go by insertion order.
    """
    n = len(entries)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 archive entries, got {n}")
    n_low = math.ceil(alpha * n)
    order = sorted(range(n), key=lambda i: entries[i].c_value)
    low = [entries[i] for i in order[:n_low]]
    high = [entries[i] for i in order[n_low:]]
    return low, high


def kde_log_density(kde: Kde, u) -> float:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (kde.dim,):
        raise ValueError(f"query has shape {u.shape}, kde has dimension {kde.dim}")
    return float(kde.log_density_many(u[None, :])[0])


def loo_log_likelihood(points: np.ndarray, bandwidth: float) -> float:
    """Sum over points of the log density of the KDE built from the others."""
    n, d = points.shape
    b2 = bandwidth ** 2
    sq = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=2)
    logk = -sq / (2 * b2)
    np.fill_diagonal(logk, -np.inf)
    log_norm = -0.5 * d * math.log(2 * math.pi * b2) - math.log(n - 1)
    return float(np.sum(logsumexp(logk, axis=1) + log_norm))


def scott_bandwidth(points: np.ndarray) -> float:
    n, d = points.shape
    sigma = float(np.mean(np.std(points, axis=0, ddof=1))) if n > 1 else 0.0
    if not sigma > 0:
        sigma = 1.0
    return sigma * n ** (-1.0 / (d + 4))


def default_grid(points: np.ndarray) -> list[float]:
    pilot = scott_bandwidth(points)
    return [pilot * f for f in GRID_FACTORS]


def fit_kde(points, grid: Sequence[float] | None = None) -> Kde:
    """Gaussian KDE with the grid bandwidth maximizing leave-one-out likelihood.

    Ties go to the smaller bandwidth. A single point gets the grid midpoint.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.size == 0:
        raise ValueError("cannot fit a KDE to no points")
    grid = sorted(default_grid(points) if grid is None else grid)
    if not grid or min(grid) <= 0:
        raise ValueError("bandwidth grid must be nonempty and positive")
    if points.shape[0] == 1:
        return Kde(points, float(grid[len(grid) // 2]))
    best_b, best_ll = None, -np.inf
    for b in grid:
        ll = loo_log_likelihood(points, b)
        if ll > best_ll:
            best_b, best_ll = b, ll
    if best_b is None:
        best_b = grid[0]
    return Kde(points, float(best_b))


def ei_rank_score(l_density: float, g_density: float, gamma: float) -> float:
    """Expected-improvement rank under TPE: ``1 / (gamma + (g/l)(1 - gamma))``."""
    if not (l_density > 0 and g_density > 0):
        raise ValueError("densities must be positive")
    if not 0 < gamma < 1:
        raise ValueError("gamma must be in (0, 1)")
    return 1.0 / (gamma + (g_density / l_density) * (1.0 - gamma))


@dataclass
class Surrogate:
    good: Kde
    bad: Kde
    prefer: str = "max"

    def log_ratio(self, us: np.ndarray) -> np.ndarray:
        return self.good.log_density_many(us) - self.bad.log_density_many(us)

    def propose(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, int]:
        """Draw ``n`` candidates from the good density; return them, their scores, and the pick."""
        cands = self.good.sample(rng, n)
        scores = self.log_ratio(cands)
        pick = int(np.argmax(scores)) if self.prefer == "max" else int(np.argmin(scores))
        return cands, scores, pick


def build_surrogate(entries: Sequence[ArchiveEntry], tpe_cfg: TpeConfig) -> Surrogate:
    low, high = split_archive(entries, tpe_cfg.alpha)
    lp = np.array([normalize(e.u) for e in low])
    hp = np.array([normalize(e.u) for e in high])
    good = fit_kde(lp, tpe_cfg.bandwidth_grid)
    bad = fit_kde(hp, tpe_cfg.bandwidth_grid)
    return Surrogate(good, bad, tpe_cfg.prefer)


@dataclass
class ResampleReport:
    configurations: list[Configuration] = field(default_factory=list)
    failed_slots: int = 0


def tpe_resample(
    entries: Sequence[ArchiveEntry],
    T: int,
    tpe_cfg: TpeConfig,
    rng: np.random.Generator,
    env: Env,
    first_id: int = 0,
    report: ResampleReport | None = None,
) -> list[Configuration]:
    """Propose ``T`` new configurations; each costs one distance evaluation.

    A slot whose chosen candidates never reach the boundary is dropped and
    counted in ``report.failed_slots``.
    """
    if T <= 0:
        return []
    surrogate = build_surrogate(entries, tpe_cfg)
    out = []
    failed = 0
    next_id = first_id
    for _ in range(T):
        start = env.ledger.count
        for _ in range(tpe_cfg.max_redraws):
            cands, _, pick = surrogate.propose(rng, tpe_cfg.inner_samples)
            if not np.linalg.norm(cands[pick]) > 0:
                continue
            u = normalize(cands[pick])
            res = distortion_c(env, u)
            if res is not None:
                out.append(Configuration(u, res.lam, next_id, "resampled", env.ledger.count - start))
                next_id += 1
                break
        else:
            failed += 1
    if report is not None:
        report.configurations.extend(out)
        report.failed_slots += failed
    return out
