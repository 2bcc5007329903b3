"""Distance from ``x0`` to the decision boundary along a direction.

The direction objective is ``C(u) = min lambda > 0 s.t. f(x0 + lambda u/|u|) != y0``.
It is evaluated by a geometric bracketing search followed by bisection.
Points exactly on the boundary count as adversarial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .victim import QueryLedger, VictimModel, predict


class BracketError(ValueError):
    """Bisection called with a bracket that does not straddle the boundary."""


@dataclass(frozen=True)
class SearchParams:
    lambda0: float = 1.0
    growth: float = 2.0
    lambda_max: float | None = None  # defaults to 100 * lambda0
    rel_tol: float = 1e-3
    max_shrink: int = 20

    def __post_init__(self):
        if not (self.lambda0 > 0 and self.growth > 1 and self.rel_tol > 0):
            raise ValueError("need lambda0 > 0, growth > 1, rel_tol > 0")

    @property
    def cap(self) -> float:
        return 100.0 * self.lambda0 if self.lambda_max is None else self.lambda_max


@dataclass
class Env:
    """Everything an attack needs to query one example."""

    model: VictimModel
    x0: np.ndarray
    y0: int
    ledger: QueryLedger
    search: SearchParams = SearchParams()

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64)

    def is_adversarial(self, x) -> bool:
        return predict(self.model, x, self.ledger) != self.y0

    def adversarial_at(self, u_hat: np.ndarray, lam: float) -> bool:
        return self.is_adversarial(self.x0 + lam * u_hat)


@dataclass(frozen=True)
class DistanceResult:
    lam: float
    bracket_width: float
    queries_used: int


def normalize(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValueError("direction has non-finite entries")
    n = np.linalg.norm(u)
    if not n > 0:
        raise ValueError("direction must be nonzero")
    return u / n


def initial_distance(
    env: Env,
    u,
    lambda0: float | None = None,
    growth: float | None = None,
    lambda_max: float | None = None,
) -> tuple[float, float] | None:
    """Coarse bracket ``(lo, hi)`` with ``lo`` clean and ``hi`` adversarial.

    Grows geometrically from ``lambda0`` until an adversarial point is hit or
    ``lambda_max`` is passed (returns None). If ``lambda0`` is already
    adversarial, shrinks instead; ``lo = 0`` when no clean point is found.
    """
    sp = env.search
    lambda0 = sp.lambda0 if lambda0 is None else lambda0
    growth = sp.growth if growth is None else growth
    lambda_max = (100.0 * lambda0 if sp.lambda_max is None else sp.lambda_max) if lambda_max is None else lambda_max
    if not all(math.isfinite(v) for v in (lambda0, growth, lambda_max)):
        raise ValueError("search schedule must be finite")
    if not (lambda0 > 0 and growth > 1):
        raise ValueError("need lambda0 > 0 and growth > 1")
    u_hat = normalize(u)

    if env.adversarial_at(u_hat, lambda0):
        hi = lambda0
        for _ in range(sp.max_shrink):
            lo = hi / growth
            if not env.adversarial_at(u_hat, lo):
                return lo, hi
            hi = lo
        return 0.0, hi

    lo = lambda0
    while lo < lambda_max:
        hi = min(lo * growth, lambda_max)
        if env.adversarial_at(u_hat, hi):
            return lo, hi
        lo = hi
    return None


def binary_search_distance(env: Env, u, bracket: tuple[float, float], tol: float, check: bool = False) -> DistanceResult:
    """Bisect ``bracket`` down to width ``tol``; returns the adversarial end.

    With ``check=True`` both endpoints are verified first (two extra queries).
    """
    lo, hi = bracket
    if not (tol > 0 and lo < hi and lo >= 0):
        raise BracketError(f"invalid bracket {bracket} or tol {tol}")
    u_hat = normalize(u)
    used = 0
    if check:
        used += 2
        if lo > 0 and env.adversarial_at(u_hat, lo):
            raise BracketError(f"lower end {lo} is adversarial")
        if not env.adversarial_at(u_hat, hi):
            raise BracketError(f"upper end {hi} is not adversarial")
        if lo == 0:
            used -= 1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if env.adversarial_at(u_hat, mid):
            hi = mid
        else:
            lo = mid
        used += 1
    return DistanceResult(hi, hi - lo, used)


def distortion_c(env: Env, u, lambda0: float | None = None) -> DistanceResult | None:
    """Evaluate ``C(u)``; None when no adversarial point exists up to the cap.

    The bisection stops once the bracket width is within ``rel_tol`` of its
    clean end, so the result is within ``rel_tol`` relative of the boundary
    crossing that the bracket isolates.
    """
    start = env.ledger.count
    bracket = initial_distance(env, u, lambda0=lambda0)
    if bracket is None:
        return None
    res = _refine(env, u, bracket)
    return DistanceResult(res.lam, res.bracket_width, env.ledger.count - start)


def _refine(env: Env, u, bracket: tuple[float, float]) -> DistanceResult:
    """Bisect until the width is within ``rel_tol`` of the clean end.

    A bracket starting at 0 is first bisected relative to its upper end and
    then tightened again once a positive clean end is known.
    """
    lo, hi = bracket
    while True:
        tol = env.search.rel_tol * (lo if lo > 0 else hi)
        res = binary_search_distance(env, u, (lo, hi), tol)
        lo, hi = res.lam - res.bracket_width, res.lam
        if lo > 0 and res.bracket_width <= env.search.rel_tol * lo:
            return res
        if lo <= 0 and hi <= env.search.rel_tol * env.search.lambda0 * 1e-6:
            return res


def distance_below(env: Env, u, cap: float) -> DistanceResult | None:
    """``C(u)`` if it does not exceed ``cap``, else None after a single query.

    Used for acceptance tests in line searches: a rejected candidate costs one
    query, an accepted one pays for its bisection.
    """
    u_hat = normalize(u)
    start = env.ledger.count
    if not env.adversarial_at(u_hat, cap):
        return None
    hi = cap
    lo = None
    growth = env.search.growth
    for _ in range(env.search.max_shrink):
        cand = hi / growth
        if not env.adversarial_at(u_hat, cand):
            lo = cand
            break
        hi = cand
    if lo is None:
        lo = 0.0
    res = _refine(env, u_hat, (lo, hi))
    return DistanceResult(res.lam, res.bracket_width, env.ledger.count - start)
