"""Successive halving with TPE resampling over a pool of attack trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .attackers import (
    AttackerConfig,
    Configuration,
    PreconditionError,  # re-exported for callers of run_bosh
    Stepper,
    TraceRecord,
    check_start,
    config_rng,
    run_steps,
    sample_initial_direction,
)
from .geometry import Env
from .tpe import ArchiveEntry, ResampleReport, TpeConfig, tpe_resample


@dataclass
class BoshConfig:
    """Pool schedule.

    ``m0`` and stage lengths are in attacker steps; budgets are in queries.
    ``resample_cap`` bounds the matched-to-cut count per stage (None: no cap).
    """

    k: int = 30
    m0: int = 3500
    cut_frac: float = 0.5
    interval_ratio: float = 1.4
    resample_rule: Literal["matched", "fixed", "off"] = "matched"
    resample_cap: int | None = 3
    fixed_resample: int = 3
    count_before_cut: bool = False
    per_dir_budget: int = 40000
    total_budget: int | None = None  # None: k * per_dir_budget
    seed: int = 0
    max_stages: int = 1000

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0 < self.cut_frac < 1:
            raise ValueError("cut_frac must be in (0, 1)")
        if self.m0 < 1 or self.interval_ratio < 1:
            raise ValueError("need m0 >= 1 and interval_ratio >= 1")
        if self.resample_rule not in ("matched", "fixed", "off"):
            raise ValueError(f"unknown resample rule {self.resample_rule!r}")

    @property
    def budget(self) -> int:
        return self.k * self.per_dir_budget if self.total_budget is None else self.total_budget


# Preset schedules per dataset: per-direction budget, first interval,
# interval increase ratio, resamples per stage.
SCHEDULES = {
    "mnist": dict(per_dir_budget=40000, m0=3500, interval_ratio=1.4, resample_cap=3),
    "cifar10": dict(per_dir_budget=20000, m0=2000, interval_ratio=1.3, resample_cap=3),
    "imagenet": dict(per_dir_budget=200000, m0=6000, interval_ratio=1.6, resample_cap=4),
}


@dataclass
class Pool:
    active: list[Configuration] = field(default_factory=list)

    def __len__(self):
        return len(self.active)

    def best(self) -> Configuration:
        return min(self.active, key=lambda c: (c.lam, c.config_id))


@dataclass
class Archive:
    entries: list[ArchiveEntry] = field(default_factory=list)

    def record(self, cfg: Configuration) -> None:
        self.entries.append(ArchiveEntry(cfg.u, cfg.lam))

    def __len__(self):
        return len(self.entries)


@dataclass
class StageLog:
    stage_index: int
    m: int
    pool_size: int
    best_lambda: float


@dataclass
class BoshResult:
    best: Configuration
    total_queries: int
    stage_log: list[StageLog]
    trace: list[TraceRecord]
    initial: list[Configuration]
    resample_failures: int = 0


def stage_lengths(m0: int, ratio: float, n: int) -> list[int]:
    out, m = [], m0
    for _ in range(n):
        out.append(m)
        m = int(round(m * ratio))
    return out


def init_pool(
    k: int, env: Env, seed: int, mode: str = "gaussian", rngs: dict[int, np.random.Generator] | None = None
) -> tuple[Pool, Archive]:
    """Sample ``k`` starts. Each config's generator is left in ``rngs`` so its
    trajectory continues the same stream, as in a single run."""
    if k < 1:
        raise ValueError("k must be at least 1")
    pool, archive = Pool(), Archive()
    d = env.x0.shape[0]
    rngs = {} if rngs is None else rngs
    for i in range(k):
        rngs[i] = config_rng(seed, i)
        cfg = sample_initial_direction(rngs[i], d, env, config_id=i, mode=mode)
        pool.active.append(cfg)
        archive.record(cfg)
    return pool, archive


def cut_pool(pool: Pool, s: float) -> list[Configuration]:
    """Drop the ``floor(s * n)`` largest distances; later ids go first on ties."""
    n = len(pool)
    n_cut = min(math.floor(s * n), n - 1)
    if n_cut <= 0:
        return []
    order = sorted(pool.active, key=lambda c: (c.lam, c.config_id))
    keep, removed = order[: n - n_cut], order[n - n_cut :]
    keep_ids = {c.config_id for c in keep}
    pool.active = [c for c in pool.active if c.config_id in keep_ids]
    return removed


def resample_count(bcfg: BoshConfig, pre_cut: int, post_cut: int) -> int:
    if bcfg.resample_rule == "off":
        return 0
    if bcfg.resample_rule == "fixed":
        return bcfg.fixed_resample
    n = pre_cut if bcfg.count_before_cut else post_cut
    t = math.floor(n * bcfg.cut_frac)
    if bcfg.resample_cap is not None:
        t = min(t, bcfg.resample_cap)
    return t


def pool_size_sequence(n: int, s: float, stages: int) -> list[int]:
    """Closed recursion for matched-to-cut resampling without a cap."""
    out = [n]
    for _ in range(stages):
        kept = n - math.floor(n * s)
        n = kept + math.floor(kept * s)
        out.append(n)
    return out


class _Runner:
    """Mutable state of one BOSH run."""

    def __init__(self, bcfg: BoshConfig, ac: AttackerConfig, env: Env):
        self.bcfg = bcfg
        self.ac = ac
        self.env = env
        self.steppers: dict[int, Stepper] = {}
        self.rngs: dict[int, np.random.Generator] = {}
        self.trace: list[TraceRecord] = []
        self.start = env.ledger.count

    def stepper(self, cfg: Configuration) -> Stepper:
        if cfg.config_id not in self.steppers:
            rng = self.rngs.get(cfg.config_id)
            if rng is None:
                rng = config_rng(self.bcfg.seed, cfg.config_id)
            self.steppers[cfg.config_id] = Stepper(self.ac, rng)
        return self.steppers[cfg.config_id]

    def frozen(self, cfg: Configuration) -> bool:
        return cfg.queries >= self.bcfg.per_dir_budget

    def out_of_budget(self) -> bool:
        return self.env.ledger.count - self.start >= self.bcfg.budget


def run_stage(
    pool: Pool,
    archive: Archive,
    runner: _Runner,
    m: int,
    stage_index: int = 0,
) -> int:
    """Advance every active configuration up to ``m`` steps; returns steps executed."""
    if m < 1:
        raise ValueError("stage length must be positive")
    executed = 0

    def stop(cfg):
        return runner.frozen(cfg) or runner.out_of_budget()

    def record(cfg):
        nonlocal executed
        executed += 1
        archive.record(cfg)

    for i, cfg in enumerate(pool.active):
        pool.active[i] = run_steps(
            runner.stepper(cfg), cfg, m, runner.env, runner.trace, stage_index, on_step=record, should_stop=stop
        )
    return executed


def run_bosh(bcfg: BoshConfig, ac: AttackerConfig, env: Env, tpe_cfg: TpeConfig | None = None) -> BoshResult:
    """Run the pool until the query budget is spent or one exhausted trajectory remains.

    The loop also stops when every active trajectory is out of budget and no
    resampling would add a fresh one.
    """
    tpe_cfg = TpeConfig() if tpe_cfg is None else tpe_cfg
    start = env.ledger.count
    check_start(env)
    runner = _Runner(bcfg, ac, env)
    pool, archive = init_pool(bcfg.k, env, bcfg.seed, rngs=runner.rngs)
    initial = list(pool.active)
    best = pool.best()
    next_id = bcfg.k
    resample_rng = np.random.default_rng([bcfg.seed, 2**31])
    report = ResampleReport()
    stage_log: list[StageLog] = []
    m = bcfg.m0

    for stage in range(bcfg.max_stages):
        run_stage(pool, archive, runner, m, stage)
        stage_best = pool.best()
        # a tie with the same trajectory still refreshes its query count
        if stage_best.lam < best.lam or (stage_best.lam == best.lam and stage_best.config_id == best.config_id):
            best = stage_best
        stage_log.append(StageLog(stage, m, len(pool), best.lam))
        if runner.out_of_budget():
            break
        if len(pool) == 1 and runner.frozen(pool.active[0]):
            break

        pre = len(pool)
        cut_pool(pool, bcfg.cut_frac)
        t = resample_count(bcfg, pre, len(pool))
        if all(runner.frozen(c) for c in pool.active) and t == 0:
            break
        if t > 0 and len(archive) >= 2:
            fresh = tpe_resample(archive.entries, t, tpe_cfg, resample_rng, env, next_id, report)
            next_id += t
            for cfg in fresh:
                pool.active.append(cfg)
                archive.record(cfg)
                if cfg.lam < best.lam:
                    best = cfg
        if runner.out_of_budget():
            break
        m = max(1, int(round(m * bcfg.interval_ratio)))

    return BoshResult(best, env.ledger.count - start, stage_log, runner.trace, initial, report.failed_slots)
