"""Experiment drivers: single runs, the multi-start baseline, BOSH, slices."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from ..attackers import AttackerConfig, Configuration, TraceRecord, attack_single
from ..bosh import BoshConfig, BoshResult, run_bosh
from ..geometry import Env, SearchParams
from ..tpe import TpeConfig
from ..victim import QueryLedger, SyntheticLandscape, VictimModel, predict
from .metrics import MetricsSummary, compute_metrics


@dataclass
class ExperimentSpec:
    model: VictimModel
    examples: list[tuple[np.ndarray, int]]
    mode: Literal["single", "multi-init", "bosh"] = "bosh"
    bosh: BoshConfig = field(default_factory=BoshConfig)
    attacker: AttackerConfig = field(default_factory=AttackerConfig)
    tpe: TpeConfig = field(default_factory=TpeConfig)
    search: SearchParams = field(default_factory=SearchParams)
    n_inits: int = 1
    epsilon: float = 1.0
    seed: int = 0


@dataclass
class RunOutcome:
    best: Configuration
    queries: int
    trace: list[TraceRecord]
    bosh: BoshResult | None = None


def load_examples(model: VictimModel, path=None) -> list[tuple[np.ndarray, int]]:
    """Examples from a JSON array of vectors or ``{"x0": [...], "y0": c}`` objects.

    Without a file, a landscape's stored reference point is used. Missing
    labels are filled from the model without charging any ledger.
    """
    if path is None:
        if isinstance(model, SyntheticLandscape) and model.x0 is not None:
            return [(model.x0, model.base_label)]
        raise ValueError("this model has no stored reference point; pass an examples file")
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, list):
        raise ValueError("examples file must hold a JSON array")
    out = []
    for i, item in enumerate(doc):
        if isinstance(item, dict):
            x0 = np.asarray(item["x0"], dtype=np.float64)
            y0 = int(item["y0"]) if "y0" in item else model.label(x0)
        else:
            x0 = np.asarray(item, dtype=np.float64)
            y0 = model.label(x0)
        if x0.shape != (model.dim,):
            raise ValueError(f"examples[{i}] has length {x0.shape[0]}, model expects {model.dim}")
        out.append((x0, y0))
    return out


def run_single(env: Env, ac: AttackerConfig, per_dir_budget: int, seed: int, config_id: int = 0) -> RunOutcome:
    start = env.ledger.count
    trace: list[TraceRecord] = []
    best = attack_single(env, ac, per_dir_budget, seed=seed, config_id=config_id, trace_sink=trace)
    return RunOutcome(best, env.ledger.count - start, trace)


def run_multi_init(env: Env, ac: AttackerConfig, per_dir_budget: int, seed: int, n_inits: int) -> RunOutcome:
    """Independent full-budget runs from ``n_inits`` starts; keeps the best."""
    if n_inits < 1:
        raise ValueError("n_inits must be at least 1")
    start = env.ledger.count
    trace: list[TraceRecord] = []
    best = None
    for i in range(n_inits):
        cfg = attack_single(env, ac, per_dir_budget, seed=seed, config_id=i, trace_sink=trace)
        if best is None or cfg.lam < best.lam:
            best = cfg
    return RunOutcome(best, env.ledger.count - start, trace)


def run_bosh_outcome(env: Env, bcfg: BoshConfig, ac: AttackerConfig, tpe_cfg: TpeConfig) -> RunOutcome:
    res = run_bosh(bcfg, ac, env, tpe_cfg)
    return RunOutcome(res.best, res.total_queries, res.trace, res)


def run_experiment(spec: ExperimentSpec) -> tuple[MetricsSummary, list[RunOutcome]]:
    outcomes = []
    for i, (x0, y0) in enumerate(spec.examples):
        env = Env(spec.model, x0, y0, QueryLedger(), spec.search)
        seed = spec.seed + i
        if spec.mode == "single":
            outcomes.append(run_single(env, spec.attacker, spec.bosh.per_dir_budget, seed))
        elif spec.mode == "multi-init":
            outcomes.append(run_multi_init(env, spec.attacker, spec.bosh.per_dir_budget, seed, spec.n_inits))
        elif spec.mode == "bosh":
            bcfg = BoshConfig(**{**spec.bosh.__dict__, "seed": seed})
            outcomes.append(run_bosh_outcome(env, bcfg, spec.attacker, spec.tpe))
        else:
            raise ValueError(f"unknown mode {spec.mode!r}")
    summary = compute_metrics(
        [o.best.lam for o in outcomes],
        [o.queries for o in outcomes],
        spec.epsilon,
        baseline_queries=len(outcomes) * spec.bosh.per_dir_budget,
        origins=[o.best.origin for o in outcomes],
    )
    return summary, outcomes


def attack_multi_init(spec: ExperimentSpec, n_inits: int) -> MetricsSummary:
    spec = ExperimentSpec(**{**spec.__dict__, "mode": "multi-init", "n_inits": n_inits})
    return run_experiment(spec)[0]


def boundary_slice(
    model: VictimModel,
    x0,
    u1,
    u2,
    grid_n: int,
    extent: float,
    ledger: QueryLedger | None = None,
) -> np.ndarray:
    """Labels on the plane through ``x0`` spanned by ``u1`` and ``u2``.

    Cell ``(i, j)`` is the label at ``x0 + a_i e1 + b_j e2`` with ``a, b`` on a
    uniform grid over ``[-extent, extent]`` and ``e1, e2`` the Gram-Schmidt
    basis of ``u1, u2``.
    """
    ledger = QueryLedger() if ledger is None else ledger
    x0 = np.asarray(x0, dtype=np.float64)
    e1 = np.asarray(u1, dtype=np.float64)
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.asarray(u2, dtype=np.float64)
    e2 = e2 - (e2 @ e1) * e1
    n2 = np.linalg.norm(e2)
    if n2 < 1e-9:
        raise ValueError("slice directions are (nearly) parallel")
    e2 = e2 / n2
    ticks = np.linspace(-extent, extent, grid_n)
    grid = np.empty((grid_n, grid_n), dtype=int)
    for i, a in enumerate(ticks):
        for j, b in enumerate(ticks):
            grid[i, j] = predict(model, x0 + a * e1 + b * e2, ledger)
    return grid
