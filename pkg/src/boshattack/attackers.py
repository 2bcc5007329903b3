"""Local-update decision-based attackers in direction space.

All three attackers share one state, :class:`Configuration`, a unit
direction plus its verified boundary distance. Updates are acceptance-gated,
so ``lam`` never increases along a trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from .geometry import Env, distance_below, distortion_c, normalize

Kind = Literal["sign_opt", "opt", "boundary"]
Origin = Literal["initial", "resampled"]


class InitializationError(RuntimeError):
    """No adversarial direction was found while sampling a start point."""


class PreconditionError(ValueError):
    """The reference input is not classified as its stated label."""


def check_start(env: Env) -> None:
    """Verify ``f(x0) == y0``; costs one query."""
    if env.is_adversarial(env.x0):
        raise PreconditionError("x0 is not classified as y0; nothing to attack")


@dataclass(frozen=True)
class Configuration:
    u: np.ndarray
    lam: float
    config_id: int
    origin: Origin = "initial"
    queries: int = 0  # queries spent on this trajectory so far

    def same_point(self, other: "Configuration") -> bool:
        return self.lam == other.lam and np.array_equal(self.u, other.u)


@dataclass
class AttackerConfig:
    """Step parameters. ``probe_radius`` and ``step_size`` act on the unit direction."""

    kind: Kind = "sign_opt"
    num_probes: int = 20
    probe_radius: float = 0.01
    step_size: float = 0.2
    max_halvings: int = 15
    # boundary attack only
    spherical_step: float = 0.05
    source_step: float = 0.01
    target_accept: float = 0.25

    def __post_init__(self):
        if self.kind not in ("sign_opt", "opt", "boundary"):
            raise ValueError(f"unknown attacker kind {self.kind!r}")
        if self.num_probes < 1 or not self.probe_radius > 0 or not self.step_size > 0:
            raise ValueError("need num_probes >= 1, probe_radius > 0, step_size > 0")


@dataclass(frozen=True)
class TraceRecord:
    queries_cumulative: int
    best_lambda: float
    config_id: int
    stage_index: int
    origin: Origin = "initial"


def sample_initial_direction(
    rng: np.random.Generator,
    d: int,
    env: Env,
    config_id: int = 0,
    mode: str = "gaussian",
    max_tries: int = 10000,
    origin: Origin = "initial",
) -> Configuration:
    """Draw random directions until one reaches the boundary."""
    if d < 1:
        raise ValueError("d must be positive")
    start = env.ledger.count
    for _ in range(max_tries):
        if mode == "gaussian":
            u = rng.standard_normal(d)
        elif mode == "uniform":
            u = rng.uniform(-1.0, 1.0, d)
        else:
            raise ValueError(f"unknown sampling mode {mode!r}")
        if not np.linalg.norm(u) > 0:
            continue
        u = normalize(u)
        res = distortion_c(env, u)
        if res is not None:
            return Configuration(u, res.lam, config_id, origin, env.ledger.count - start)
    raise InitializationError(f"no adversarial direction in {max_tries} draws")


def _unit_probes(rng: np.random.Generator, q: int, d: int) -> np.ndarray:
    v = rng.standard_normal((q, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _line_search(cfg: Configuration, grad: np.ndarray, ac: AttackerConfig, env: Env) -> Configuration:
    """Backtracking on the step size; keeps ``cfg`` if nothing improves."""
    if not np.any(grad):
        return cfg
    eta = ac.step_size
    for _ in range(ac.max_halvings + 1):
        cand = cfg.u - eta * grad
        if np.linalg.norm(cand) > 0:
            cand = normalize(cand)
            res = distance_below(env, cand, cfg.lam)
            if res is not None and res.lam <= cfg.lam:
                return replace(cfg, u=cand, lam=res.lam)
        eta *= 0.5
    return cfg


def signopt_sign(cfg: Configuration, v: np.ndarray, eps: float, env: Env) -> float:
    """Single-query sign of ``C(u + eps v) - C(u)``."""
    w = normalize(cfg.u + eps * v)
    return -1.0 if env.adversarial_at(w, cfg.lam) else 1.0


def signopt_gradient(cfg: Configuration, ac: AttackerConfig, env: Env, rng: np.random.Generator) -> np.ndarray:
    eps = ac.probe_radius
    probes = _unit_probes(rng, ac.num_probes, cfg.u.shape[0])
    signs = np.array([signopt_sign(cfg, v, eps, env) for v in probes])
    return signs @ probes / ac.num_probes


def signopt_step(cfg: Configuration, ac: AttackerConfig, env: Env, rng: np.random.Generator) -> Configuration:
    start = env.ledger.count
    grad = signopt_gradient(cfg, ac, env, rng)
    out = _line_search(cfg, grad, ac, env)
    return replace(out, queries=cfg.queries + env.ledger.count - start)


def opt_gradient(cfg: Configuration, ac: AttackerConfig, env: Env, rng: np.random.Generator) -> np.ndarray:
    """Finite-difference estimate with a full distance evaluation per probe."""
    eps = ac.probe_radius
    probes = _unit_probes(rng, ac.num_probes, cfg.u.shape[0])
    grad = np.zeros_like(cfg.u)
    for v in probes:
        res = distortion_c(env, cfg.u + eps * v, lambda0=cfg.lam)
        if res is None:
            continue
        grad += (res.lam - cfg.lam) / eps * v
    return grad


def opt_step(cfg: Configuration, ac: AttackerConfig, env: Env, rng: np.random.Generator) -> Configuration:
    start = env.ledger.count
    grad = opt_gradient(cfg, ac, env, rng)
    norm = np.linalg.norm(grad)
    if norm > 0:
        grad = grad / norm
    out = _line_search(cfg, grad, ac, env)
    return replace(out, queries=cfg.queries + env.ledger.count - start)


@dataclass
class WalkState:
    """Adaptive step sizes of one boundary-attack trajectory."""

    spherical: float
    source: float
    accepts: list[bool] = field(default_factory=list)


def boundary_step(
    cfg: Configuration,
    ac: AttackerConfig,
    env: Env,
    rng: np.random.Generator,
    state: WalkState | None = None,
) -> Configuration:
    """One random-walk proposal on the adversarial point ``x0 + lam u``.

    The proposal is an orthogonal Gaussian move of relative size
    ``spherical``, projected back to the sphere of radius ``lam`` and then
    contracted toward ``x0`` by ``1 - source``. Step sizes adapt toward
    ``target_accept`` every 10 proposals when ``state`` is given.
    """
    if state is None:
        state = WalkState(ac.spherical_step, ac.source_step)
    lam = cfg.lam
    d = cfg.u.shape[0]
    eta = rng.standard_normal(d)
    eta -= (eta @ cfg.u) * cfg.u
    n = np.linalg.norm(eta)
    if n > 0:
        eta *= state.spherical * lam / n
    offset = lam * cfg.u + eta
    offset *= lam / np.linalg.norm(offset)
    offset *= 1.0 - state.source
    new_lam = float(np.linalg.norm(offset))
    start = env.ledger.count
    accepted = new_lam < lam and env.is_adversarial(env.x0 + offset)
    state.accepts.append(accepted)
    if len(state.accepts) >= 10:
        rate = np.mean(state.accepts)
        factor = 1.5 if rate > ac.target_accept else 1 / 1.5
        state.spherical = min(state.spherical * factor, 1.0)
        state.source = min(state.source * factor, 0.5)
        state.accepts.clear()
    spent = env.ledger.count - start
    if not accepted:
        return replace(cfg, queries=cfg.queries + spent)
    return replace(cfg, u=offset / new_lam, lam=new_lam, queries=cfg.queries + spent)


class Stepper:
    """Binds an attacker kind to its per-trajectory state."""

    def __init__(self, ac: AttackerConfig, rng: np.random.Generator):
        self.ac = ac
        self.rng = rng
        self.walk = WalkState(ac.spherical_step, ac.source_step)

    def __call__(self, cfg: Configuration, env: Env) -> Configuration:
        if self.ac.kind == "sign_opt":
            return signopt_step(cfg, self.ac, env, self.rng)
        if self.ac.kind == "opt":
            return opt_step(cfg, self.ac, env, self.rng)
        return boundary_step(cfg, self.ac, env, self.rng, self.walk)


def run_steps(
    stepper: Stepper,
    cfg: Configuration,
    n_steps: int,
    env: Env,
    trace_sink: list | None = None,
    stage_index: int = 0,
    on_step: Callable[[Configuration], None] | None = None,
    should_stop: Callable[[Configuration], bool] | None = None,
) -> Configuration:
    """Apply up to ``n_steps`` steps, one trace record per executed step.

    ``should_stop`` is checked before every step (budget enforcement).
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    for _ in range(n_steps):
        if should_stop is not None and should_stop(cfg):
            break
        cfg = stepper(cfg, env)
        if trace_sink is not None:
            trace_sink.append(TraceRecord(env.ledger.count, cfg.lam, cfg.config_id, stage_index, cfg.origin))
        if on_step is not None:
            on_step(cfg)
    return cfg


def config_rng(seed: int, config_id: int) -> np.random.Generator:
    """Independent stream per trajectory so pools and single runs line up."""
    return np.random.default_rng([seed, config_id])


def attack_single(
    env: Env,
    ac: AttackerConfig,
    per_dir_budget: int,
    seed: int = 0,
    config_id: int = 0,
    trace_sink: list | None = None,
    max_steps: int | None = None,
) -> Configuration:
    """Plain base attack: one random start, stepped until the budget is spent.

    The start label check is charged to the ledger but not to the returned
    configuration's own query count.
    """
    check_start(env)
    rng = config_rng(seed, config_id)
    cfg = sample_initial_direction(rng, env.x0.shape[0], env, config_id)
    stepper = Stepper(ac, rng)
    steps = 0
    while cfg.queries < per_dir_budget and (max_steps is None or steps < max_steps):
        cfg = run_steps(stepper, cfg, 1, env, trace_sink)
        steps += 1
    return cfg
