import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boshattack.attackers import AttackerConfig, Configuration, attack_single
from boshattack.bosh import (
    SCHEDULES,
    BoshConfig,
    Pool,
    PreconditionError,
    _Runner,
    cut_pool,
    init_pool,
    pool_size_sequence,
    resample_count,
    run_bosh,
    run_stage,
    stage_lengths,
)
from boshattack.geometry import Env
from boshattack.victim import QueryLedger, gen_landscape

from conftest import halfspace_model


def cfgs(lams):
    return [Configuration(np.array([1.0, 0.0]), float(l), i) for i, l in enumerate(lams)]


@pytest.fixture(scope="module")
def landscape():
    land, gt = gen_landscape(0, 10, 4, (2, 5), (1.8, 5))
    return land, gt


def env_for(land):
    return Env(land, land.x0, 0, QueryLedger())


def test_init_pool_sizes(landscape):
    land, _ = landscape
    env = env_for(land)
    pool, archive = init_pool(30, env, seed=0)
    assert len(pool) == len(archive) == 30
    assert [c.config_id for c in pool.active] == list(range(30))
    assert sum(c.queries for c in pool.active) == env.ledger.count
    assert all(c.origin == "initial" for c in pool.active)
    with pytest.raises(ValueError):
        init_pool(0, env, seed=0)


def test_cut_examples():
    pool = Pool(cfgs([3.0, 1.0, 4.0, 1.5, 9.0, 2.0]))
    removed = cut_pool(pool, 0.5)
    assert sorted(c.lam for c in removed) == [3.0, 4.0, 9.0]
    assert [c.lam for c in pool.active] == [1.0, 1.5, 2.0]

    pool = Pool(cfgs([1.0, 2.0, 3.0]))
    cut_pool(pool, 0.5)
    assert [c.lam for c in pool.active] == [1.0, 2.0]

    pool = Pool(cfgs([5.0]))
    assert cut_pool(pool, 0.9) == [] and len(pool) == 1


def test_cut_ties_remove_later_ids():
    pool = Pool(cfgs([1.0, 2.0, 2.0, 2.0]))
    removed = cut_pool(pool, 0.5)
    assert sorted(c.config_id for c in removed) == [2, 3]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=40), st.floats(0.05, 0.95))
def test_cut_keeps_the_best(lams, s):
    pool = Pool(cfgs(lams))
    removed = cut_pool(pool, s)
    assert len(pool) >= 1
    assert len(pool) + len(removed) == len(lams)
    if removed:
        assert max(c.lam for c in pool.active) <= min(c.lam for c in removed)
    assert min(c.lam for c in pool.active) == min(lams)


def test_resample_counts():
    b = BoshConfig(resample_cap=3)
    assert resample_count(b, 30, 15) == 3
    assert resample_count(BoshConfig(resample_cap=None), 30, 15) == 7
    assert resample_count(BoshConfig(resample_cap=None, count_before_cut=True), 30, 15) == 15
    assert resample_count(BoshConfig(resample_rule="fixed", fixed_resample=5), 30, 15) == 5
    assert resample_count(BoshConfig(resample_rule="off"), 30, 15) == 0
    assert resample_count(b, 2, 1) == 0


def test_stage_lengths_and_schedules():
    assert stage_lengths(3500, 1.4, 3) == [3500, 4900, 6860]
    assert SCHEDULES["mnist"]["per_dir_budget"] == 40000
    assert SCHEDULES["imagenet"]["resample_cap"] == 4


def test_pool_size_recursion():
    assert pool_size_sequence(30, 0.5, 5) == [30, 22, 16, 12, 9, 7]
    assert pool_size_sequence(1, 0.5, 3) == [1, 1, 1, 1]


def test_run_follows_pool_size_recursion(landscape):
    land, _ = landscape
    bcfg = BoshConfig(k=12, m0=1, interval_ratio=1.0, resample_cap=None, per_dir_budget=10**6, max_stages=6)
    res = run_bosh(bcfg, AttackerConfig(num_probes=5), env_for(land))
    sizes = [s.pool_size for s in res.stage_log]
    assert res.resample_failures == 0
    assert sizes == pool_size_sequence(12, 0.5, 5)


def test_archive_grows_by_pool_times_m(landscape):
    land, _ = landscape
    env = env_for(land)
    bcfg = BoshConfig(k=4, m0=3, per_dir_budget=10**6)
    runner = _Runner(bcfg, AttackerConfig(), env)
    pool, archive = init_pool(4, env, 0, rngs=runner.rngs)
    before = len(archive)
    executed = run_stage(pool, archive, runner, 3)
    assert executed == 12
    assert len(archive) == before + 12
    assert len(runner.trace) == 12


def test_bosh_is_elitist(landscape):
    land, gt = landscape
    env = env_for(land)
    bcfg = BoshConfig(k=6, m0=4, per_dir_budget=800, seed=2)
    res = run_bosh(bcfg, AttackerConfig(), env)
    assert res.best.lam <= min(c.lam for c in res.initial)
    bests = [s.best_lambda for s in res.stage_log]
    assert all(a >= b for a, b in zip(bests, bests[1:]))
    assert res.best.lam == bests[-1] or res.best.lam <= bests[-1]
    assert res.best.lam >= gt - 1e-9


def test_single_config_reduces_to_plain_attack(landscape):
    land, _ = landscape
    for kind in ("sign_opt", "boundary"):
        ac = AttackerConfig(kind)
        env = env_for(land)
        plain = attack_single(env, ac, 700, seed=5)
        bcfg = BoshConfig(k=1, m0=3, per_dir_budget=700, seed=5, resample_rule="off")
        res = run_bosh(bcfg, ac, env_for(land))
        assert res.best.lam == plain.lam
        assert np.array_equal(res.best.u, plain.u)
        assert res.best.queries == plain.queries
        # both pay one query to check the starting label
        assert res.total_queries == env.ledger.count == plain.queries + 1


def test_budget_ceiling(landscape):
    land, _ = landscape
    env = env_for(land)
    bcfg = BoshConfig(k=5, m0=3, per_dir_budget=600, total_budget=1500, seed=1)
    res = run_bosh(bcfg, AttackerConfig(), env)
    assert res.total_queries == env.ledger.count
    # the step in flight when the budget runs out may finish, plus resampling
    per_step = 20 + 16 * 40
    assert res.total_queries <= 1 + bcfg.budget + per_step
    assert len(res.stage_log) >= 1


def test_misclassified_start_is_rejected():
    env = Env(halfspace_model(), np.array([5.0, 0.0]), 0, QueryLedger())
    with pytest.raises(PreconditionError):
        run_bosh(BoshConfig(k=2, m0=2, per_dir_budget=100), AttackerConfig(), env)
    assert env.ledger.count == 1


def test_resampled_configs_get_fresh_ids(landscape):
    land, _ = landscape
    env = env_for(land)
    res = run_bosh(BoshConfig(k=4, m0=2, per_dir_budget=300, seed=3), AttackerConfig(), env)
    ids = {r.config_id for r in res.trace}
    resampled = {r.config_id for r in res.trace if r.origin == "resampled"}
    assert all(i >= 4 for i in resampled)
    assert ids >= set(range(4))


def test_config_validation():
    with pytest.raises(ValueError):
        BoshConfig(k=0)
    with pytest.raises(ValueError):
        BoshConfig(cut_frac=1.0)
    with pytest.raises(ValueError):
        BoshConfig(interval_ratio=0.5)
    with pytest.raises(ValueError):
        BoshConfig(resample_rule="sometimes")
    assert BoshConfig(k=3, per_dir_budget=10).budget == 30
