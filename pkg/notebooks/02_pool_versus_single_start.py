# %% [markdown]
# # A pool of trajectories versus one start
#
# Sign-OPT refines one direction at a time and converges to whatever local
# minimum of the distance its start leads to. Here we give a single start and a
# successive-halving pool the same number of queries on a few landscapes and
# compare them with the known optimum.

# %%
from pathlib import Path

from boshattack import AttackerConfig, BoshConfig, QueryLedger, attack_single, gen_landscape, run_bosh
from boshattack.geometry import Env
from boshattack.harness import compute_metrics, emit_outputs

ac = AttackerConfig("sign_opt")
rows, traces = [], []
for seed in range(5):
    land, optimum = gen_landscape(seed, 20, 8, (2, 5), (1.8, 5))
    bcfg = BoshConfig(k=10, m0=8, per_dir_budget=3000, total_budget=12000, seed=seed)
    pooled = run_bosh(bcfg, ac, Env(land, land.x0, 0, QueryLedger()))
    single = attack_single(Env(land, land.x0, 0, QueryLedger()), ac, pooled.total_queries, seed=seed)
    rows.append((optimum, pooled.best.lam, single.lam, pooled.best.origin, pooled.total_queries))
    traces.append(pooled.trace)
    print(f"seed {seed}: optimum {optimum:.3f}  pool {pooled.best.lam:.3f} ({pooled.best.origin})  "
          f"single {single.lam:.3f}  queries {pooled.total_queries}")

# %% [markdown]
# Each stage advances every survivor, drops the worse half, and refills part
# of the pool with directions proposed from the archive of everything seen so
# far. The trace plots show the cuts as dashed verticals.

# %%
summary = compute_metrics([r[1] for r in rows], [r[4] for r in rows], epsilon=1.0, origins=[r[3] for r in rows])
out = Path("runs/notebook_02")
emit_outputs(out, summary, traces)
print("wrote", sorted(p.name for p in out.iterdir())[:4], "...")
