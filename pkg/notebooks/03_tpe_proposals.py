# %% [markdown]
# # Where do resampled directions come from?
#
# The archive holds every direction ever evaluated with its distance. The
# best fifth forms the "good" set, the rest the "bad" set, and a Gaussian KDE
# is fitted to each. Candidates are drawn around good directions and the one
# with the largest good/bad density ratio is evaluated.

# %%
import numpy as np

from boshattack.tpe import ArchiveEntry, TpeConfig, build_surrogate, ei_rank_score

rng = np.random.default_rng(0)
target = np.array([1.0, 0.0, 0.0])
archive = []
for _ in range(60):
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    archive.append(ArchiveEntry(u, 2.0 + np.linalg.norm(u - target)))

sur = build_surrogate(archive, TpeConfig())
print("bandwidths: good", round(sur.good.bandwidth, 3), "bad", round(sur.bad.bandwidth, 3))
cands, scores, pick = sur.propose(rng, 100)
best = cands[pick] / np.linalg.norm(cands[pick])
print("picked direction", np.round(best, 3), "distance to the best region", round(float(np.linalg.norm(best - target)), 3))

# %% [markdown]
# Ranking by the ratio is the same as ranking by expected improvement under
# this model: the score `1 / (gamma + (g/l)(1 - gamma))` grows with `l/g`.

# %%
for l, g in [(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)]:
    print(f"l/g = {l / g:.0f}: score {ei_rank_score(l, g, 0.2):.3f}")
