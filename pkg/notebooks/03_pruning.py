# %% [markdown]
# # Trading accuracy for speed by pruning
#
# The joint program has one ratio constraint per (observable, secret pair)
# and that count grows with the cube of the grid size. Dropping constraints
# between far-apart secrets, and outputs far from the true location,
# shrinks the program. Both radii at the grid diameter give back the exact
# answer.

# %%
import numpy as np

from privgame.geo import Grid
from privgame.harness import ExperimentConfig, approx_sweep, medians_by

grid = Grid(4, 4, 3.0, 3.0)
cfg = ExperimentConfig(grid=grid, users=2, seed=3, trace_length=1500)
res = approx_sweep(cfg, radii=[0.75, 1.5, 2.25, 3.0], repeats=1)

# %%
for radius, err in medians_by(res, "radius", "error"):
    print(f"radius {radius:5.2f} km  median privacy error {err:.4f} km")
for radius, sec in medians_by(res, "radius", "seconds"):
    print(f"radius {radius:5.2f} km  median solve time {sec:.3f} s")

# %% [markdown]
# Program size per radius for the first user. A pruned mechanism only
# carries the differential guarantee on the pairs that were kept.

# %%
first = [r for r in res.rows if r["user"] == res.rows[0]["user"]]
for r in first:
    print(f"radius {r['radius']:5.2f}  vars {r['num_vars']:5d}  constraints {r['num_constraints']:6d}")
