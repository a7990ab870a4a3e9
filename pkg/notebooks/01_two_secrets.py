# %% [markdown]
# # Two secrets, by hand
#
# The smallest interesting case: two locations, Hamming cost and metrics,
# uniform prior. A mechanism is fixed by two numbers, the probability of
# reporting the truth from each side, so every optimum can be checked
# against a brute-force scan of the unit square.

# %%
import math

import numpy as np

from privgame import (
    LabelSpace, MetricSet, Prior, expected_cost, max_distortion, optimal_attack_value,
    optimal_differential, optimal_distortion, optimal_joint,
)

space = LabelSpace.of_size(2)
metrics = MetricSet.hamming(space)
prior = Prior.uniform(space)
print("d_max =", max_distortion(prior, metrics))

# %% [markdown]
# With Hamming loss the best attack just guesses the likelier secret, so
# privacy is one minus the probability of a correct guess.

# %%
def scan(step=0.01, d_m=None, eps=None):
    best = math.inf
    for a in np.arange(0, 1 + step / 2, step):
        for b in np.arange(0, 1 + step / 2, step):
            rows = np.array([[a, 1 - a], [1 - b, b]])
            if eps is not None:
                ok = all(rows[0, o] <= math.exp(eps) * rows[1, o] + 1e-12
                         and rows[1, o] <= math.exp(eps) * rows[0, o] + 1e-12 for o in (0, 1))
                if not ok:
                    continue
            joint = 0.5 * rows
            privacy = 1 - joint.max(axis=0).sum()
            if d_m is not None and privacy < d_m - 1e-12:
                continue
            best = min(best, 1 - 0.5 * (a + b))
    return best


for label, kw, build in [
    ("distortion d_m=0.3", {"d_m": 0.3}, lambda: optimal_distortion(prior, metrics, 0.3)),
    ("differential eps=ln3", {"eps": math.log(3)}, lambda: optimal_differential(prior, metrics, math.log(3))),
    ("joint d_m=0.4 eps=ln3", {"d_m": 0.4, "eps": math.log(3)}, lambda: optimal_joint(prior, metrics, 0.4, math.log(3))),
]:
    mech = build()
    print(f"{label:24s} lp={expected_cost(prior, mech, metrics):.4f} scan={scan(**kw):.4f} "
          f"privacy={optimal_attack_value(prior, mech, metrics):.4f}")

# %% [markdown]
# Once d_m passes 0.25 (what the ratio constraint gives on its own) the
# joint mechanism costs exactly its distortion bound. The optimum is not
# unique there: several feasible matrices share the diagonal sum, so the printed
# matrices are one point of a segment.

# %%
for d_m in np.linspace(0, 0.5, 6):
    mech = optimal_joint(prior, metrics, d_m, math.log(3))
    print(f"d_m={d_m:.1f}  cost={expected_cost(prior, mech, metrics):.3f}\n{np.round(mech.rows, 3)}")
