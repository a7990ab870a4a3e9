"""Random problem instances shared by the attack tests and the acceptance suite."""

import numpy as np

from privgame.core import LabelSpace, Mechanism, MetricSet, Prior


def random_instance(rng, n_max=8):
    """Random prior, mechanism and metrics with Euclidean privacy distance; ``|S|, |O| <= n_max``."""
    n, m = rng.integers(1, n_max + 1, size=2)
    sec, obs = LabelSpace.of_size(int(n)), LabelSpace.of_size(int(m), "observables")
    prior = Prior.from_weights(sec, rng.random(n) ** 2 + 1e-3)
    mech = Mechanism(sec, obs, rng.dirichlet(np.full(m, 0.5), size=n))
    pts = rng.random((n, 2)) * 5
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    metrics = MetricSet(sec, obs, rng.random((m, n)), d, d)
    return prior, mech, metrics
