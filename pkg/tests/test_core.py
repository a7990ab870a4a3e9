import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privgame.core import (
    Attack, LabelSpace, Mechanism, MetricSet, Prior, clean_stochastic, conditional_error,
    cost_per_secret, differential_margins, expected_cost, expected_privacy, privacy_of_secret,
    privacy_per_secret, verify_differential, worst_case_cost,
)
from privgame.errors import DimensionMismatch, UnknownLabel


def test_label_space_lookup():
    sp = LabelSpace(("home", "work", "gym"))
    assert sp.index("work") == 1
    assert sp[2] == "gym"
    with pytest.raises(UnknownLabel):
        sp.index("pub")
    with pytest.raises(ValueError):
        LabelSpace(("a", "a"))
    with pytest.raises(ValueError):
        LabelSpace(())


def test_prior_validation():
    sp = LabelSpace.of_size(3)
    with pytest.raises(ValueError):
        Prior(sp, [0.5, 0.5, 0.1])
    with pytest.raises(ValueError):
        Prior(sp, [1.2, -0.2, 0.0])
    with pytest.raises(DimensionMismatch):
        Prior(sp, [0.5, 0.5])
    p = Prior.from_weights(sp, [1, 1, 2])
    assert p[2] == pytest.approx(0.5)
    assert Prior.uniform(LabelSpace.of_size(4)).entropy() == pytest.approx(2.0)


def test_mechanism_rows_must_be_stochastic():
    sp = LabelSpace.of_size(2)
    with pytest.raises(ValueError):
        Mechanism(sp, sp.as_role("observables"), [[0.5, 0.4], [0, 1]])
    with pytest.raises(ValueError):
        Mechanism(sp, sp.as_role("observables"), [[1.5, -0.5], [0, 1]])
    m = Mechanism.uniform(sp)
    with pytest.raises(ValueError):
        m.rows[0, 0] = 1.0


def test_identity_mechanism_exact_attack_gives_zero_privacy():
    sp = LabelSpace.of_size(2)
    prior, metrics = Prior.uniform(sp), MetricSet.hamming(sp)
    mech, attack = Mechanism.identity(sp), Attack.identity(sp)
    assert expected_privacy(prior, mech, attack, metrics) == 0.0
    assert expected_cost(prior, mech, metrics) == 0.0


def test_uniform_mechanism_costs():
    sp = LabelSpace.of_size(2)
    prior, metrics = Prior.uniform(sp), MetricSet.hamming(sp)
    mech = Mechanism.uniform(sp)
    assert expected_cost(prior, mech, metrics) == pytest.approx(0.5)
    assert worst_case_cost(mech, metrics) == pytest.approx(0.5)
    assert conditional_error(mech, Attack.identity(sp), metrics, 0) == pytest.approx(0.5)


def test_mismatched_spaces_are_rejected():
    a, b = LabelSpace.of_size(2), LabelSpace.of_size(3)
    with pytest.raises(DimensionMismatch):
        expected_cost(Prior.uniform(a), Mechanism.identity(b), MetricSet.hamming(b))
    c = LabelSpace(("x", "y"))
    with pytest.raises(DimensionMismatch):
        expected_cost(Prior.uniform(a), Mechanism.identity(c), MetricSet.hamming(c))


def test_metric_validation():
    sp = LabelSpace.of_size(2)
    with pytest.raises(ValueError):
        MetricSet.from_distances(sp, [[0, 1], [1, 0]], [[0, 1], [1, 0]], disting=[[1, 1], [1, 0]])
    with pytest.raises(ValueError):
        MetricSet.from_distances(sp, [[0, -1], [1, 0]], [[0, 1], [1, 0]])
    with pytest.raises(DimensionMismatch):
        MetricSet.from_distances(sp, [[0, 1, 2]], [[0, 1], [1, 0]])


def test_verify_differential_two_secret_example():
    sp = LabelSpace.of_size(2)
    metrics = MetricSet.hamming(sp)
    good = Mechanism(sp, sp.as_role("observables"), [[0.75, 0.25], [0.25, 0.75]])
    report = verify_differential(good, metrics, math.log(3))
    assert report.passed and report.margin == pytest.approx(0.0, abs=1e-12)
    bad = Mechanism(sp, sp.as_role("observables"), [[0.8, 0.2], [0.2, 0.8]])
    report = verify_differential(bad, metrics, math.log(3))
    assert not report
    assert report.margin == pytest.approx(0.8 - 3 * 0.2)
    assert report.worst in {(0, 1, 0), (1, 0, 1)}


def test_verify_differential_thresholded_skips_far_pairs():
    sp = LabelSpace.of_size(3)
    d = np.array([[0, 1, 5], [1, 0, 4], [5, 4, 0]], float)
    metrics = MetricSet.from_distances(sp, d, d)
    rows = np.array([[1, 0, 0], [0.5, 0.5, 0], [0, 0, 1]], float)
    mech = Mechanism(sp, sp.as_role("observables"), rows)
    # only the (0, 1) pair is within 2; 1.0 <= 2 * 0.5 holds but 0.5 <= 2 * 0 fails
    assert not verify_differential(mech, metrics, math.log(2), d_eps_m=2)
    rows[0] = [0.5, 0.5, 0]
    mech = Mechanism(sp, sp.as_role("observables"), rows)
    assert verify_differential(mech, metrics, math.log(2), d_eps_m=2)
    assert not verify_differential(mech, metrics, math.log(2))


def test_differential_margins_handle_overflow():
    disting = np.array([[0, 1e6], [1e6, 0]])
    # exp(1e7) overflows, but bound * 0 is still 0: the identity stays non-private
    m = differential_margins(np.eye(2), disting, 10.0)
    assert not np.isnan(m).any()
    assert m.max() == 1.0
    m = differential_margins(np.full((2, 2), 0.5), disting, 10.0)
    assert not np.isnan(m).any()
    assert m.max() <= 0


def test_clean_stochastic():
    v = clean_stochastic([[0.5, 0.5 + 1e-9, -1e-12], [0, 0, 0]])
    assert np.all(v >= 0)
    assert v[0].sum() == pytest.approx(1.0, abs=1e-15)


@st.composite
def games(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    n, m = draw(st.integers(1, 5)), draw(st.integers(1, 5))
    sec, obs = LabelSpace.of_size(n), LabelSpace.of_size(m, "observables")
    prior = Prior.from_weights(sec, rng.random(n) + 0.01)
    mech = Mechanism(sec, obs, rng.dirichlet(np.ones(m), size=n))
    attack = Attack(obs, sec, rng.dirichlet(np.ones(n), size=m))
    pts = rng.random((n, 2))
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    metrics = MetricSet(sec, obs, rng.random((m, n)), d, d)
    return prior, mech, attack, metrics


@settings(max_examples=60, deadline=None)
@given(games())
def test_expectations_are_consistent_and_bounded(game):
    prior, mech, attack, metrics = game
    ap = expected_privacy(prior, mech, attack, metrics)
    assert ap == pytest.approx(prior.probs @ privacy_per_secret(mech, attack, metrics))
    assert 0 <= ap <= metrics.privacy_dist.max() + 1e-12
    per = [privacy_of_secret(mech, attack, metrics, s) for s in mech.secrets]
    assert per == pytest.approx(list(privacy_per_secret(mech, attack, metrics)))
    cost = expected_cost(prior, mech, metrics)
    assert cost <= worst_case_cost(mech, metrics) + 1e-12
    assert cost == pytest.approx(prior.probs @ cost_per_secret(mech, metrics))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.floats(0, 1e300))
def test_identity_never_differentially_private(n, eps):
    sp = LabelSpace.of_size(n)
    assert not verify_differential(Mechanism.identity(sp), MetricSet.hamming(sp), eps)


@settings(max_examples=40, deadline=None)
@given(games(), st.floats(0, 1), st.floats(0, 3))
def test_cost_linear_in_mixtures_and_dp_monotone_in_eps(game, t, extra):
    prior, mech, _, metrics = game
    other = Mechanism(mech.secrets, mech.observables, mech.rows[:, ::-1])
    mix = Mechanism(mech.secrets, mech.observables, t * mech.rows + (1 - t) * other.rows)
    lhs = expected_cost(prior, mix, metrics)
    rhs = t * expected_cost(prior, mech, metrics) + (1 - t) * expected_cost(prior, other, metrics)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    # the smallest budget this mechanism satisfies, then anything larger
    ratio = np.log(np.maximum(mech.rows[:, None, :], 1e-300) / np.maximum(mech.rows[None, :, :], 1e-300))
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(metrics.disting[:, :, None] > 0, ratio / metrics.disting[:, :, None], 0)
    eps = float(np.nanmax(need)) + 1e-9
    if np.isfinite(eps) and eps < 600:
        assert verify_differential(mech, metrics, eps)
        assert verify_differential(mech, metrics, eps + extra)
