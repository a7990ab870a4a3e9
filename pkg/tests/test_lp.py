import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privgame.errors import NumericalFailure
from privgame.lp import (
    EQ, GE, LE, LinearProgram, LpBuilder, SolverOptions, Status, lp_to_string, simplex, solve,
)
from privgame.lp import solver as solver_mod

METHODS = ["simplex", "highs", "highs-dual", "highs-ipm"]


def two_secret_differential_lp():
    # minimize 0.5(1-a) + 0.5b  s.t. a <= 3b, 1-b <= 3(1-a), 0 <= a,b <= 1
    return LinearProgram.from_rows(
        2, [-0.5, 0.5],
        [({0: 1, 1: -3}, "<=", 0), ({0: 3, 1: -1}, "<=", 2)],
        bounds={0: (0, 1), 1: (0, 1)},
    )


def grid_oracle_two_secret(step=1e-3):
    a, b = np.meshgrid(np.arange(0, 1 + step / 2, step), np.arange(0, 1 + step / 2, step), indexing="ij")
    f = 0.5 * (1 - a) + 0.5 * b
    ok = (a <= 3 * b + 1e-12) & (1 - b <= 3 * (1 - a) + 1e-12)
    k = np.argmin(np.where(ok, f, np.inf))
    return f.ravel()[k], a.ravel()[k], b.ravel()[k]


def test_grid_oracle_two_secret():
    value, a, b = grid_oracle_two_secret()
    assert value == pytest.approx(0.25, abs=1e-12)
    assert (a, b) == pytest.approx((0.75, 0.25))


@pytest.mark.parametrize("method", METHODS)
def test_single_active_bound(method):
    lp = LinearProgram.from_rows(1, [1.0], [({0: 1.0}, ">=", 3.0)])
    sol = solve(lp, method=method)
    assert sol.status is Status.OPTIMAL
    assert sol.values[0] == pytest.approx(3.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(3.0, abs=1e-9)


@pytest.mark.parametrize("method", METHODS)
def test_maximize_on_face(method):
    lp = LinearProgram.from_rows(2, [1.0, 1.0], [({0: 1, 1: 1}, "<=", 1)], maximize=True)
    sol = solve(lp, method=method)
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)
    assert lp.max_violation(sol.values) <= 1e-7


@pytest.mark.parametrize("method", METHODS)
def test_two_secret_differential_lp(method):
    sol = solve(two_secret_differential_lp(), method=method)
    oracle, a, b = grid_oracle_two_secret()
    assert sol.objective_value + 0.5 == pytest.approx(oracle, abs=1e-6)
    assert sol.values == pytest.approx([0.75, 0.25], abs=1e-6)


@pytest.mark.parametrize("method", METHODS)
def test_infeasible(method):
    lp = LinearProgram.from_rows(2, [1, 1], [({0: 1, 1: 1}, "<=", 1), ({0: 1}, ">=", 2)])
    assert solve(lp, method=method).status is Status.INFEASIBLE


@pytest.mark.parametrize("method", METHODS)
def test_unbounded(method):
    lp = LinearProgram.from_rows(2, [-1, 0], [({0: 1, 1: -1}, "<=", 1)])
    assert solve(lp, method=method).status is Status.UNBOUNDED


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_free_and_upper_bounded_variables(method):
    # min x - y with x free, -2 <= y <= 5, x >= y - 4
    lp = LinearProgram.from_rows(
        2, [1, -1], [({0: 1, 1: -1}, ">=", -4)], bounds={0: (None, None), 1: (-2, 5)},
    )
    sol = solve(lp, method=method)
    assert sol.objective_value == pytest.approx(-4.0, abs=1e-9)
    assert sol.values[1] <= 5 + 1e-9


def test_upper_bound_only_variable():
    lp = LinearProgram.from_rows(1, [-1], bounds={0: (None, 2.5)})
    assert solve(lp, method="simplex").values[0] == pytest.approx(2.5)


def test_bland_rule_terminates_on_beale_cycling_example():
    # Beale's example cycles under the textbook largest-coefficient rule
    lp = LinearProgram.from_rows(
        4, [-0.75, 20, -0.5, 6],
        [({0: 0.25, 1: -8, 2: -1, 3: 9}, "<=", 0),
         ({0: 0.5, 1: -12, 2: -0.5, 3: 3}, "<=", 0),
         ({2: 1}, "<=", 1)],
    )
    sol = simplex(lp)
    assert sol.status is Status.OPTIMAL
    assert sol.objective_value == pytest.approx(-1.25, abs=1e-9)


def test_zero_objective_returns_feasible_point():
    lp = LinearProgram.from_rows(3, [0, 0, 0], [({0: 1, 1: 1, 2: 1}, "=", 1), ({0: 1}, ">=", 0.2)])
    for method in METHODS:
        sol = solve(lp, method=method)
        assert sol.status is Status.OPTIMAL
        assert lp.max_violation(sol.values) <= 1e-7


def test_redundant_equalities():
    lp = LinearProgram.from_rows(
        2, [1, 2], [({0: 1, 1: 1}, "=", 1), ({0: 2, 1: 2}, "=", 2), ({0: 1}, "<=", 0.7)],
    )
    sol = simplex(lp)
    assert sol.objective_value == pytest.approx(1.3)


def test_deterministic():
    lp = two_secret_differential_lp()
    for method in METHODS:
        s1, s2 = solve(lp, method=method), solve(lp, method=method)
        assert s1.status == s2.status
        assert abs(s1.objective_value - s2.objective_value) <= 1e-9
        assert np.array_equal(s1.values, s2.values)


def test_numerical_failure_is_reported_not_mapped(monkeypatch):
    def broken(lp, opts):
        raise NumericalFailure("no certificate")

    monkeypatch.setitem(solver_mod._BACKENDS, "simplex", broken)
    monkeypatch.setitem(solver_mod._BACKENDS, "highs", broken)
    with pytest.raises(NumericalFailure):
        solve(two_secret_differential_lp(), method="simplex")


def test_violating_point_is_rejected(monkeypatch):
    from privgame.lp.model import LpSolution

    def liar(lp, opts):
        x = np.full(lp.num_vars, 10.0)
        return LpSolution(Status.OPTIMAL, x, lp.evaluate(x), "liar")

    monkeypatch.setitem(solver_mod._BACKENDS, "simplex", liar)
    sol = solve(two_secret_differential_lp(), method="simplex")
    # falls back to HiGHS, which returns a certified point
    assert sol.method == "highs"
    assert sol.objective_value + 0.5 == pytest.approx(0.25, abs=1e-9)


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(method="ellipsoid")


def test_model_invariants():
    with pytest.raises(ValueError):
        LinearProgram.from_rows(2, [1, 1], [({2: 1.0}, "<=", 1)])
    with pytest.raises(ValueError):
        LinearProgram.from_rows(1, [np.inf])
    with pytest.raises(ValueError):
        LinearProgram.from_rows(1, [1], [({0: 1.0}, "<", 1)])
    lp = two_secret_differential_lp()
    with pytest.raises(ValueError):
        lp.objective[0] = 3.0


def test_rows_view_round_trip():
    lp = two_secret_differential_lp()
    rows = list(lp.rows())
    assert rows[0] == ({0: 1.0, 1: -3.0}, LE, 0.0)
    rebuilt = LinearProgram.from_rows(2, lp.objective, rows, bounds={0: (0, 1), 1: (0, 1)})
    assert solve(rebuilt).objective_value == pytest.approx(solve(lp).objective_value)


def test_builder_blocks():
    b = LpBuilder(3)
    rows = b.add_block([0, 0, 1, 1], [0, 1, 1, 2], [1, 1, 1, 1], ">=", [1, 1])
    assert list(rows) == [0, 1]
    b.add_row({0: 1, 1: 1, 2: 1}, "=", 1.5)
    lp = b.build([1, 2, 1])
    assert lp.num_constraints == 3
    assert list(lp.relations) == [GE, GE, EQ]
    sol = solve(lp)
    assert sol.objective_value == pytest.approx(2.0)


def test_lp_file_dump():
    lp = LinearProgram.from_rows(
        2, [1, -2], [({0: 1, 1: 1}, "<=", 4), ({0: 1}, ">=", 1)],
        bounds={1: (None, None)}, var_names=["p_a", "x(b)"],
    )
    text = lp_to_string(lp)
    assert text.splitlines()[1] == "Minimize"
    assert " obj: 1.0 p_a - 2.0 x_b_" in text
    assert " c0: 1.0 p_a + 1.0 x_b_ <= 4.0" in text
    assert " c1: 1.0 p_a >= 1.0" in text
    assert " x_b_ free" in text
    assert text.endswith("End\n")


# random programs: the simplex and the two HiGHS routes must agree


@st.composite
def random_lps(draw, standard_bounds=False):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    n = draw(st.integers(1, 6))
    m = draw(st.integers(1, 12))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    rel = rng.choice([LE, GE, EQ], size=m, p=[0.5, 0.3, 0.2])
    x_feas = rng.uniform(0, 2, size=n)
    slack = rng.uniform(0, 1, size=m)
    rhs = A @ x_feas + np.where(rel == LE, slack, np.where(rel == GE, -slack, 0.0))
    if draw(st.booleans()):
        rhs = rhs + rng.normal(0, 2, size=m)  # may become infeasible
    c = rng.integers(-3, 4, size=n).astype(float)
    b = LpBuilder(n)
    r, k = np.nonzero(A)
    b.add_block(r, k, A[r, k], rel.tolist() if m else LE, rhs)
    upper = np.full(n, np.inf) if standard_bounds else np.where(rng.random(n) < 0.5, 4.0, np.inf)
    return b.build(c, upper=upper)


@settings(max_examples=150, deadline=None)
@given(random_lps())
def test_simplex_agrees_with_highs(lp):
    a = solve(lp, method="simplex")
    b = solve(lp, method="highs")
    assert a.status == b.status
    if a.optimal:
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-6)
        assert lp.max_violation(a.values) <= 1e-7


@settings(max_examples=100, deadline=None)
@given(random_lps(standard_bounds=True))
def test_dual_route_agrees_with_primal(lp):
    a = solve(lp, method="highs-dual")
    b = solve(lp, method="highs")
    assert a.status == b.status
    if a.optimal:
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-6)
        assert lp.max_violation(a.values) <= 1e-7


def test_simplex_on_degenerate_mechanism_programs():
    # mechanism programs are highly degenerate; tiny pivots used to corrupt x_B here
    from privgame.core import LabelSpace, MetricSet, Prior
    from privgame.mechanism import build_program

    rng = np.random.default_rng(88)
    for _ in range(15):
        n = int(rng.integers(2, 7))
        sp = LabelSpace.of_size(n)
        pts = rng.random((n, 2)) * 4
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        metrics = MetricSet.from_distances(sp, rng.random((n, n)), d)
        prior = Prior.from_weights(sp, rng.random(n) + 0.01)
        for kind, kw in (("differential", {"eps_m": 2.0}), ("joint", {"eps_m": 2.0, "d_m": 0.1})):
            lp = build_program(kind, prior, metrics, **kw).lp
            ours = simplex(lp)
            ref = solve(lp, method="highs")
            assert ours.status is ref.status is Status.OPTIMAL
            assert lp.max_violation(ours.values) <= 1e-9
            assert ours.objective_value == pytest.approx(ref.objective_value, abs=1e-8)
