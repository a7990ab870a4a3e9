"""Experiment runner on grids small enough for the default test run."""

import numpy as np
import pytest

from privgame import io
from privgame.geo import Grid
from privgame.harness import (
    ExperimentConfig, approx_sweep, dm_ladder_for, medians_by, parse_ladder, prior_mismatch, scenario1,
    scenario2, scenario3,
)

TOL = 1e-6
SMALL = ExperimentConfig(grid=Grid(3, 3, 1.5, 1.5), users=2, seed=5, trace_length=400)


def test_parse_ladder():
    assert parse_ladder("0.15:0.9:0.15") == [0.15, 0.3, 0.45, 0.6, 0.75, 0.9]
    assert parse_ladder("0.5,1,2") == [0.5, 1.0, 2.0]
    assert parse_ladder("1:1:0.5") == [1.0]
    for bad in ("1:0:0.1", "0:1:0", "0:1"):
        with pytest.raises(ValueError):
            parse_ladder(bad)


def test_dm_ladder_capped_at_dmax():
    assert dm_ladder_for(1.3) == pytest.approx([0.5, 1.0, 1.3 - 1e-7])
    assert dm_ladder_for(0.4) == pytest.approx([0.4 - 1e-7])
    assert dm_ladder_for(1.0) == pytest.approx([0.5, 1.0 - 1e-7])


@pytest.fixture(scope="module")
def s1():
    return scenario1(SMALL)


def test_scenario1_rows(s1):
    assert len(s1.rows) == 2 * 6
    assert all(r["status"] == "ok" for r in s1.rows)
    for r in s1.rows:
        assert abs(r["cost_joint"] - r["cost_diff"]) <= TOL
        assert r["ap_opt_dist"] >= r["d_m"] - TOL
        assert r["ap_opt_joint"] >= r["d_m"] - TOL
        for name in ("diff", "dist", "joint"):
            assert r[f"ap_bayes_{name}"] >= r[f"ap_opt_{name}"] - TOL


def test_scenario1_single_cell():
    cfg = ExperimentConfig(grid=SMALL.grid, users=1, seed=2, trace_length=300)
    (row,) = scenario1(cfg, eps_ladder=[0.4]).rows
    assert row["status"] == "ok"
    for name in ("diff", "dist", "joint"):
        assert row[f"ap_bayes_{name}"] >= row[f"ap_opt_{name}"] - TOL


def test_scenario2_offset_zero_matches_scenario1(s1):
    s2 = scenario2(SMALL, offsets=(0.0,))
    for a, b in zip(s1.rows, s2.rows):
        assert a["d_m"] == pytest.approx(b["d_m"], abs=1e-12)
        assert a["cost_dist"] == pytest.approx(b["cost_dist"], abs=TOL)
        assert a["cost_joint"] == pytest.approx(b["cost_joint"], abs=TOL)


def _check_s2(rows):
    for r in rows:
        if r["d_m"] > r["d_max"] + TOL:
            assert r["status"] == "exceeds-dmax"
        else:
            assert r["status"] == "ok", r["note"]
            assert r["ap_joint"] >= r["d_m"] - TOL
            assert r["cost_joint"] >= max(r["cost_diff"], r["cost_dist"]) - TOL
    return sum(r["status"] == "ok" for r in rows)


def test_scenario2_offsets_and_bound():
    res = scenario2(SMALL, eps_ladder=[0.3, 2.0, 4.0], offsets=(0.1, 5.0))
    assert all(r["status"] == "exceeds-dmax" for r in res.rows if r["offset"] == 5.0)
    assert _check_s2(res.rows) > 0


def test_scenario2_on_six_by_six():
    cfg = ExperimentConfig(grid=Grid(6, 6, 4.5, 4.5), users=1, seed=1)
    res = scenario2(cfg, eps_ladder=[1.5, 3.0], offsets=(0.2,))
    assert _check_s2(res.rows) > 0


def test_scenario3_dominance():
    res = scenario3(SMALL, eps_ladder=[0.2, 0.6, 1.0], dm_step=0.2)
    ok = res.ok_rows()
    assert len(ok) == len(res.rows) > 0
    for r in ok:
        assert r["ap_joint"] >= max(r["ap_diff"], r["ap_dist"]) - TOL
        assert r["cost_joint"] >= max(r["cost_diff"], r["cost_dist"]) - TOL
        assert r["d_m"] <= r["d_max"]
    ap = res.column("ap_joint")
    assert np.all(np.diff(ap) >= 0)
    # the top rung sits at d_max for every user
    for uid in ("u0", "u1"):
        mine = [r for r in res.rows if r["user"] == uid]
        assert max(r["d_m"] for r in mine) == pytest.approx(mine[0]["d_max"], abs=1e-6)


def test_prior_mismatch():
    res = prior_mismatch(SMALL, eps_ladder=[0.3, 0.9], betas=(1.0, 4.0))
    assert all(r["status"] == "ok" for r in res.rows)
    for r in res.rows:
        assert r["entropy_hat"] <= r["entropy_pi"] + 1e-12
        if r["beta"] == 1.0:
            assert r["ap_diff_hat"] == pytest.approx(r["d_m"], abs=TOL)
            assert r["ap_dist_hat"] == pytest.approx(r["d_m"], abs=TOL)
        else:
            assert r["ap_dist_hat"] <= r["ap_dist_pi"] + TOL


def test_approx_sweep_small():
    cfg = ExperimentConfig(grid=Grid(4, 4, 3.0, 3.0), users=2, seed=3, trace_length=500)
    res = approx_sweep(cfg, eps=0.6, dm=0.3, radii=[0.75, 1.5, 2.25], repeats=1)
    assert all(r["status"] == "ok" for r in res.rows), [r["note"] for r in res.rows]
    radii = sorted({r["radius"] for r in res.rows})
    assert radii[-1] == pytest.approx(cfg.grid.diameter)
    for r in res.rows:
        if r["radius"] == radii[-1]:
            assert r["error"] <= TOL
    errs = [v for _, v in medians_by(res, "radius", "error")]
    assert all(b <= a + TOL for a, b in zip(errs, errs[1:]))
    sizes = [r["num_constraints"] for r in res.rows if r["user"] == "u0"]
    assert sizes == sorted(sizes)


def _strip_timing(path, timing):
    header, rows = io.read_csv(path)
    return [{k: v for k, v in r.items() if k not in timing} for r in rows], path.read_text().splitlines()[:3]


def test_runs_are_reproducible(tmp_path):
    a, b = scenario1(SMALL, eps_ladder=[0.3]), scenario1(SMALL, eps_ladder=[0.3])
    a.write(tmp_path / "a.csv", with_host=False)
    b.write(tmp_path / "b.csv", with_host=False)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    cfg = ExperimentConfig(grid=Grid(3, 3, 1.5, 1.5), users=1, seed=4, trace_length=200)
    x = approx_sweep(cfg, radii=[0.5, 1.0], repeats=1)
    y = approx_sweep(cfg, radii=[0.5, 1.0], repeats=1)
    x.write(tmp_path / "x.csv")
    y.write(tmp_path / "y.csv")
    assert _strip_timing(tmp_path / "x.csv", x.timing_columns) == _strip_timing(tmp_path / "y.csv", y.timing_columns)


def test_csv_is_self_describing(tmp_path, s1):
    s1.write(tmp_path / "s1.csv")
    lines = (tmp_path / "s1.csv").read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    assert comments[-1] == "# " + ",".join(s1.columns)
    assert any("experiment=scenario1" in ln and "seed=5" in ln for ln in comments)
    assert any(ln.startswith("# host=") for ln in comments)
    header, rows = io.read_csv(tmp_path / "s1.csv")
    assert len(rows) == len(s1.rows)
