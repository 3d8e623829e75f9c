"""Estimators, grids, and the root-site accumulator audit."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlacs.engine import NEVER, SimConfig, run
from dlacs.observables import (
    EstimateCI,
    KahanSum,
    RootAccumulator,
    overlap,
    ratio_estimate,
    root_partner_size,
    summarize_sizes,
    survival_estimate,
    time_grid,
    wilson_interval,
)
from dlacs.topology import cycle


def test_kahan_keeps_small_increments():
    # Many tiny sojourns onto a large accumulated total: plain addition
    # absorbs them, compensation does not.
    xs = [1.0] + [1e-16] * 100_000
    acc = KahanSum()
    naive = 0.0
    for x in xs:
        acc.add(x)
        naive += x
    assert acc.value == math.fsum(xs)
    assert naive < acc.value


def test_kahan_random_matches_fsum():
    rng = np.random.default_rng(8)
    xs = rng.lognormal(0.0, 4.0, 5000)
    acc = KahanSum()
    for x in xs:
        acc.add(x)
    assert acc.value == pytest.approx(math.fsum(xs), rel=1e-13)


def test_time_grid_shape():
    g = time_grid(16.0, resolution=4)
    assert g[0] == 0.0
    assert g[-1] == 16.0
    assert list(g[1:]) == [1.0, 2.0, 4.0, 8.0, 16.0]
    assert np.array_equal(time_grid(0.0), [0.0])


def test_estimate_ci_basics():
    est = EstimateCI.from_samples([1.0, 3.0, 5.0, 7.0])
    assert est.mean == 4.0
    assert est.n == 4
    lo, hi = est.ci()
    assert lo < 4.0 < hi
    with pytest.raises(ValueError):
        EstimateCI.from_samples([1.0])
    b = EstimateCI.from_binomial(30, 100)
    assert b.mean == 0.3
    assert b.stderr == pytest.approx(math.sqrt(0.3 * 0.7 / 100))


def test_overlap_symmetry():
    a = EstimateCI(0.5, 0.01, 100)
    b = EstimateCI(0.52, 0.01, 100)
    c = EstimateCI(0.9, 0.01, 100)
    assert overlap(a, b) and overlap(b, a)
    assert not overlap(a, c)


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_interval_bounds(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= hi <= 1.0
    # the point estimate sits inside, up to float roundoff at the edges
    assert lo <= k / n + 1e-9 and k / n - 1e-9 <= hi


def test_survival_estimate_monotone_and_conditional():
    deaths = np.array([0.5, 1.5, 2.5, NEVER, NEVER, 0.2])
    mask = np.array([True, True, False, True, False, True])
    grid = np.array([0.0, 1.0, 2.0, 3.0])
    curve = survival_estimate(deaths, grid, conditional_on=mask)
    assert curve.n == 4
    assert list(curve.prob) == [1.0, 0.5, 0.25, 0.25]
    assert all(curve.prob[i] >= curve.prob[i + 1] for i in range(3))
    full = survival_estimate(deaths, grid)
    assert full.n == 6
    assert full.prob[0] == 1.0


def test_survival_trapezoid_matches_numpy():
    deaths = np.array([0.5, 1.5, 2.5, NEVER])
    grid = np.linspace(0, 3, 7)
    curve = survival_estimate(deaths, grid)
    assert curve.trapezoid(3.0) == pytest.approx(float(np.trapezoid(curve.prob, grid)))


def test_ratio_estimate_known_values():
    ys = np.array([1.0, 1.0, 0.0, 0.0])
    xs = np.array([1.0, 0.0, 0.0, 0.0])
    est = ratio_estimate(xs, ys)
    assert est.mean == pytest.approx(0.5)
    assert est.stderr > 0
    degenerate = ratio_estimate(np.zeros(4), ys)
    assert degenerate.mean == 0.0
    assert math.isfinite(degenerate.stderr)


def test_root_accumulator_audit_recompute():
    cfg = SimConfig(topology=cycle(24), p=0.6, horizon=6.0, seed=13)
    acc = RootAccumulator(time_grid(6.0), audit=True)
    run(cfg, observers=(acc,))
    w2, c2 = acc.recompute()
    assert w2 == acc.weighted.value
    assert c2 == acc.clusters.value
    assert len(acc.snapshots) == len(acc.grid)
    last = acc.snapshots[-1]
    assert last.t == 6.0
    assert last.cum_weighted == pytest.approx(acc.weighted.value)


def test_root_accumulator_counts_only_first_species():
    cfg = SimConfig(topology=cycle(12), p=0.0, horizon=3.0, seed=1)
    acc = RootAccumulator(time_grid(3.0))
    run(cfg, observers=(acc,))
    assert acc.weighted.value == 0.0
    assert all(not s.occupied for s in acc.snapshots)


def test_summarize_sizes_and_partner():
    cfg = SimConfig(topology=cycle(40), p=0.5, horizon=12.0, seed=77)
    state = run(cfg)
    assert state.annihilation_log, "expect reactions on this config"
    summary = summarize_sizes(state.annihilation_log, 40)
    # both sums count size_a * size_b per event, so they agree pathwise
    assert summary.sum_a == summary.sum_b
    assert summary.count_a == sum(r.a_size for r in state.annihilation_log)
    assert summary.count_b == sum(r.b_size for r in state.annihilation_log)
    assert summary.conditional_mean_a() >= 1.0
    assert summary.conditional_mean_b() >= 1.0
    s, w = root_partner_size(state.annihilation_log, root=0)
    assert (s == 0.0) or (w == 0.0), "root was on at most one side"
    if s or w:
        assert max(s, w) >= 1.0
