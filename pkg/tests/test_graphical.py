"""History trees, arrow streams, and the reversed root sampler."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlacs.graphical import (
    LEAF,
    OR,
    XOR,
    GateTree,
    caterpillar_goodness,
    caterpillar_tree,
    evaluate_gate_tree,
    extract_gate_tree,
    generate_arrows,
    goodness_convergence_check,
    goodness_probability_exact,
    random_shape,
    root_samples,
    run_coupled,
    run_crw,
)
from dlacs.topology import cycle, torus


def test_gate_semantics_by_hand():
    two = GateTree(OR, LEAF, LEAF)
    assert evaluate_gate_tree(two) is True
    two_x = GateTree(XOR, LEAF, LEAF)
    assert evaluate_gate_tree(two_x) is False  # true XOR true
    three = GateTree(XOR, GateTree(OR, LEAF, LEAF), LEAF)
    assert evaluate_gate_tree(three) is False
    assert evaluate_gate_tree(GateTree(OR, two_x, LEAF)) is True


def test_unmarked_tree_rejected():
    with pytest.raises(ValueError):
        evaluate_gate_tree(GateTree(None, LEAF, LEAF))


def test_chain_goodness_frozen_values():
    # leaves: 1, 2, 3, 4, 5
    expect = [Fraction(1), Fraction(1, 2), Fraction(3, 4), Fraction(5, 8), Fraction(11, 16)]
    for n, q in enumerate(expect, start=1):
        assert caterpillar_goodness(n) == q
        assert goodness_probability_exact(caterpillar_tree(n)) == q


def test_chain_goodness_converges_to_two_thirds():
    assert abs(float(caterpillar_goodness(30)) - 2 / 3) < 1e-8


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 9))
def test_goodness_at_least_half(seed, leaves):
    shape = random_shape(np.random.default_rng(seed), leaves)
    q = goodness_probability_exact(shape)
    assert Fraction(1, 2) <= q <= 1


@given(st.integers(0, 2**31), st.integers(1, 12))
def test_random_shape_leaf_count(seed, leaves):
    shape = random_shape(np.random.default_rng(seed), leaves)
    assert shape.leaf_count() == leaves
    assert len(shape.internal_nodes()) == leaves - 1


def test_arrow_stream_structure():
    top = cycle(12)
    s1 = generate_arrows(top, 5.0, seed=4)
    s2 = generate_arrows(top, 5.0, seed=4)
    assert [(a.time, a.tail, a.head, a.xor) for a in s1.arrows] == \
        [(a.time, a.tail, a.head, a.xor) for a in s2.arrows]
    times = [a.time for a in s1.arrows]
    assert times == sorted(times)
    assert all(0.0 < t < 5.0 for t in times)
    for a in s1.arrows:
        assert a.head in top.neighbors(a.tail)


def test_arrow_rate_and_coin_balance():
    # Each oriented edge fires at rate 1/deg: n*deg*(T/deg) arrows total.
    top = cycle(40)
    total, xors = 0, 0
    for seed in range(60):
        s = generate_arrows(top, 8.0, seed=seed)
        total += len(s.arrows)
        xors += sum(a.xor for a in s.arrows)
    mean_expect = 40 * 2 * 8.0 / 2
    se = (60 * mean_expect) ** 0.5
    assert abs(total - 60 * mean_expect) < 4 * se
    se_coin = (total * 0.25) ** 0.5
    assert abs(xors - total / 2) < 4 * se_coin


def test_python_and_compiled_samplers_agree():
    top = cycle(32)
    a = root_samples(top, 3.0, 300, master_seed=21, impl="py")
    b = root_samples(top, 3.0, 300, master_seed=21, impl="nb")
    assert np.array_equal(a.occupied, b.occupied)
    assert np.array_equal(a.good, b.good)
    assert np.array_equal(a.leaves, b.leaves)


def test_sampler_batch_consistency():
    batch = root_samples(cycle(64), 4.0, 2000, master_seed=9)
    assert batch.count == 2000
    assert not batch.good[~batch.occupied].any(), "good implies occupied"
    assert (batch.leaves[batch.occupied] >= 1).all()
    assert (batch.leaves[~batch.occupied] == 0).all()
    # start offset continues the same stream
    tail = root_samples(cycle(64), 4.0, 500, master_seed=9, start=1500)
    assert np.array_equal(tail.occupied, batch.occupied[1500:])
    assert np.array_equal(tail.good, batch.good[1500:])


def test_forward_and_reversed_sampler_share_law():
    # The reversed root sampler must reproduce the forward coupled run's
    # root marginals (occupied, good) on the same graph and horizon.
    top, horizon, reps = cycle(16), 1.5, 4000
    f_occ = f_good = 0
    for seed in range(reps):
        stream = generate_arrows(top, horizon, seed=10_000 + seed)
        out = run_coupled(stream)
        f_occ += out.crw_occupied
        good = False
        if out.crw_occupied and out.tree is not None:
            good = evaluate_gate_tree(out.tree)
        f_good += good
    batch = root_samples(top, horizon, reps, master_seed=77)
    for fwd, back in ((f_occ, batch.occupied.sum()), (f_good, batch.good.sum())):
        p_pool = (fwd + back) / (2 * reps)
        se = (2 * p_pool * (1 - p_pool) / reps) ** 0.5
        assert abs(fwd / reps - back / reps) < 4.5 * se, (fwd, back)


def test_coupled_run_tree_matches_leaves():
    for seed in range(80):
        stream = generate_arrows(torus(4, 2), 2.5, seed=seed)
        out = run_coupled(stream)
        if out.crw_occupied:
            tree = extract_gate_tree(out)
            assert tree is not None
            assert tree.leaf_count() == out.leaves
        else:
            assert out.leaves == 0


def test_crw_occupancy_matches_coupled_margin():
    # run_crw is the single-species projection of the coupled run.
    for seed in range(60):
        stream = generate_arrows(cycle(10), 2.0, seed=seed)
        out = run_coupled(stream)
        sites, _ = run_crw(stream)
        assert sites == out.crw_sites
        assert (0 in sites) == out.crw_occupied


def test_convergence_report_shape():
    batch = root_samples(cycle(128), 12.0, 4000, master_seed=3)
    rows = goodness_convergence_check(batch, ks=(2, 4))
    assert [r[0] for r in rows] == [2, 4]
    for k, n, phat, se, bound, ok in rows:
        assert n == int((batch.leaves >= k).sum())
        assert bound == pytest.approx(1 / k + 3 * se)
        assert 0.0 <= phat <= 1.0
