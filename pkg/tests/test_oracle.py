"""Reference implementations the fast paths are checked against."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlacs.engine import SimConfig, Species, UNBOUNDED, run
from dlacs.graphical import goodness_probability_exact, random_shape
from dlacs.oracle import classify_terminal, gate_tree_enumerate, k2_exact, naive_simulate
from dlacs.topology import complete


def test_k2_exact_distributions():
    out = k2_exact(0.6, cap_a=UNBOUNDED, cap_b=UNBOUNDED, lambda_a=1.0, lambda_b=1.0)
    assert out.outcomes["empty"] == pytest.approx(2 * 0.6 * 0.4)
    assert out.outcomes["merged-a"] == pytest.approx(0.36)
    assert out.outcomes["merged-b"] == pytest.approx(0.16)
    assert sum(out.outcomes.values()) == pytest.approx(1.0)

    capped = k2_exact(0.6, cap_a=0, cap_b=0, lambda_a=1.0, lambda_b=1.0)
    assert "merged-a" not in capped.outcomes
    assert capped.outcomes["split-a"] == pytest.approx(0.36)
    assert capped.outcomes["split-b"] == pytest.approx(0.16)

    frozen = k2_exact(0.5, cap_a=UNBOUNDED, cap_b=UNBOUNDED, lambda_a=1.0, lambda_b=0.0)
    # a frozen second species cannot meet itself
    assert "merged-b" not in frozen.outcomes
    assert frozen.outcomes["split-b"] == pytest.approx(0.25)


@given(st.floats(0.01, 0.99))
def test_k2_exact_total_mass(p):
    out = k2_exact(p, cap_a=1, cap_b=UNBOUNDED, lambda_a=2.0, lambda_b=0.5)
    assert sum(out.outcomes.values()) == pytest.approx(1.0)
    assert out.annihilation_prob == pytest.approx(2 * p * (1 - p))


def test_k2_exact_rejects_frozen_first_species():
    with pytest.raises(ValueError):
        k2_exact(0.5, cap_a=1, cap_b=1, lambda_a=0.0, lambda_b=1.0)


def test_classify_terminal_on_real_runs():
    # p=1, no caps: the two walkers must end merged
    state = run(SimConfig(topology=complete(2), p=1.0, horizon=60.0, seed=4))
    assert classify_terminal(state) == "merged-a"
    # p=1, cap 0: they can never merge
    state = run(SimConfig(topology=complete(2), p=1.0, cap_a=0, horizon=60.0, seed=4))
    assert classify_terminal(state) == "split-a"
    # p=0 with moving B
    state = run(SimConfig(topology=complete(2), p=0.0, horizon=60.0, seed=4))
    assert classify_terminal(state) == "merged-b"


def test_naive_simulate_edges():
    root, clusters = naive_simulate(6, 1.0, 3.0, seed=1)
    assert root in (int(Species.A), None)
    assert 1 <= clusters <= 6
    root, clusters = naive_simulate(6, 0.0, 3.0, seed=1, lambda_b=0.0)
    # nothing moves: every singleton stays put
    assert root == int(Species.B) and clusters == 6


def test_naive_simulate_deterministic():
    a = [naive_simulate(8, 0.5, 4.0, seed=s) for s in range(30)]
    b = [naive_simulate(8, 0.5, 4.0, seed=s) for s in range(30)]
    assert a == b


def test_naive_simulate_guards_scale():
    with pytest.raises(ValueError):
        naive_simulate(64, 0.5, 3.0, seed=0)
    with pytest.raises(ValueError):
        naive_simulate(8, 0.5, 100.0, seed=0)


def test_enumeration_matches_recursion():
    rng = np.random.default_rng(5)
    for _ in range(60):
        shape = random_shape(rng, int(rng.integers(1, 10)))
        assert gate_tree_enumerate(shape) == goodness_probability_exact(shape)


def test_enumeration_caps_work():
    shape = random_shape(np.random.default_rng(0), 25)
    with pytest.raises(ValueError):
        gate_tree_enumerate(shape)


def test_enumeration_exact_type():
    shape = random_shape(np.random.default_rng(2), 6)
    q = gate_tree_enumerate(shape)
    assert isinstance(q, Fraction)
    assert q.denominator & (q.denominator - 1) == 0, "dyadic rational"
