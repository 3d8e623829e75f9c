"""Independent ground truth for tests: a closed-form two-site law, a
deliberately naive simulator, and brute-force gate-tree enumeration.

Nothing here shares code with the engine or the goodness recursion;
agreement between the two paths is the point.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphical import GateTree


@dataclass(frozen=True)
class ExactOutcome:
    """Exact terminal law of a tiny scenario; outcome label -> probability."""

    scenario: str
    outcomes: dict
    survival_given_first: float
    annihilation_prob: float


def k2_exact(p: float, cap_a, cap_b, lambda_a: float, lambda_b: float) -> ExactOutcome:
    """Terminal law on the two-vertex complete graph, one particle per
    vertex.

    With any positive jump rate on a cluster the two occupants meet at
    the first event almost surely, so the terminal state is decided by
    the initial species draw alone: unlike pairs annihilate, like pairs
    merge when the cap allows a size-2 cluster and otherwise stay two
    frozen-apart singletons.  Two opposite-species never meeting has
    probability zero since lambda_a > 0; two second-species particles
    never meet at all when lambda_b = 0, which leaves the same two-
    singleton multiset as the cap-blocked case.
    """
    if lambda_a <= 0:
        raise ValueError("lambda_a must be positive")
    aa = p * p
    bb = (1 - p) * (1 - p)
    ab = 2 * p * (1 - p)
    outcomes: dict = {"empty": ab}
    if cap_a >= 1:
        outcomes["merged-a"] = aa
    else:
        outcomes["split-a"] = aa
    if lambda_b > 0 and cap_b >= 1:
        outcomes["merged-b"] = bb
    else:
        outcomes["split-b"] = bb
    return ExactOutcome(
        scenario=f"complete(2) p={p} caps=({cap_a},{cap_b}) rates=({lambda_a},{lambda_b})",
        outcomes={k: v for k, v in outcomes.items() if v > 0},
        survival_given_first=p,
        annihilation_prob=ab,
    )


def classify_terminal(state) -> str:
    """Label an engine state's terminal cluster multiset on two sites."""
    clusters = sorted(state.clusters.values(), key=lambda c: (int(c.species), c.size))
    if not clusters:
        return "empty"
    if len(clusters) == 1:
        c = clusters[0]
        kind = "a" if int(c.species) == 0 else "b"
        return f"merged-{kind}" if c.size == 2 else f"lone-{kind}{c.size}"
    if len(clusters) == 2 and all(c.size == 1 for c in clusters):
        kinds = {int(c.species) for c in clusters}
        if kinds == {0}:
            return "split-a"
        if kinds == {1}:
            return "split-b"
        return "split-ab"
    return "other:" + ",".join(f"{int(c.species)}x{c.size}" for c in clusters)


class _Naive:
    """List-of-dicts cycle simulator with linear scans everywhere."""

    def __init__(self, n, p, seed, lambda_a, lambda_b, cap_a, cap_b):
        self.n = n
        self.lambda_a = lambda_a
        self.lambda_b = lambda_b
        self.cap_a = cap_a
        self.cap_b = cap_b
        self.rng = random.Random(seed)
        self.particles = []
        for v in range(n):
            species = 0 if self.rng.random() < p else 1
            self.particles.append(
                {"species": species, "size": 1, "bravery": self.rng.random(), "site": v}
            )

    def _can_react(self, a, b):
        if a["species"] != b["species"]:
            return True
        cap = self.cap_a if a["species"] == 0 else self.cap_b
        return max(a["size"], b["size"]) <= cap

    def _settle(self, v):
        while True:
            here = [q for q in self.particles if q["site"] == v]
            reactive = [
                q for q in here
                if any(w is not q and self._can_react(q, w) for w in here)
            ]
            if not reactive:
                return
            initiator = max(reactive, key=lambda q: q["bravery"])
            partners = [w for w in here if w is not initiator and self._can_react(initiator, w)]
            partner = max(partners, key=lambda q: q["bravery"])
            if initiator["species"] != partner["species"]:
                self.particles.remove(initiator)
                self.particles.remove(partner)
            else:
                keep, gone = initiator, partner
                if gone["bravery"] > keep["bravery"]:
                    keep, gone = gone, keep
                keep["size"] += gone["size"]
                self.particles.remove(gone)

    def run(self, horizon):
        t = 0.0
        while True:
            rate = sum(
                self.lambda_a if q["species"] == 0 else self.lambda_b
                for q in self.particles
            )
            if rate <= 0:
                break
            t += self.rng.expovariate(rate)
            if t >= horizon:
                break
            x = self.rng.random() * rate
            mover = None
            acc = 0.0
            for q in self.particles:
                acc += self.lambda_a if q["species"] == 0 else self.lambda_b
                if x < acc:
                    mover = q
                    break
            v = mover["site"]
            mover["site"] = (v + 1) % self.n if self.rng.random() < 0.5 else (v - 1) % self.n
            self._settle(mover["site"])


def naive_simulate(n: int, p: float, horizon: float, seed: int,
                   lambda_a: float = 1.0, lambda_b: float = 1.0,
                   cap_a=math.inf, cap_b=math.inf):
    """Direct simulation on cycle(n); returns (root species or None,
    final cluster count).  Intentionally slow and simple."""
    if n > 16 or horizon > 10:
        raise ValueError("naive simulator is for tiny systems only")
    sim = _Naive(n, p, seed, lambda_a, lambda_b, cap_a, cap_b)
    sim.run(horizon)
    at_root = [q for q in sim.particles if q["site"] == 0]
    root = None
    if at_root:
        root = max(at_root, key=lambda q: q["bravery"])["species"]
    return root, len(sim.particles)


def gate_tree_enumerate(shape: GateTree) -> Fraction:
    """Average the gate evaluation over every equally likely marking.

    Vectorized over all 2^(internal nodes) markings: internal node i
    reads bit i of the marking index (0 = disjunction, 1 = exclusive
    or).  Exact by integer counting.
    """
    internals = [node for node in shape.internal_nodes()]
    m = len(internals)
    if m > 20:
        raise ValueError(f"{m} internal nodes exceeds the enumeration limit of 20")
    index = {id(node): i for i, node in enumerate(internals)}
    total = 1 << m
    marks = np.arange(total, dtype=np.int64)
    ones = np.ones(total, dtype=bool)

    # children before parents: collect reachable nodes, then resolve
    # with a worklist since leaves may be shared instances
    vals: dict = {}
    stack = [shape]
    pending = []
    while stack:
        node = stack.pop()
        if node.is_leaf:
            vals[id(node)] = ones
        else:
            pending.append(node)
            stack.extend((node.left, node.right))
    for node in reversed(pending):
        left = vals[id(node.left)]
        right = vals[id(node.right)]
        bit = (marks >> index[id(node)]) & 1
        vals[id(node)] = np.where(bit == 0, left | right, left ^ right)
    return Fraction(int(vals[id(shape)].sum()), total)
