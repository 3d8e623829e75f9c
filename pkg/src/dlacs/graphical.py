"""Shared-randomness coupling of coalescing walks and the reaction system.

Every oriented edge (u, v) carries an independent Poisson arrow process
of rate 1/degree, each arrow tagged OR or XOR by a fair coin.  Starting
from every vertex occupied, a coalescing-walk particle crosses each
arrow leaving its site; particles that land together become one.  The
same arrows drive the symmetric unit-rate reaction system without caps:
when a particle arrives at an occupied site, an OR arrow merges the two
and an XOR arrow annihilates both.  Which outcome a merged/annihilated
pair suffers never requires sampling a species.

Because only merge arrows matter, the root particle's history is a full
binary tree whose leaves are the time-0 particles that flowed into it
and whose internal nodes carry the arrow tags; the root is present in
the reaction system iff that tree evaluates true (leaves are true, OR
nodes take the disjunction, XOR nodes the exclusive-or).  The tagless
tree shape already determines the probability of evaluating true:
leaves have probability 1 and a node with child probabilities a and b
has a + b - (3/2)ab, always at least 1/2, approaching 2/3 as trees grow.

Two ways to sample the root's outcome are provided:

* an explicit forward simulation from a generated ArrowStream (any
  size, but costs one event per arrow anywhere in the graph), and
* a time-reversed exploration that only spends work near the root's
  ancestry: tracing backwards, an arrow into an explored site splits
  its pending tree slot (the arriving side might carry particles), an
  arrow out of an explored site kills that branch (the site must have
  been empty afterwards), and branches alive at time 0 are leaves.

Both produce the same law; the reversed sampler exists so ensembles of
tens of thousands of replicas stay cheap, and it runs under numba with
a pure-Python twin that follows the identical draw sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .rng import MASK64, splitmix64_mix, splitmix64_next, spawn_generator, uniform_from_word
from .topology import Topology

try:  # pragma: no cover - exercised implicitly
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def _njit(*a, **k):
        def wrap(f):
            return f

        return wrap


# ---------------------------------------------------------------------------
# gate trees

OR, XOR = 0, 1


@dataclass(frozen=True)
class GateTree:
    """Full binary tree; leaf iff both children are None.  ``mark`` is
    OR/XOR on internal nodes, or None for a bare shape."""

    mark: int | None = None
    left: "GateTree | None" = None
    right: "GateTree | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def leaf_count(self) -> int:
        count, stack = 0, [self]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                count += 1
            else:
                stack.extend((node.left, node.right))
        return count

    def internal_nodes(self) -> list["GateTree"]:
        out, stack = [], [self]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                out.append(node)
                stack.extend((node.left, node.right))
        return out


LEAF = GateTree()


def evaluate_gate_tree(tree: GateTree) -> bool:
    """Evaluate with true leaves; every internal node must be marked."""
    # children were created after their parent, so a reverse preorder
    # collected iteratively gives children before parents
    order: list[GateTree] = []
    stack = [tree]
    while stack:
        node = stack.pop()
        order.append(node)
        if not node.is_leaf:
            stack.extend((node.left, node.right))
    values: dict[int, bool] = {}
    for node in reversed(order):
        if node.is_leaf:
            values[id(node)] = True
        elif node.mark == OR:
            values[id(node)] = values[id(node.left)] or values[id(node.right)]
        elif node.mark == XOR:
            values[id(node)] = values[id(node.left)] != values[id(node.right)]
        else:
            raise ValueError("cannot evaluate an unmarked tree")
    return values[id(tree)]


def goodness_probability_exact(tree: GateTree) -> Fraction:
    """Probability the tree evaluates true under fair independent marks.

    Exact dyadic arithmetic: leaves are 1 and a node with child values
    a, b is a + b - (3/2)ab.  Ignores any marks on the tree.
    """
    order: list[GateTree] = []
    stack = [tree]
    while stack:
        node = stack.pop()
        order.append(node)
        if not node.is_leaf:
            stack.extend((node.left, node.right))
    vals: dict[int, Fraction] = {}
    for node in reversed(order):
        if node.is_leaf:
            vals[id(node)] = Fraction(1)
        else:
            a, b = vals[id(node.left)], vals[id(node.right)]
            vals[id(node)] = a + b - Fraction(3, 2) * a * b
    return vals[id(tree)]


def caterpillar_tree(leaves: int) -> GateTree:
    """The maximally unbalanced shape: each new leaf joins at the top."""
    if leaves < 1:
        raise ValueError("need at least one leaf")
    tree = LEAF
    for _ in range(leaves - 1):
        tree = GateTree(None, tree, LEAF)
    return tree


def caterpillar_goodness(leaves: int) -> Fraction:
    """Closed form 2/3 + (1/3)(-1/2)**(leaves-1) for the chain shape."""
    if leaves < 1:
        raise ValueError("need at least one leaf")
    return Fraction(2, 3) + Fraction(1, 3) * Fraction(-1, 2) ** (leaves - 1)


def random_shape(rng: np.random.Generator, leaves: int, marked: bool = False) -> GateTree:
    """Uniform random merge order over ``leaves`` singletons."""
    forest: list[GateTree] = [LEAF] * leaves
    while len(forest) > 1:
        i = int(rng.integers(0, len(forest)))
        j = int(rng.integers(0, len(forest) - 1))
        if j >= i:
            j += 1
        a, b = forest[i], forest[j]
        mark = int(rng.integers(0, 2)) if marked else None
        keep = GateTree(mark, a, b)
        forest[max(i, j)] = forest[-1]
        forest[min(i, j)] = keep
        forest.pop()
    return forest[0]


# ---------------------------------------------------------------------------
# explicit forward construction

@dataclass(frozen=True)
class Arrow:
    time: float
    tail: int
    head: int
    xor: bool


@dataclass
class ArrowStream:
    topology: Topology
    horizon: float
    seed: int
    arrows: list[Arrow]  # globally sorted by time

    def per_edge_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for a in self.arrows:
            counts[(a.tail, a.head)] = counts.get((a.tail, a.head), 0) + 1
        return counts


def generate_arrows(topology: Topology, horizon: float, seed: int) -> ArrowStream:
    """Independent rate-1/degree Poisson arrows per oriented edge, each
    tagged by a fair coin; deterministic given the seed."""
    rng = spawn_generator(seed, 4)
    arrows: list[Arrow] = []
    rate = 1.0 / topology.degree
    for u in range(topology.vertex_count):
        for v in topology.neighbor_table[u]:
            count = int(rng.poisson(rate * horizon))
            times = np.sort(rng.uniform(0.0, horizon, count))
            tags = rng.integers(0, 2, count)
            arrows.extend(
                Arrow(float(t), u, int(v), bool(x)) for t, x in zip(times, tags)
            )
    arrows.sort(key=lambda a: a.time)
    return ArrowStream(topology, horizon, seed, arrows)


class _ForwardParticle:
    __slots__ = ("tree", "present")

    def __init__(self, tree: GateTree, present: bool):
        self.tree = tree
        self.present = present


@dataclass
class CoupledOutcome:
    """Root-site outcome of one coupled forward run."""

    crw_occupied: bool
    dlacs_occupied: bool
    tree: GateTree | None
    leaves: int
    crw_sites: set[int]
    dlacs_sites: set[int]
    root_grid: list[tuple[float, bool, bool]]


def run_coupled(stream: ArrowStream, grid=None, root: int = 0) -> CoupledOutcome:
    """Drive both systems from every-site-occupied along the arrows.

    The walk side crosses every arrow at its tail and merges on
    contact; the reaction side is the same motion thinned by the gate
    rule, so its occupancy is (walk occupancy) AND (tree evaluates
    true).  No species is ever sampled.
    """
    occupants: dict[int, _ForwardParticle] = {
        v: _ForwardParticle(LEAF, True) for v in range(stream.topology.vertex_count)
    }
    grid = [] if grid is None else list(grid)
    gi = 0
    root_grid: list[tuple[float, bool, bool]] = []

    def record_until(t: float) -> None:
        nonlocal gi
        while gi < len(grid) and grid[gi] <= t:
            part = occupants.get(root)
            root_grid.append(
                (float(grid[gi]), part is not None, part is not None and part.present)
            )
            gi += 1

    for arrow in stream.arrows:
        record_until(arrow.time)
        mover = occupants.pop(arrow.tail, None)
        if mover is None:
            continue
        resident = occupants.get(arrow.head)
        if resident is None:
            occupants[arrow.head] = mover
        else:
            mark = XOR if arrow.xor else OR
            tree = GateTree(mark, resident.tree, mover.tree)
            if mark == OR:
                present = resident.present or mover.present
            else:
                present = resident.present != mover.present
            occupants[arrow.head] = _ForwardParticle(tree, present)
    record_until(math.inf)

    part = occupants.get(root)
    return CoupledOutcome(
        crw_occupied=part is not None,
        dlacs_occupied=part is not None and part.present,
        tree=part.tree if part is not None else None,
        leaves=part.tree.leaf_count() if part is not None else 0,
        crw_sites={v for v in occupants},
        dlacs_sites={v for v, p in occupants.items() if p.present},
        root_grid=root_grid,
    )


def run_crw(stream: ArrowStream, grid=None, root: int = 0):
    """Coalescing-walk view of the same run: (occupied sites, root grid
    occupancy)."""
    out = run_coupled(stream, grid=grid, root=root)
    return out.crw_sites, [(t, occ) for t, occ, _ in out.root_grid]


def extract_gate_tree(outcome: CoupledOutcome) -> GateTree | None:
    """Merge-history tree the root particle carried, None if vacant."""
    return outcome.tree


# ---------------------------------------------------------------------------
# time-reversed root sampler

_PENDING, _INTERNAL, _LEAF, _DEAD = 0, 1, 2, 3
_G_GOLD = 0x9E3779B97F4A7C15
_G_C1 = 0xBF58476D1CE4E5B9
_G_C2 = 0x94D049BB133111EB


def _sample_kernel_py(nbr, degree, n, horizon, state, cap_w, cap_s):
    """Pure-Python twin of the numba kernel; identical draw sequence."""
    site_slot = [-1] * n
    site_widx = [-1] * n
    walker_site = [0] * cap_w
    kind = [0] * cap_s
    mark = [0] * cap_s
    left = [0] * cap_s
    right = [0] * cap_s

    root = 0
    walker_site[0] = root
    site_widx[root] = 0
    site_slot[root] = 0
    kind[0] = _PENDING
    n_walkers = 1
    n_slots = 1
    active = 2 * degree
    remaining = horizon

    while n_walkers > 0:
        state, z = splitmix64_next(state)
        u01 = uniform_from_word(z)
        remaining += math.log(1.0 - u01) * degree / active
        if remaining <= 0.0:
            break
        while True:
            state, z = splitmix64_next(state)
            widx = z % n_walkers
            state, z = splitmix64_next(state)
            d = z % (2 * degree)
            x = walker_site[widx]
            nb = int(nbr[x, d >> 1])
            if d & 1:
                u, v = x, nb
            else:
                u, v = nb, x
            k = (site_slot[u] >= 0) + (site_slot[v] >= 0)
            if k == 2:
                state, z = splitmix64_next(state)
                if z & 1:
                    continue
            break
        if site_slot[u] >= 0:
            kind[site_slot[u]] = _DEAD
            wi = site_widx[u]
            last = n_walkers - 1
            moved = walker_site[last]
            walker_site[wi] = moved
            site_widx[moved] = wi
            n_walkers = last
            site_slot[u] = -1
            site_widx[u] = -1
            free = 0
            for j in range(degree):
                if site_slot[nbr[u, j]] < 0:
                    free += 1
            active -= 2 * free
        if site_slot[v] >= 0:
            if n_slots + 2 > cap_s or n_walkers + 1 > cap_w:
                return -1, 0, 0, state
            s = site_slot[v]
            state, z = splitmix64_next(state)
            kind[s] = _INTERNAL
            mark[s] = z & 1
            left[s] = n_slots
            right[s] = n_slots + 1
            kind[n_slots] = _PENDING
            kind[n_slots + 1] = _PENDING
            site_slot[v] = n_slots
            free = 0
            for j in range(degree):
                if site_slot[nbr[u, j]] < 0:
                    free += 1
            active += 2 * free
            site_slot[u] = n_slots + 1
            site_widx[u] = n_walkers
            walker_site[n_walkers] = u
            n_walkers += 1
            n_slots += 2

    for wi in range(n_walkers):
        kind[site_slot[walker_site[wi]]] = _LEAF

    alive = [False] * n_slots
    value = [False] * n_slots
    leaves = [0] * n_slots
    for s in range(n_slots - 1, -1, -1):
        ks = kind[s]
        if ks == _LEAF:
            alive[s] = True
            value[s] = True
            leaves[s] = 1
        elif ks == _DEAD:
            pass
        else:  # internal; children have larger ids, already done
            l, r = left[s], right[s]
            if alive[l] and alive[r]:
                alive[s] = True
                value[s] = (value[l] or value[r]) if mark[s] == 0 else (value[l] != value[r])
                leaves[s] = leaves[l] + leaves[r]
            elif alive[l]:
                alive[s] = True
                value[s] = value[l]
                leaves[s] = leaves[l]
            elif alive[r]:
                alive[s] = True
                value[s] = value[r]
                leaves[s] = leaves[r]
    occupied = 1 if alive[0] else 0
    good = 1 if (alive[0] and value[0]) else 0
    return occupied, good, leaves[0], state


@_njit(cache=True)
def _sample_kernel_nb(nbr, degree, n, horizon, state, cap_w, cap_s):  # pragma: no cover
    gold = np.uint64(_G_GOLD)
    c1 = np.uint64(_G_C1)
    c2 = np.uint64(_G_C2)
    s30 = np.uint64(30)
    s27 = np.uint64(27)
    s31 = np.uint64(31)
    s11 = np.uint64(11)
    one = np.uint64(1)
    scale = 2.0 ** -53

    site_slot = np.full(n, -1, np.int64)
    site_widx = np.full(n, -1, np.int64)
    walker_site = np.zeros(cap_w, np.int64)
    kind = np.zeros(cap_s, np.int8)
    mark = np.zeros(cap_s, np.uint8)
    left = np.zeros(cap_s, np.int64)
    right = np.zeros(cap_s, np.int64)

    walker_site[0] = 0
    site_widx[0] = 0
    site_slot[0] = 0
    n_walkers = 1
    n_slots = 1
    active = 2 * degree
    remaining = horizon

    while n_walkers > 0:
        state = state + gold
        z = state
        z = (z ^ (z >> s30)) * c1
        z = (z ^ (z >> s27)) * c2
        z = z ^ (z >> s31)
        u01 = np.float64(z >> s11) * scale
        remaining += math.log(1.0 - u01) * degree / active
        if remaining <= 0.0:
            break
        u = 0
        v = 0
        while True:
            state = state + gold
            z = state
            z = (z ^ (z >> s30)) * c1
            z = (z ^ (z >> s27)) * c2
            z = z ^ (z >> s31)
            widx = np.int64(z % np.uint64(n_walkers))
            state = state + gold
            z = state
            z = (z ^ (z >> s30)) * c1
            z = (z ^ (z >> s27)) * c2
            z = z ^ (z >> s31)
            d = np.int64(z % np.uint64(2 * degree))
            x = walker_site[widx]
            nb2 = nbr[x, d >> 1]
            if d & 1:
                u = x
                v = nb2
            else:
                u = nb2
                v = x
            k = 0
            if site_slot[u] >= 0:
                k += 1
            if site_slot[v] >= 0:
                k += 1
            if k == 2:
                state = state + gold
                z = state
                z = (z ^ (z >> s30)) * c1
                z = (z ^ (z >> s27)) * c2
                z = z ^ (z >> s31)
                if z & one:
                    continue
            break
        if site_slot[u] >= 0:
            kind[site_slot[u]] = 3
            wi = site_widx[u]
            last = n_walkers - 1
            moved = walker_site[last]
            walker_site[wi] = moved
            site_widx[moved] = wi
            n_walkers = last
            site_slot[u] = -1
            site_widx[u] = -1
            free = 0
            for j in range(degree):
                if site_slot[nbr[u, j]] < 0:
                    free += 1
            active -= 2 * free
        if site_slot[v] >= 0:
            if n_slots + 2 > cap_s or n_walkers + 1 > cap_w:
                return -1, 0, 0, state
            s = site_slot[v]
            state = state + gold
            z = state
            z = (z ^ (z >> s30)) * c1
            z = (z ^ (z >> s27)) * c2
            z = z ^ (z >> s31)
            kind[s] = 1
            mark[s] = np.uint8(z & one)
            left[s] = n_slots
            right[s] = n_slots + 1
            kind[n_slots] = 0
            kind[n_slots + 1] = 0
            site_slot[v] = n_slots
            free = 0
            for j in range(degree):
                if site_slot[nbr[u, j]] < 0:
                    free += 1
            active += 2 * free
            site_slot[u] = n_slots + 1
            site_widx[u] = n_walkers
            walker_site[n_walkers] = u
            n_walkers += 1
            n_slots += 2

    for wi in range(n_walkers):
        kind[site_slot[walker_site[wi]]] = 2

    alive = np.zeros(n_slots, np.uint8)
    value = np.zeros(n_slots, np.uint8)
    leaves = np.zeros(n_slots, np.int64)
    for s in range(n_slots - 1, -1, -1):
        ks = kind[s]
        if ks == 2:
            alive[s] = 1
            value[s] = 1
            leaves[s] = 1
        elif ks == 1:
            l = left[s]
            r = right[s]
            if alive[l] and alive[r]:
                alive[s] = 1
                if mark[s] == 0:
                    value[s] = value[l] | value[r]
                else:
                    value[s] = value[l] ^ value[r]
                leaves[s] = leaves[l] + leaves[r]
            elif alive[l]:
                alive[s] = 1
                value[s] = value[l]
                leaves[s] = leaves[l]
            elif alive[r]:
                alive[s] = 1
                value[s] = value[r]
                leaves[s] = leaves[r]
    occupied = 1 if alive[0] else 0
    good = 1 if (alive[0] and value[0]) else 0
    return occupied, good, leaves[0], state


@dataclass
class RootSampleBatch:
    """Per-replica root outcomes from the reversed sampler."""

    occupied: np.ndarray  # bool: walk particle at the root at time t
    good: np.ndarray      # bool: occupied AND tree evaluates true
    leaves: np.ndarray    # int: merged time-0 particles (0 if vacant)

    @property
    def count(self) -> int:
        return self.occupied.size


def root_samples(topology: Topology, horizon: float, count: int, master_seed: int,
                 *, start: int = 0, impl: str = "auto") -> RootSampleBatch:
    """Sample the root outcome in ``count`` independent replicas.

    Replica r (global counter ``start + r``) uses the splitmix64 stream
    seeded by mixing the master seed with that counter, so ensembles
    can be split across calls or processes without overlap.
    """
    nbr = np.ascontiguousarray(topology.neighbor_table)
    deg = topology.degree
    n = topology.vertex_count
    use_nb = HAVE_NUMBA if impl == "auto" else (impl == "numba")
    kernel = _sample_kernel_nb if use_nb else _sample_kernel_py
    occupied = np.zeros(count, dtype=bool)
    good = np.zeros(count, dtype=bool)
    leaves = np.zeros(count, dtype=np.int64)
    for r in range(count):
        state0 = splitmix64_mix(master_seed, start + r)
        cap_w, cap_s = 256, 8192
        while True:
            if use_nb:
                occ, gd, lv, _ = kernel(nbr, deg, n, horizon, np.uint64(state0), cap_w, cap_s)
            else:
                occ, gd, lv, _ = kernel(nbr, deg, n, horizon, state0, cap_w, cap_s)
            if occ >= 0:
                break
            cap_w *= 4
            cap_s *= 4
        occupied[r] = bool(occ)
        good[r] = bool(gd)
        leaves[r] = lv
    return RootSampleBatch(occupied, good, leaves)


def goodness_convergence_check(batch: RootSampleBatch, ks=(2, 4, 8)):
    """Among occupied replicas with at least k leaves, how far the
    empirical goodness rate sits from 2/3; the distance contracts like
    1/k.  Returns per-k rows (k, n, estimate, stderr, bound, ok)."""
    rows = []
    for k in ks:
        mask = batch.occupied & (batch.leaves >= k)
        nk = int(mask.sum())
        if nk < 2:
            rows.append((k, nk, math.nan, math.nan, math.nan, False))
            continue
        phat = float(batch.good[mask].mean())
        stderr = math.sqrt(max(phat * (1 - phat), 0.0) / nk)
        bound = 1.0 / k + 3.0 * stderr
        rows.append((k, nk, phat, stderr, bound, abs(phat - 2.0 / 3.0) <= bound))
    return rows
