"""Event-driven simulator for the two-type reaction system.

Each vertex starts with one size-1 cluster: type A with probability p,
else type B.  Every cluster carries a bravery drawn uniformly on (0,1).
A clusters jump at rate lambda_a, B clusters at rate lambda_b, always to
a uniform neighbour.  When clusters share a site they react pairwise:

* unlike types always annihilate each other completely;
* like types merge into one cluster iff the larger of the two sizes is
  within that type's coalescence cap, otherwise they ignore each other.

A merged cluster keeps the bravery (and, in coupled runs, the motion
stream) of the braver of the two parts.  At a multiply-occupied site the
bravest cluster reacts first, then the next, until no co-located pair
can react; see resolve_site for the exact order.

Continuous-time scheduling uses the race equivalence: one exponential
clock at the total rate, then a proportional choice of the mover.  The
discrete mode instead jumps every A cluster once per step (B frozen,
lambda_b = 0) and resolves arrival sites in ascending vertex order, so
two clusters that trade places never interact.

Caps and never-destroyed lifespans use ``math.inf`` as an explicit
sentinel for comparisons only; no accumulator ever does arithmetic on it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .rng import spawn_generator
from .topology import Topology

UNBOUNDED = math.inf
NEVER = math.inf


class Species(IntEnum):
    A = 0
    B = 1


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one run; hashable enough to log and rebuild."""

    topology: Topology
    p: float
    lambda_a: float = 1.0
    lambda_b: float = 1.0
    cap_a: float = UNBOUNDED
    cap_b: float = UNBOUNDED
    horizon: float = 10.0
    seed: int = 0
    mode: str = "continuous"
    steps: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0,1], got {self.p}")
        if self.lambda_a <= 0:
            raise ValueError(f"lambda_a must be positive, got {self.lambda_a}")
        if self.lambda_b < 0:
            raise ValueError(f"lambda_b must be >= 0, got {self.lambda_b}")
        for name, cap in (("cap_a", self.cap_a), ("cap_b", self.cap_b)):
            if cap != UNBOUNDED and (cap < 0 or int(cap) != cap):
                raise ValueError(f"{name} must be a nonnegative integer or inf, got {cap}")
        if not 0.0 <= self.horizon < math.inf:
            raise ValueError(f"horizon must be finite and >= 0, got {self.horizon}")
        if self.mode not in ("continuous", "discrete"):
            raise ValueError(f"mode must be continuous or discrete, got {self.mode!r}")
        if self.mode == "discrete":
            if self.lambda_b != 0:
                raise ValueError("discrete mode requires lambda_b = 0 (B frozen)")
            if self.steps < 0:
                raise ValueError(f"steps must be >= 0, got {self.steps}")


@dataclass(slots=True)
class Cluster:
    cid: int
    species: Species
    size: int
    bravery: float
    location: int
    constituents: list[int]
    leader: int  # origin vertex of the bravest constituent


@dataclass(frozen=True)
class AnnihilationRecord:
    time: float
    location: int
    a_size: int
    b_size: int
    a_origins: tuple[int, ...]
    b_origins: tuple[int, ...]


class _Pool:
    """Cluster ids of one species with O(1) add/remove/uniform-sample."""

    __slots__ = ("ids", "pos")

    def __init__(self):
        self.ids: list[int] = []
        self.pos: dict[int, int] = {}

    def add(self, cid: int) -> None:
        self.pos[cid] = len(self.ids)
        self.ids.append(cid)

    def remove(self, cid: int) -> None:
        i = self.pos.pop(cid)
        last = self.ids.pop()
        if last != cid:
            self.ids[i] = last
            self.pos[last] = i

    def sample(self, rng: np.random.Generator) -> int:
        return self.ids[int(rng.integers(0, len(self.ids)))]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class SimState:
    topology: Topology
    clock: float
    clusters: dict[int, Cluster]
    site_occupants: list[list[int]]
    pools: tuple[_Pool, _Pool]
    rng: np.random.Generator
    next_cid: int
    death_time: np.ndarray       # per origin vertex; NEVER while alive
    origin_species: np.ndarray   # Species value drawn for each vertex
    annihilation_log: list[AnnihilationRecord] = field(default_factory=list)
    merge_log: list[tuple[Species, int, int]] = field(default_factory=list)
    origin_to_cid: dict[int, int] | None = None
    leader_to_cid: dict[int, int] | None = None

    @property
    def n_a(self) -> int:
        return len(self.pools[Species.A])

    @property
    def n_b(self) -> int:
        return len(self.pools[Species.B])

    def live_mass(self, species: Species) -> int:
        pool = self.pools[species]
        return sum(self.clusters[cid].size for cid in pool.ids)


def init_state(cfg: SimConfig, *, track_maps: bool = False,
               force_b_at: int | None = None) -> SimState:
    """Draw the initial one-cluster-per-vertex configuration.

    Per vertex, ascending: one uniform for the species (A iff u < p), one
    for the bravery.  ``force_b_at`` overrides the species draw at one
    site (used by tracer-coupled runs, which condition on a B there).
    """
    topo = cfg.topology
    n = topo.vertex_count
    rng = spawn_generator(cfg.seed, 0)
    clusters: dict[int, Cluster] = {}
    site_occupants: list[list[int]] = [[] for _ in range(n)]
    pools = (_Pool(), _Pool())
    origin_species = np.empty(n, dtype=np.int8)
    for v in range(n):
        species = Species.A if rng.random() < cfg.p else Species.B
        bravery = float(rng.random())
        if v == force_b_at:
            species = Species.B
        origin_species[v] = species
        clusters[v] = Cluster(v, species, 1, bravery, v, [v], v)
        site_occupants[v].append(v)
        pools[species].add(v)
    state = SimState(
        topology=topo,
        clock=0.0,
        clusters=clusters,
        site_occupants=site_occupants,
        pools=pools,
        rng=spawn_generator(cfg.seed, 1),
        next_cid=n,
        death_time=np.full(n, NEVER),
        origin_species=origin_species,
    )
    if track_maps:
        state.origin_to_cid = {v: v for v in range(n)}
        state.leader_to_cid = {v: v for v in range(n)}
    return state


def _braver(c1: Cluster, c2: Cluster) -> Cluster:
    # Braveries are a.s. distinct; the leader index settles exact ties
    # deterministically (and identically across coupled systems).
    if (c1.bravery, c1.leader) >= (c2.bravery, c2.leader):
        return c1
    return c2


def can_react(c1: Cluster, c2: Cluster, cfg: SimConfig) -> bool:
    if c1.species != c2.species:
        return True
    cap = cfg.cap_a if c1.species == Species.A else cfg.cap_b
    return max(c1.size, c2.size) <= cap


def resolve_pair(c1: Cluster, c2: Cluster, cfg: SimConfig) -> str:
    """Classify the reaction of a co-located pair.

    Returns "annihilate", "coalesce", or "none"; pure, mutates nothing.
    """
    if c1.species != c2.species:
        return "annihilate"
    return "coalesce" if can_react(c1, c2, cfg) else "none"


def _remove_cluster(state: SimState, c: Cluster) -> None:
    del state.clusters[c.cid]
    state.site_occupants[c.location].remove(c.cid)
    state.pools[c.species].remove(c.cid)
    if state.leader_to_cid is not None:
        state.leader_to_cid.pop(c.leader, None)


def _add_cluster(state: SimState, c: Cluster) -> None:
    state.clusters[c.cid] = c
    state.site_occupants[c.location].append(c.cid)
    state.pools[c.species].add(c.cid)
    if state.leader_to_cid is not None:
        state.leader_to_cid[c.leader] = c.cid
    if state.origin_to_cid is not None:
        for v in c.constituents:
            state.origin_to_cid[v] = c.cid


def resolve_site(state: SimState, v: int, cfg: SimConfig,
                 events: list | None = None) -> None:
    """Run reactions at site v until no co-located pair can react.

    Repeatedly the bravest cluster not yet marked inert picks the
    bravest co-located partner it can react with; a cluster with no
    reactive partner goes inert for this instant.  Products re-enter the
    pool.  Terminates: every reaction removes a cluster, and inert marks
    only accumulate.
    """
    occupants = state.site_occupants[v]
    if len(occupants) < 2:
        return
    clusters = state.clusters
    inert: set[int] = set()
    while True:
        best: Cluster | None = None
        for cid in occupants:
            if cid in inert:
                continue
            c = clusters[cid]
            if best is None or (c.bravery, c.leader) > (best.bravery, best.leader):
                best = c
        if best is None:
            break
        partner: Cluster | None = None
        for cid in occupants:
            if cid == best.cid:
                continue
            c = clusters[cid]
            if can_react(best, c, cfg) and (
                partner is None or (c.bravery, c.leader) > (partner.bravery, partner.leader)
            ):
                partner = c
        if partner is None:
            inert.add(best.cid)
            continue
        if best.species != partner.species:
            a, b = (best, partner) if best.species == Species.A else (partner, best)
            _remove_cluster(state, a)
            _remove_cluster(state, b)
            state.death_time[a.constituents] = state.clock
            state.death_time[b.constituents] = state.clock
            rec = AnnihilationRecord(
                state.clock, v, a.size, b.size,
                tuple(a.constituents), tuple(b.constituents),
            )
            state.annihilation_log.append(rec)
            if events is not None:
                events.append(("annihilate", a.cid, b.cid, a.leader, b.leader, rec))
        else:
            keep = _braver(best, partner)
            other = partner if keep is best else best
            state.merge_log.append((keep.species, best.size, partner.size))
            _remove_cluster(state, keep)
            _remove_cluster(state, other)
            # Grow the larger constituent list in place; both originals
            # are being discarded so mutation is safe.
            if len(keep.constituents) >= len(other.constituents):
                members = keep.constituents
                members.extend(other.constituents)
            else:
                members = other.constituents
                members.extend(keep.constituents)
            merged = Cluster(
                state.next_cid, keep.species, keep.size + other.size,
                keep.bravery, v, members, keep.leader,
            )
            state.next_cid += 1
            _add_cluster(state, merged)
            if events is not None:
                events.append(("coalesce", best.cid, partner.cid, merged.cid,
                               keep.leader, other.leader, merged.size))
        if len(occupants) < 2:
            break
    if events is not None and len(occupants) >= 2:
        events.append(("standoff", v, tuple(occupants)))


def next_event(state: SimState, cfg: SimConfig):
    """Sample (dt, mover cid), or None when the total jump rate is zero.

    A zero total rate signals the absorbed state (for example all-B with
    lambda_b = 0); run() then just coasts to the horizon.
    """
    rate_a = state.n_a * cfg.lambda_a
    rate_b = state.n_b * cfg.lambda_b
    total = rate_a + rate_b
    if total <= 0.0:
        return None
    rng = state.rng
    dt = rng.exponential(1.0 / total)
    pool = state.pools[Species.A] if rng.random() * total < rate_a else state.pools[Species.B]
    return dt, pool.sample(rng)


def _move_cluster(state: SimState, c: Cluster, target: int) -> None:
    state.site_occupants[c.location].remove(c.cid)
    c.location = target
    state.site_occupants[target].append(c.cid)


def run(cfg: SimConfig, observers: tuple = (), *, stop=None,
        track_maps: bool = False) -> SimState:
    """Simulate up to the horizon; returns the final state.

    Observers may define on_start(state), on_sojourn(state, t0, dt)
    (called for every maximal interval on which the state is constant,
    including the final stretch to the horizon), and on_event(state).
    A ``stop`` predicate on the state is checked after each event and
    ends the run early at the event time (no coasting to the horizon).
    """
    if cfg.mode != "continuous":
        raise ValueError("run() is for continuous mode; see run_discrete")
    state = init_state(cfg, track_maps=track_maps)
    for obs in observers:
        if hasattr(obs, "on_start"):
            obs.on_start(state)
    horizon = cfg.horizon
    while True:
        ev = next_event(state, cfg)
        if ev is None:
            dt = horizon - state.clock
            if dt > 0:
                for obs in observers:
                    if hasattr(obs, "on_sojourn"):
                        obs.on_sojourn(state, state.clock, dt)
            state.clock = horizon
            break
        dt, cid = ev
        if state.clock + dt >= horizon:
            rest = horizon - state.clock
            if rest > 0:
                for obs in observers:
                    if hasattr(obs, "on_sojourn"):
                        obs.on_sojourn(state, state.clock, rest)
            state.clock = horizon
            break
        for obs in observers:
            if hasattr(obs, "on_sojourn"):
                obs.on_sojourn(state, state.clock, dt)
        state.clock += dt
        mover = state.clusters[cid]
        target = cfg.topology.sample_neighbor(mover.location, state.rng)
        _move_cluster(state, mover, target)
        resolve_site(state, target, cfg)
        for obs in observers:
            if hasattr(obs, "on_event"):
                obs.on_event(state)
        if stop is not None and stop(state):
            break
    return state


def discrete_step(state: SimState, cfg: SimConfig) -> None:
    """One synchronous step: every A cluster jumps, then arrival sites
    are resolved in ascending vertex order.  Requires discrete mode."""
    if cfg.mode != "discrete":
        raise ValueError("discrete_step requires mode='discrete'")
    rng = state.rng
    topo = cfg.topology
    movers = sorted(state.pools[Species.A].ids)
    arrivals: set[int] = set()
    moves: list[tuple[Cluster, int]] = []
    for cid in movers:
        c = state.clusters[cid]
        moves.append((c, topo.sample_neighbor(c.location, rng)))
    for c, target in moves:
        _move_cluster(state, c, target)
        arrivals.add(target)
    state.clock += 1.0
    for v in sorted(arrivals):
        resolve_site(state, v, cfg)


def run_discrete(cfg: SimConfig, row_hook=None) -> SimState:
    """Run cfg.steps synchronous steps; row_hook(state, step) is called
    with step=0 for the initial configuration and after each step."""
    state = init_state(cfg)
    if row_hook is not None:
        row_hook(state, 0)
    for step in range(1, cfg.steps + 1):
        discrete_step(state, cfg)
        if row_hook is not None:
            row_hook(state, step)
    return state


def check_invariants(state: SimState) -> None:
    """Structural audit used by tests; raises AssertionError on damage."""
    seen = 0
    for v, occupants in enumerate(state.site_occupants):
        for cid in occupants:
            c = state.clusters[cid]
            assert c.location == v, f"cluster {cid} indexed at {v} but located at {c.location}"
            seen += 1
    assert seen == len(state.clusters), "site index does not cover the cluster set"
    total_live = 0
    all_origins: set[int] = set()
    for c in state.clusters.values():
        assert c.size == len(c.constituents), f"cluster {c.cid} size != constituent count"
        assert c.leader in c.constituents
        assert all(state.origin_species[v] == c.species for v in c.constituents)
        assert not all_origins.intersection(c.constituents), "origin owned twice"
        all_origins.update(c.constituents)
        assert math.isinf(state.death_time[c.leader])
        total_live += c.size
    destroyed = sum(len(r.a_origins) + len(r.b_origins) for r in state.annihilation_log)
    assert total_live + destroyed == state.topology.vertex_count
    for r in state.annihilation_log:
        assert r.a_size == len(r.a_origins) and r.b_size == len(r.b_origins)
