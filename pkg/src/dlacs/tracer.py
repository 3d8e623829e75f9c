"""Coupled pair of systems differing by one added A particle.

The baseline system starts from the usual product configuration,
conditioned on holding a B at ``extra_site``.  The augmented system is
the same configuration plus one extra A at ``extra_site`` whose bravery
sits below every other bravery (half the minimum).  Since an A and a B
can never share a site, that added A and the resident B annihilate in
the same instant the run starts; the augmented system therefore begins
with ``extra_site`` vacant, and the initial discrepancy between the two
systems is exactly one B cluster that only the baseline still has.

Both systems then evolve on shared randomness, indexed by origin vertex:
each origin owns a Poisson clock (at its species' rate) and a lazily
extended walk path, and a cluster always moves along the clock and path
of its bravest constituent.  While a cluster led by the same origin is
alive in both systems it has ticked at the same times and walked the
same prefix of the same path, so it sits at the same site.  Differences
can only ever spread outward from the discrepancy.

A tracer automaton summarises that discrepancy.  It is bookkeeping on
top of the coupled evolution, never an influence on it:

* tracking an A cluster (alive in the augmented system only) that

  - coalesces: the tracer goes or stays dormant and follows the merged
    cluster while the merged size is at most cap_a + 1, else it dies;
  - annihilates with a B: an active tracer hops to that B's counterpart
    in the baseline system; a dormant tracer dies;

* tracking a cluster of size cap_a + 1 that stands off against a
  coalescible A: the tracer re-activates on the less brave of the two;

* tracking a B cluster (alive in the baseline only) that annihilates
  with an A: an active tracer hops to that A's counterpart in the
  augmented system; a dormant tracer dies.

Situations the rules above do not cover (a tracked B coalescing with
another B, or a missing counterpart after earlier divergence) kill or
redirect the tracer and leave a flag on the result.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .engine import (
    NEVER,
    UNBOUNDED,
    SimConfig,
    SimState,
    Species,
    _move_cluster,
    _remove_cluster,
    init_state,
    resolve_site,
)
from .rng import spawn_generator

ROOT = 0
BASE, AUGMENTED = 0, 1


@dataclass
class TracerState:
    status: str = "active"            # active | dormant | dead
    tracked_system: int | None = None
    tracked_cid: int | None = None
    flags: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class TracerRunResult:
    tau: float          # root lifespan in the baseline, capped at horizon
    tau_plus: float     # root lifespan in the augmented system, capped
    death: float        # raw baseline death time (NEVER if alive)
    death_plus: float
    tracer: TracerState
    root_diverged: bool  # root cluster ever differed between the systems


def _update_tracer(tracer: TracerState, events: list, base: SimState,
                   aug: SimState, cfg: SimConfig) -> None:
    systems = (base, aug)
    for sys_idx, e in events:
        if tracer.status == "dead":
            return
        kind = e[0]
        if kind == "annihilate":
            _, a_cid, b_cid, a_leader, b_leader, _rec = e
            if tracer.tracked_system != sys_idx:
                continue
            if tracer.tracked_cid == a_cid:
                hop_leader = b_leader
            elif tracer.tracked_cid == b_cid:
                hop_leader = a_leader
            else:
                continue
            if tracer.status != "active":
                tracer.status = "dead"
                continue
            other_idx = 1 - sys_idx
            counterpart = systems[other_idx].leader_to_cid.get(hop_leader)
            if counterpart is None:
                tracer.status = "dead"
                tracer.flags.append("counterpart-missing")
            else:
                tracer.tracked_system = other_idx
                tracer.tracked_cid = counterpart
        elif kind == "coalesce":
            _, cid1, cid2, merged_cid, _kl, _ol, merged_size = e
            if tracer.tracked_system != sys_idx or tracer.tracked_cid not in (cid1, cid2):
                continue
            merged = systems[sys_idx].clusters[merged_cid]
            if merged.species == Species.A:
                if merged_size <= cfg.cap_a + 1:
                    tracer.status = "dormant"
                    tracer.tracked_cid = merged_cid
                else:
                    tracer.status = "dead"
            else:
                # B-B coalescence of the tracked cluster has no stated
                # rule; keep following the merged cluster and flag it.
                tracer.tracked_cid = merged_cid
                if "tracked-b-coalesced" not in tracer.flags:
                    tracer.flags.append("tracked-b-coalesced")
        elif kind == "standoff":
            _, _v, cids = e
            if tracer.tracked_system != sys_idx or tracer.tracked_cid not in cids:
                continue
            st = systems[sys_idx]
            tracked = st.clusters[tracer.tracked_cid]
            if (tracked.species != Species.A or cfg.cap_a == UNBOUNDED
                    or tracked.size != cfg.cap_a + 1):
                continue
            mergeable = [
                st.clusters[c] for c in cids
                if c != tracked.cid
                and st.clusters[c].species == Species.A
                and st.clusters[c].size <= cfg.cap_a
            ]
            if not mergeable:
                continue
            met = max(mergeable, key=lambda c: (c.bravery, c.leader))
            lower = min((tracked, met), key=lambda c: (c.bravery, c.leader))
            tracer.status = "active"
            tracer.tracked_cid = lower.cid


def _root_mismatch(base: SimState, aug: SimState) -> bool:
    alive0 = math.isinf(base.death_time[ROOT])
    alive1 = math.isinf(aug.death_time[ROOT])
    if alive0 != alive1:
        return True
    if not alive0:
        return base.death_time[ROOT] != aug.death_time[ROOT]
    c0 = base.clusters[base.origin_to_cid[ROOT]]
    c1 = aug.clusters[aug.origin_to_cid[ROOT]]
    return (c0.location, c0.size, c0.leader) != (c1.location, c1.size, c1.leader)


def run_with_tracer(cfg: SimConfig, extra_site: int) -> TracerRunResult:
    """Run the coupled pair and report the root's two lifespans.

    The root is vertex 0 and must differ from ``extra_site``.  If the
    root draws species B both lifespans are 0 by convention.
    """
    topo = cfg.topology
    if not 0 < extra_site < topo.vertex_count:
        raise ValueError(f"extra_site must be a non-root vertex, got {extra_site}")
    if cfg.mode != "continuous":
        raise ValueError("tracer-coupled runs are continuous-time only")

    base = init_state(cfg, track_maps=True, force_b_at=extra_site)
    aug = init_state(cfg, track_maps=True, force_b_at=extra_site)
    extra_b = aug.clusters[extra_site]
    _remove_cluster(aug, extra_b)
    aug.death_time[extra_site] = 0.0

    tracer = TracerState(status="active", tracked_system=BASE,
                         tracked_cid=extra_site,
                         flags=["initial-instant-annihilation"])

    if base.origin_species[ROOT] == Species.B:
        base.death_time[ROOT] = 0.0
        aug.death_time[ROOT] = 0.0
        return TracerRunResult(0.0, 0.0, 0.0, 0.0, tracer, False)

    n = topo.vertex_count
    rates = [cfg.lambda_a if base.origin_species[o] == Species.A else cfg.lambda_b
             for o in range(n)]
    clock_gens: dict[int, object] = {}
    path_gens: dict[int, object] = {}
    paths: dict[int, list[int]] = {}
    pointers = ([0] * n, [0] * n)

    def next_gap(o: int) -> float:
        gen = clock_gens.get(o)
        if gen is None:
            gen = clock_gens[o] = spawn_generator(cfg.seed, 2, o)
        return float(gen.exponential(1.0 / rates[o]))

    def path_step(o: int) -> None:
        gen = path_gens.get(o)
        if gen is None:
            gen = path_gens[o] = spawn_generator(cfg.seed, 3, o)
        walk = paths[o]
        walk.append(topo.sample_neighbor(walk[-1], gen))

    heap: list[tuple[float, int]] = []
    for o in range(n):
        if rates[o] > 0:
            paths[o] = [o]
            heapq.heappush(heap, (next_gap(o), o))

    systems = (base, aug)
    root_diverged = False
    horizon = cfg.horizon
    while heap:
        t, o = heapq.heappop(heap)
        if t >= horizon:
            break
        base.clock = t
        aug.clock = t
        events: list[tuple[int, tuple]] = []
        for sys_idx, st in ((BASE, base), (AUGMENTED, aug)):
            cid = st.leader_to_cid.get(o)
            if cid is None:
                continue
            c = st.clusters[cid]
            k = pointers[sys_idx][o] + 1
            walk = paths[o]
            while len(walk) <= k:
                path_step(o)
            pointers[sys_idx][o] = k
            _move_cluster(st, c, walk[k])
            local: list = []
            resolve_site(st, c.location, cfg, local)
            events.extend((sys_idx, e) for e in local)
        if events:
            _update_tracer(tracer, events, base, aug, cfg)
        if not root_diverged and _root_mismatch(base, aug):
            root_diverged = True
        if base.leader_to_cid.get(o) is not None or aug.leader_to_cid.get(o) is not None:
            heapq.heappush(heap, (t + next_gap(o), o))
    base.clock = horizon
    aug.clock = horizon

    death = float(base.death_time[ROOT])
    death_plus = float(aug.death_time[ROOT])
    return TracerRunResult(
        tau=min(death, horizon),
        tau_plus=min(death_plus, horizon),
        death=death,
        death_plus=death_plus,
        tracer=tracer,
        root_diverged=root_diverged,
    )
