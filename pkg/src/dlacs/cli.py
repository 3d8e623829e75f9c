"""Command-line front end: config parsing, experiment dispatch, file output.

Config files are line oriented.  Each line holds whitespace-separated
``key=value`` tokens; ``#`` starts a comment; blank lines are skipped.
Example (a space-time panel setup)::

    graph=cycle n=2000 p=0.7
    lambda_B=0 M=inf
    mode=discrete steps=2000 seed=42

Keys and defaults:

    graph        cycle | torus | complete        (required)
    n            side length / vertex count      100
    d            torus dimension                 1
    p            first-species probability       0.5      in [0, 1]
    lambda_A     first-species jump rate         1.0      > 0
    lambda_B     second-species jump rate        1.0      >= 0
    M            first-species coalescence cap   inf      integer >= 0 or inf
    N            second-species cap              inf      integer >= 0 or inf
    mode         continuous | discrete           continuous
    horizon      continuous-time horizon         10.0     >= 0
    steps        discrete step budget            0        >= 0
    seed         base seed                       (flag, then DLACS_SEED, then 0)
    replicas     replica count                   per command
    grid_resolution  time-grid refinement       10       >= 1
    times        comma list of sample times      per profile   (couple)
    p_values     comma list of densities         0.6,0.7,0.8   (sweep, plot)
    profile      quick | full                    full
    checks       comma list of check names       full suite    (verify)
    p_lo,p_hi    bisection bracket               0.56, 0.84    (pc)
    tol_p        bracket width target            0.03          (pc)
    base_replicas,max_replicas  CI budget        24, 96        (pc)
    t_max        per-replica budget override     steps or horizon  (pc)

Every command writes its outputs under ``--out`` (default ``.``):
``curves.csv`` rows are ``t,estimate,stderr,n``; ``report.json`` follows
docs/report.schema.json; ``plot`` adds ``spacetime.ppm``/``.svg`` pairs.
Reruns with identical config and seed are byte-identical.  Exit code is
0 iff every check the command ran passed (2 on usage/config errors).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from .engine import SimConfig, Species, UNBOUNDED, init_state, run
from .experiments import (
    CheckReport,
    DEFAULT_CHECKS,
    ORACLE_CHECKS,
    _dispatch,
    _seed_for,
    check_goodness_convergence,
    check_two_thirds,
    default_pc_config,
    figure_configs,
    pc_bisect,
    run_all,
    survival_fraction_curve,
    two_thirds_rows,
)
from .graphical import root_samples
from .observables import EstimateCI, survival_estimate, time_grid
from .render import save_spacetime, spacetime_raster
from .rng import splitmix64_mix
from .topology import make_topology

_CLI_TAG = {"simulate": 31, "sweep": 32, "plot": 33, "couple": 13}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config grammar

def _parse_int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise ValueError(f"expected integer, got {s!r}")


def _parse_float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise ValueError(f"expected number, got {s!r}")


def _parse_cap(s: str) -> float:
    if s.lower() in ("inf", "infinity"):
        return UNBOUNDED
    v = _parse_int(s)
    return float(v)


def _parse_floats(s: str) -> tuple[float, ...]:
    parts = [p for p in s.split(",") if p]
    if not parts:
        raise ValueError("expected comma-separated numbers")
    return tuple(_parse_float(p) for p in parts)


def _parse_names(s: str) -> tuple[str, ...]:
    parts = tuple(p for p in s.split(",") if p)
    if not parts:
        raise ValueError("expected comma-separated names")
    return parts


def _choice(options: tuple[str, ...]):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return s
    return parse


# key -> (parser, constraint predicate or None, constraint text)
_KEYS = {
    "graph": (_choice(("cycle", "torus", "complete")), None, ""),
    "n": (_parse_int, lambda v: v >= 2, "must be >= 2"),
    "d": (_parse_int, lambda v: v >= 1, "must be >= 1"),
    "p": (_parse_float, lambda v: 0.0 <= v <= 1.0, "must be within [0, 1]"),
    "lambda_A": (_parse_float, lambda v: v > 0.0, "must be > 0"),
    "lambda_B": (_parse_float, lambda v: v >= 0.0, "must be >= 0"),
    "M": (_parse_cap, lambda v: v >= 0, "must be a nonnegative integer or inf"),
    "N": (_parse_cap, lambda v: v >= 0, "must be a nonnegative integer or inf"),
    "mode": (_choice(("continuous", "discrete")), None, ""),
    "horizon": (_parse_float, lambda v: v >= 0.0, "must be >= 0"),
    "steps": (_parse_int, lambda v: v >= 0, "must be >= 0"),
    "seed": (_parse_int, lambda v: v >= 0, "must be >= 0"),
    "replicas": (_parse_int, lambda v: v >= 2, "must be >= 2"),
    "grid_resolution": (_parse_int, lambda v: v >= 1, "must be >= 1"),
    "times": (_parse_floats, lambda v: all(t > 0 for t in v), "times must be > 0"),
    "p_values": (_parse_floats, lambda v: all(0.0 <= x <= 1.0 for x in v),
                 "densities must be within [0, 1]"),
    "profile": (_choice(("quick", "full")), None, ""),
    "checks": (_parse_names, None, ""),
    "p_lo": (_parse_float, lambda v: 0.0 < v < 1.0, "must be within (0, 1)"),
    "p_hi": (_parse_float, lambda v: 0.0 < v < 1.0, "must be within (0, 1)"),
    "tol_p": (_parse_float, lambda v: v > 0.0, "must be > 0"),
    "base_replicas": (_parse_int, lambda v: v >= 2, "must be >= 2"),
    "max_replicas": (_parse_int, lambda v: v >= 2, "must be >= 2"),
    "t_max": (_parse_float, lambda v: v > 0.0, "must be > 0"),
}


@dataclasses.dataclass
class RunConfig:
    """Parsed config: the simulation core plus experiment knobs."""

    sim: SimConfig | None
    seed: int | None
    replicas: int | None
    grid_resolution: int
    times: tuple[float, ...] | None
    p_values: tuple[float, ...]
    profile: str
    checks: tuple[str, ...] | None
    p_lo: float
    p_hi: float
    tol_p: float
    base_replicas: int
    max_replicas: int
    t_max: float | None
    raw: dict


def parse_config(text: str, *, require_graph: bool = True) -> RunConfig:
    """Parse the key=value grammar; raises ConfigError with the line
    number and offending key on any violation."""
    values: dict = {}
    lines: dict = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        for token in body.split():
            if "=" not in token:
                raise ConfigError(f"line {ln}: expected key=value, got {token!r}")
            key, _, val = token.partition("=")
            if key not in _KEYS:
                raise ConfigError(f"line {ln}: unknown key {key!r}")
            if key in values:
                raise ConfigError(
                    f"line {ln}: duplicate key {key!r} (first set on line {lines[key]})")
            if val == "":
                raise ConfigError(f"line {ln}: key {key!r}: empty value")
            parser, pred, constraint = _KEYS[key]
            try:
                parsed = parser(val)
            except ValueError as e:
                raise ConfigError(f"line {ln}: key {key!r}: {e}") from None
            if pred is not None and not pred(parsed):
                raise ConfigError(f"line {ln}: key {key!r}: {constraint}")
            values[key] = parsed
            lines[key] = ln

    if "graph" not in values:
        if require_graph:
            raise ConfigError("graph required")
        sim = None
    else:
        try:
            topology = make_topology(values["graph"], values.get("n", 100), values.get("d", 1))
            sim = SimConfig(
                topology=topology,
                p=values.get("p", 0.5),
                lambda_a=values.get("lambda_A", 1.0),
                lambda_b=values.get("lambda_B", 1.0),
                cap_a=values.get("M", UNBOUNDED),
                cap_b=values.get("N", UNBOUNDED),
                horizon=values.get("horizon", 10.0),
                seed=values.get("seed", 0),
                mode=values.get("mode", "continuous"),
                steps=values.get("steps", 0),
            )
        except ValueError as e:
            raise ConfigError(str(e)) from None
    return RunConfig(
        sim=sim,
        seed=values.get("seed"),
        replicas=values.get("replicas"),
        grid_resolution=values.get("grid_resolution", 10),
        times=values.get("times"),
        p_values=values.get("p_values", (0.6, 0.7, 0.8)),
        profile=values.get("profile", "full"),
        checks=values.get("checks"),
        p_lo=values.get("p_lo", 0.56),
        p_hi=values.get("p_hi", 0.84),
        tol_p=values.get("tol_p", 0.03),
        base_replicas=values.get("base_replicas", 24),
        max_replicas=values.get("max_replicas", 96),
        t_max=values.get("t_max"),
        raw=values,
    )


def resolve_seed(flag_seed: int | None, cfg_seed: int | None) -> int:
    """Precedence: --seed flag, config key, DLACS_SEED env, then 0."""
    if flag_seed is not None:
        return flag_seed
    if cfg_seed is not None:
        return cfg_seed
    env = os.environ.get("DLACS_SEED")
    if env is not None and env != "":
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"DLACS_SEED: expected integer, got {env!r}")
    return 0


# ---------------------------------------------------------------------------
# output plumbing

def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    return obj


def _fmt(x: float) -> str:
    return repr(float(x))


def write_curves(path: str, rows) -> None:
    """rows of (t, estimate, stderr, n) under the fixed CSV header."""
    lines = ["t,estimate,stderr,n"]
    for t, est, se, n in rows:
        lines.append(f"{_fmt(t)},{_fmt(est)},{_fmt(se)},{int(n)}")
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def write_report(path: str, command: str, seed: int, profile: str, config_echo: dict,
                 checks: list[CheckReport], extras: dict | None = None) -> dict:
    doc = {
        "command": command,
        "seed": int(seed),
        "profile": profile,
        "config": _json_safe(config_echo),
        "checks": [_json_safe(r.to_json()) for r in checks],
    }
    if extras is not None:
        doc["extras"] = _json_safe(extras)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return doc


def _print_checks(checks: list[CheckReport]) -> None:
    for r in checks:
        mark = "pass" if r.passed else "FAIL"
        extra = f"  [{', '.join(r.flags)}]" if r.flags else ""
        print(f"  {mark}  {r.name}  (replicas={r.replicas}){extra}")


# ---------------------------------------------------------------------------
# simulate

def _simulate_replica(args):
    (seed, kind, n, d, p, lambda_a, lambda_b, cap_a, cap_b, horizon) = args
    top = make_topology(kind, n, d)
    cfg = SimConfig(topology=top, p=p, lambda_a=lambda_a, lambda_b=lambda_b,
                    cap_a=UNBOUNDED if cap_a < 0 else cap_a,
                    cap_b=UNBOUNDED if cap_b < 0 else cap_b,
                    horizon=horizon, seed=seed)
    state = run(cfg)
    root_a = state.origin_species[0] == int(Species.A)
    return float(state.death_time[0]), (1 if root_a else 0)


def _sim_args(cfg: SimConfig, seeds) -> list:
    cap_a = -1.0 if math.isinf(cfg.cap_a) else float(cfg.cap_a)
    cap_b = -1.0 if math.isinf(cfg.cap_b) else float(cfg.cap_b)
    t = cfg.topology
    return [(s, t.kind, t.n, t.d, cfg.p, cfg.lambda_a, cfg.lambda_b, cap_a, cap_b,
             cfg.horizon) for s in seeds]


def cmd_simulate(run_cfg: RunConfig, seed: int, jobs: int, out: str,
                 replicas: int | None) -> int:
    """Root-cluster survival curve over a replicated run of the config."""
    cfg = run_cfg.sim
    reps = max(2, replicas or run_cfg.replicas or 200)
    rows: list[tuple[float, float, float, int]] = []
    if cfg.mode == "discrete":
        every = max(1, cfg.steps // max(run_cfg.grid_resolution, 1))
        curves = []
        for i in range(reps):
            xs, ys, _ = survival_fraction_curve(
                cfg, seed=_seed_for(seed, _CLI_TAG["simulate"], i), every=every)
            curves.append(ys)
        arr = np.asarray(curves)
        for j, step in enumerate(xs):
            est = EstimateCI.from_samples(arr[:, j])
            rows.append((float(step), est.mean, est.stderr, est.n))
        summary = {"mode": "discrete", "steps": cfg.steps,
                   "final_mass_fraction": rows[-1][1] if rows else None}
    else:
        if cfg.horizon > 0:
            seeds = [_seed_for(seed, _CLI_TAG["simulate"], i) for i in range(reps)]
            results = _dispatch(_simulate_replica, _sim_args(cfg, seeds), jobs)
            deaths = np.array([d for d, _ in results])
            is_a = np.array([a for _, a in results], dtype=bool)
            grid = time_grid(cfg.horizon, run_cfg.grid_resolution)
            curve = survival_estimate(deaths, grid, conditional_on=is_a)
            rows = [(float(t), float(pr), float(se), curve.n)
                    for t, pr, se in zip(curve.times, curve.prob, curve.stderr)]
            summary = {"mode": "continuous", "horizon": cfg.horizon,
                       "root_first_species_n": curve.n,
                       "final_survival": rows[-1][1]}
        else:
            summary = {"mode": "continuous", "horizon": 0.0, "note": "no time range"}
    write_curves(os.path.join(out, "curves.csv"), rows)
    write_report(os.path.join(out, "report.json"), "simulate", seed, run_cfg.profile,
                 run_cfg.raw, [], extras={"summary": summary, "replicas": reps})
    print(f"simulate: {len(rows)} curve points from {reps} replicas -> {out}")
    return 0


# ---------------------------------------------------------------------------
# sweep

def _sweep_replica(args):
    (seed, kind, n, d, p, lambda_a, lambda_b, cap_a, cap_b, mode, horizon, steps) = args
    top = make_topology(kind, n, d)
    caps = dict(cap_a=UNBOUNDED if cap_a < 0 else cap_a,
                cap_b=UNBOUNDED if cap_b < 0 else cap_b)
    if mode == "discrete":
        cfg = SimConfig(topology=top, p=p, lambda_a=lambda_a, lambda_b=lambda_b,
                        horizon=0.0, seed=seed, mode="discrete", steps=steps, **caps)
        from .engine import run_discrete
        state = run_discrete(cfg)
    else:
        cfg = SimConfig(topology=top, p=p, lambda_a=lambda_a, lambda_b=lambda_b,
                        horizon=horizon, seed=seed, **caps)
        state = run(cfg)
    initial = max(int((state.origin_species == int(Species.A)).sum()), 1)
    return state.live_mass(Species.A) / initial


def cmd_sweep(run_cfg: RunConfig, seed: int, jobs: int, out: str,
              replicas: int | None) -> int:
    """First-species surviving mass fraction at the end of the budget,
    across the configured densities."""
    base = run_cfg.sim
    reps = max(2, replicas or run_cfg.replicas or 50)
    t = base.topology
    rows = []
    for k, p in enumerate(run_cfg.p_values):
        cap_a = -1.0 if math.isinf(base.cap_a) else float(base.cap_a)
        cap_b = -1.0 if math.isinf(base.cap_b) else float(base.cap_b)
        args = [(_seed_for(seed, _CLI_TAG["sweep"], k * 1_000_000 + i), t.kind, t.n,
                 t.d, p, base.lambda_a, base.lambda_b, cap_a, cap_b, base.mode,
                 base.horizon, base.steps) for i in range(reps)]
        fracs = np.asarray(_dispatch(_sweep_replica, args, jobs))
        est = EstimateCI.from_samples(fracs)
        rows.append((p, est.mean, est.stderr, est.n))
    monotone = all(rows[i][1] <= rows[i + 1][1] for i in range(len(rows) - 1))
    write_curves(os.path.join(out, "curves.csv"), rows)
    write_report(os.path.join(out, "report.json"), "sweep", seed, run_cfg.profile,
                 run_cfg.raw, [], extras={
                     "p_values": list(run_cfg.p_values),
                     "survival_fractions": [
                         {"p": p, "fraction": f, "stderr": s, "n": n}
                         for p, f, s, n in rows],
                     "monotone_in_p": monotone,
                 })
    print(f"sweep: {len(rows)} densities x {reps} replicas -> {out}"
          f" (monotone={monotone})")
    return 0


# ---------------------------------------------------------------------------
# pc

def cmd_pc(run_cfg: RunConfig, seed: int, jobs: int, out: str,
           replicas: int | None) -> int:
    """Bisect the annihilation-partner ratio r(p) = 1 and report the
    critical-density bracket against the fixed (0.55, 0.85) window."""
    base = run_cfg.sim if run_cfg.sim is not None else default_pc_config(run_cfg.profile)
    if run_cfg.t_max is not None:
        if base.mode == "discrete":
            base = dataclasses.replace(base, steps=int(run_cfg.t_max))
        else:
            base = dataclasses.replace(base, horizon=run_cfg.t_max)
    base_reps = replicas or run_cfg.base_replicas
    result = pc_bisect(base, lo=run_cfg.p_lo, hi=run_cfg.p_hi, tol_p=run_cfg.tol_p,
                       base_replicas=base_reps,
                       max_replicas=max(run_cfg.max_replicas, base_reps),
                       master_seed=seed, jobs=jobs)
    inside = 0.55 < result.lo and result.hi < 0.85
    check = CheckReport(
        name="pc-bracket",
        passed=bool(inside),
        observed=result.to_json(),
        tolerances={"rule": "bracket strictly inside (0.55, 0.85)"},
        replicas=sum(pt.replicas for pt in result.points),
        wall_time=0.0,
        flags=result.flags,
    )
    write_curves(os.path.join(out, "curves.csv"),
                 [(pt.p, pt.r.mean, pt.r.stderr, pt.replicas) for pt in result.points])
    write_report(os.path.join(out, "report.json"), "pc", seed, run_cfg.profile,
                 run_cfg.raw, [check], extras={"bisect": result.to_json()})
    print(f"pc: bracket ({result.lo:g}, {result.hi:g})"
          f" straddle={result.straddle_p} -> {out}")
    _print_checks([check])
    return 0 if check.passed else 1


# ---------------------------------------------------------------------------
# couple

def _couple_plan(run_cfg: RunConfig):
    if run_cfg.profile == "full":
        default = ((125.0, 40_000), (250.0, 60_000), (500.0, 120_000))
    else:
        default = ((20.0, 3_000), (50.0, 6_000))
    if run_cfg.times is None:
        times = [t for t, _ in default]
        counts = [c for _, c in default]
    else:
        times = list(run_cfg.times)
        counts = [default[-1][1]] * len(times)
    return times, counts


def cmd_couple(run_cfg: RunConfig, seed: int, jobs: int, out: str,
               replicas: int | None) -> int:
    """Coupled root sampling: occupancy ratio to the single-species walk
    and the conditional goodness rate, with their acceptance rules."""
    from .topology import cycle

    top = run_cfg.sim.topology if run_cfg.sim is not None else \
        (cycle(2000) if run_cfg.profile == "full" else cycle(200))
    times, counts = _couple_plan(run_cfg)
    if replicas or run_cfg.replicas:
        counts = [replicas or run_cfg.replicas] * len(times)
    master = splitmix64_mix(seed, _CLI_TAG["couple"])
    ensemble = [(t, root_samples(top, t, c, master, start=i * 10_000_000))
                for i, (t, c) in enumerate(zip(times, counts))]
    checks = [
        check_goodness_convergence(seed, run_cfg.profile, jobs, _ensemble=ensemble),
        check_two_thirds(seed, run_cfg.profile, jobs, _ensemble=ensemble),
    ]
    rows = two_thirds_rows(ensemble)
    write_curves(os.path.join(out, "curves.csv"),
                 [(r["time"], r["ratio"], r["ratio_stderr"], r["occupied_n"])
                  for r in rows])
    write_report(os.path.join(out, "report.json"), "couple", seed, run_cfg.profile,
                 run_cfg.raw, checks, extras={"rows": rows})
    print(f"couple: {len(rows)} sample times on {top.kind}({top.n}) -> {out}")
    _print_checks(checks)
    return 0 if all(c.passed for c in checks) else 1


# ---------------------------------------------------------------------------
# verify

def cmd_verify(run_cfg: RunConfig, seed: int, jobs: int, out: str,
               replicas: int | None, oracles: bool = False) -> int:
    """Run the named check suite and write its report."""
    names = run_cfg.checks
    if names is not None:
        known = set(DEFAULT_CHECKS) | set(ORACLE_CHECKS)
        bad = [c for c in names if c not in known]
        if bad:
            raise ConfigError(f"unknown checks: {', '.join(bad)}")
    checks = run_all(seed, run_cfg.profile, jobs,
                     checks=list(names) if names is not None else None,
                     include_oracle=oracles)
    write_report(os.path.join(out, "report.json"), "verify", seed, run_cfg.profile,
                 run_cfg.raw, checks)
    n_pass = sum(1 for c in checks if c.passed)
    print(f"verify[{run_cfg.profile}]: {n_pass}/{len(checks)} checks passed -> {out}")
    _print_checks(checks)
    return 0 if n_pass == len(checks) else 1


# ---------------------------------------------------------------------------
# plot

def _panel_name(p: float) -> str:
    return f"{p:g}".replace("0.", ".")


def cmd_plot(run_cfg: RunConfig, seed: int, jobs: int, out: str,
             replicas: int | None) -> int:
    """Space-time panels of the discrete dynamics, one per density."""
    if run_cfg.sim is not None:
        base = run_cfg.sim
        if base.mode != "discrete" or base.steps < 1:
            raise ConfigError("plot requires mode=discrete and steps >= 1")
        ps = run_cfg.p_values if "p_values" in run_cfg.raw else (base.p,)
        panels = [dataclasses.replace(base, p=p) for p in ps]
    else:
        panels = figure_configs("full")
        ps = tuple(c.p for c in panels)
    fractions = []
    files = []
    for i, cfg in enumerate(panels):
        panel_seed = _seed_for(seed, _CLI_TAG["plot"], i)
        cfg = dataclasses.replace(cfg, seed=panel_seed)
        raster = spacetime_raster(cfg)
        xs, ys, _ = survival_fraction_curve(
            cfg, seed=panel_seed, every=max(1, cfg.steps // max(run_cfg.grid_resolution, 1)))
        suffix = "" if len(panels) == 1 else f"-p{_panel_name(cfg.p)}"
        base_path = os.path.join(out, f"spacetime{suffix}")
        files.extend(save_spacetime(raster, base_path,
                                    title=f"p={cfg.p:g} on {cfg.topology.kind}({cfg.topology.n})"))
        curve_name = "curves.csv" if len(panels) == 1 else f"curves-p{_panel_name(cfg.p)}.csv"
        write_curves(os.path.join(out, curve_name),
                     [(float(s), float(y), 0.0, 1) for s, y in zip(xs, ys)])
        fractions.append({"p": cfg.p, "fraction": ys[-1]})
    checks = []
    if len(fractions) >= 2:
        vals = [f["fraction"] for f in fractions]
        monotone = all(vals[i] <= vals[i + 1] for i in range(len(vals) - 1))
        checks.append(CheckReport(
            name="figure-regimes",
            passed=bool(monotone),
            observed={"survival_fraction_at_end": fractions},
            tolerances={"rule": "fraction non-decreasing in p"},
            replicas=len(fractions),
            wall_time=0.0,
        ))
    write_report(os.path.join(out, "report.json"), "plot", seed, run_cfg.profile,
                 run_cfg.raw, checks, extras={"panels": fractions,
                                              "files": [os.path.basename(f) for f in files]})
    print(f"plot: {len(panels)} panel(s) at p={','.join(f'{p:g}' for p in ps)} -> {out}")
    if checks:
        _print_checks(checks)
    return 0 if all(c.passed for c in checks) else 1


# ---------------------------------------------------------------------------
# entry point

_NEEDS_GRAPH = ("simulate", "sweep")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dlacs",
        description="Two-species annihilating-coalescing random walk laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "replicated survival curve for one config",
        "sweep": "end-of-run survival across densities",
        "pc": "bisect the critical-density bracket",
        "couple": "coupled root sampling against the single-species walk",
        "verify": "run the acceptance check suite",
        "plot": "space-time panel images",
    }
    for name, h in helps.items():
        p = sub.add_parser(name, help=h)
        p.add_argument("--config", default=None, help="config file path")
        p.add_argument("--seed", type=int, default=None, help="base seed")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes (results independent of this)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--replicas", type=int, default=None, help="replica override")
        if name == "verify":
            p.add_argument("--profile", choices=("quick", "full"), default=None,
                           help="check suite size")
            p.add_argument("--oracles", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    try:
        if args.config is not None:
            with open(args.config, "r", encoding="utf-8") as f:
                text = f.read()
            run_cfg = parse_config(text, require_graph=args.command not in ("verify",))
        else:
            if args.command in _NEEDS_GRAPH:
                raise ConfigError(f"{args.command} needs --config with a graph")
            run_cfg = parse_config("", require_graph=False)
        if args.command == "verify" and getattr(args, "profile", None):
            run_cfg = dataclasses.replace(run_cfg, profile=args.profile)
        seed = resolve_seed(args.seed, run_cfg.seed)
    except (ConfigError, OSError) as e:
        print(f"dlacs {args.command}: {e}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    jobs = max(1, args.jobs)
    try:
        if args.command == "simulate":
            return cmd_simulate(run_cfg, seed, jobs, args.out, args.replicas)
        if args.command == "sweep":
            return cmd_sweep(run_cfg, seed, jobs, args.out, args.replicas)
        if args.command == "pc":
            return cmd_pc(run_cfg, seed, jobs, args.out, args.replicas)
        if args.command == "couple":
            return cmd_couple(run_cfg, seed, jobs, args.out, args.replicas)
        if args.command == "verify":
            return cmd_verify(run_cfg, seed, jobs, args.out, args.replicas,
                              oracles=args.oracles)
        if args.command == "plot":
            return cmd_plot(run_cfg, seed, jobs, args.out, args.replicas)
    except ConfigError as e:
        print(f"dlacs {args.command}: {e}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
