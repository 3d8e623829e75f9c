"""Full-profile acceptance gate: one test per shipped correctness target.

Everything here runs at the same scale and master seed (0) as
``dlacs verify --profile full``, so this module is the slow one; the
whole file takes a few minutes on a single core.  Each test pins the
scale knobs (replica counts, graph sizes, times) and the tolerance rule,
so a quiet change to either the checks or their budgets fails here.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import pytest

from dlacs import cli
from dlacs.experiments import (
    _coupling_ensemble,
    check_crw_density,
    check_engine_vs_reference,
    check_gate_exactness,
    check_monotonicity,
    check_mtp,
    check_two_thirds,
    check_vt_bound,
    check_wt_identity,
    check_goodness_convergence,
    check_pc_bracket,
)
from dlacs.graphical import caterpillar_goodness

MASTER_SEED = 0


@pytest.fixture(scope="module")
def coupling_ensemble():
    """Coupled root samples on cycle(2000): 40k at t=125, 60k at t=250,
    120k at t=500.  Shared by the convergence and ratio criteria."""
    return _coupling_ensemble(MASTER_SEED, "full")


def test_c01_gate_recursion_exact_on_random_shapes():
    rep = check_gate_exactness(MASTER_SEED, "full")
    assert rep.passed
    assert rep.wall_time < 10.0
    obs = rep.observed
    assert obs["shapes"] == 1000
    assert obs["max_leaves"] == 20
    assert obs["mismatches"] == 0
    assert obs["below_half"] == 0
    assert obs["frozen_values_ok"] is True
    # chain values pinned here independently of the check internals
    assert caterpillar_goodness(2) == Fraction(1, 2)
    assert caterpillar_goodness(3) == Fraction(3, 4)
    assert caterpillar_goodness(4) == Fraction(5, 8)


def test_c02_goodness_rate_near_two_thirds_given_k_merges(coupling_ensemble):
    t, batch = coupling_ensemble[-1]
    assert t == 500.0
    assert batch.count == 120_000
    assert batch.count >= 20_000
    rep = check_goodness_convergence(MASTER_SEED, "full", _ensemble=coupling_ensemble)
    assert rep.passed
    assert rep.observed["time"] == 500.0
    rows = rep.observed["rows"]
    assert [r["k"] for r in rows] == [2, 4, 8]
    for r in rows:
        assert r["ok"]
        assert r["n"] > 0
        assert abs(r["estimate"] - 2.0 / 3.0) <= 1.0 / r["k"] + 3.0 * r["stderr"]
        assert r["bound"] == pytest.approx(1.0 / r["k"] + 3.0 * r["stderr"])


def test_c03_occupancy_ratio_in_two_thirds_band(coupling_ensemble):
    rep = check_two_thirds(MASTER_SEED, "full", _ensemble=coupling_ensemble)
    assert rep.passed
    lo, hi = rep.tolerances["band"]
    assert lo == pytest.approx(2.0 / 3.0 - 0.05, abs=1e-12)
    assert hi == pytest.approx(2.0 / 3.0 + 0.05, abs=1e-12)
    last = rep.observed["rows"][-1]
    assert last["time"] == 500.0
    assert last["replicas"] == 120_000
    ci_lo, ci_hi = last["ratio_ci"]
    assert ci_lo <= hi and ci_hi >= lo
    assert lo <= last["direct_good"] <= hi


def test_c04_walk_occupancy_tracks_inverse_sqrt_pi_t():
    rep = check_crw_density(MASTER_SEED, "full")
    assert rep.passed
    assert rep.replicas == 100_000
    obs = rep.observed
    assert obs["time"] == 1000.0
    ref = obs["reference"]
    assert ref == pytest.approx((math.pi * 1000.0) ** -0.5)
    ci_lo, ci_hi = obs["ci"]
    assert ci_lo <= 1.15 * ref and ci_hi >= 0.85 * ref
    assert 0.8 < obs["ratio_to_reference"] < 1.2


def test_c05_occupation_mass_identity_and_lower_bound():
    rep = check_wt_identity(MASTER_SEED, "full")
    assert rep.passed
    labels = ("sym-unbounded", "frozen-b", "capped-1")
    expected = {f"{lab}@T={t:g}" for lab in labels for t in (10.0, 50.0)}
    assert set(rep.observed) == expected
    for cell in rep.observed.values():
        assert cell["identity_ci_overlap"]
        assert cell["lower_bound_ok"]
        assert cell["lower_bound_margin"] >= -3.0 * cell["lower_bound_stderr"]
        assert 0.0 <= cell["survival_at_T"] <= 1.0


def test_c06_cluster_presence_dominates_survival_squared():
    rep = check_vt_bound(MASTER_SEED, "full")
    assert rep.passed
    assert rep.tolerances["degree"] == 6
    obs = rep.observed
    assert obs["violations"] == 0
    assert max(obs["grid"]) == 20.0
    for t, h, b in zip(obs["grid"], obs["survival"], obs["bound"]):
        assert b == pytest.approx(h * h / (1.0 + 12.0 * t))


def test_c07_extra_opponent_never_lengthens_root_life():
    rep = check_monotonicity(MASTER_SEED, "full")
    assert rep.passed
    assert rep.replicas == 1000
    assert rep.observed["violations"] == 0
    # the comparison is not vacuous: the added particle bites somewhere
    assert rep.observed["strictly_longer"] > 0


def test_c08_destroyer_size_symmetric_in_root_species():
    rep = check_mtp(MASTER_SEED, "full")
    assert rep.passed
    assert rep.replicas == 10_000
    obs = rep.observed
    assert abs(obs["difference"]) <= 3.0 * obs["difference_stderr"]
    assert obs["mean_partner_given_first"] > 0.0
    assert obs["mean_partner_given_second"] > 0.0


def test_c09_engine_agrees_with_independent_references():
    rep = check_engine_vs_reference(MASTER_SEED, "full")
    assert rep.passed
    assert rep.replicas == 120_000  # 2 x 10k terminal laws + 100k two-site
    obs = rep.observed
    assert obs["root_bins"] and all(r["ok"] for r in obs["root_bins"])
    assert obs["cluster_count_bins"] and all(r["ok"] for r in obs["cluster_count_bins"])
    assert len(obs["two_site"]) >= 3 and all(r["ok"] for r in obs["two_site"])
    assert obs["two_site_unknown_outcomes"] == []


def test_c10_figure_panels_and_critical_bracket(tmp_path):
    out = tmp_path / "fig"
    out.mkdir()
    assert cli.main(["plot", "--seed", str(MASTER_SEED), "--out", str(out)]) == 0
    header = b"P6\n2000 2000\n255\n"
    for tag in (".6", ".7", ".8"):
        data = (out / f"spacetime-p{tag}.ppm").read_bytes()
        assert data.startswith(header)
        assert len(data) == len(header) + 2000 * 2000 * 3
        assert (out / f"spacetime-p{tag}.svg").exists()
    report = json.loads((out / "report.json").read_text())
    checks = {c["name"]: c for c in report["checks"]}
    fig = checks["figure-regimes"]
    assert fig["passed"] is True
    rows = fig["observed"]["survival_fraction_at_end"]
    assert [r["p"] for r in rows] == [0.6, 0.7, 0.8]
    fracs = [r["fraction"] for r in rows]
    assert fracs[0] < fracs[1] < fracs[2]

    pc_out = tmp_path / "pc"
    pc_out.mkdir()
    assert cli.main(["pc", "--seed", str(MASTER_SEED), "--out", str(pc_out)]) == 0
    pc_report = json.loads((pc_out / "report.json").read_text())
    bisect = pc_report["extras"]["bisect"]
    assert 0.55 < bisect["lo"] < bisect["hi"] < 0.85
    assert bisect["mean_field_reference"] == pytest.approx(2.0 / 3.0)
    # standalone check agrees with the command path
    rep = check_pc_bracket(MASTER_SEED, "full")
    assert rep.passed
    assert rep.observed["lo"] == bisect["lo"]
    assert rep.observed["hi"] == bisect["hi"]


# ---------------------------------------------------------------------------
# determinism of every command

_C11_CONFIGS = {
    "simulate": "graph=cycle n=24 p=0.5 horizon=4 replicas=60\n",
    "sweep": "graph=cycle n=20 horizon=3 replicas=40 p_values=0.3,0.7\n",
    "plot": ("graph=cycle n=50 p=0.7 lambda_B=0 mode=discrete steps=40\n"
             "p_values=0.55,0.75\n"),
    "pc": ("graph=cycle n=64 mode=discrete steps=20000 lambda_B=0\n"
           "profile=quick p_lo=0.6 p_hi=0.8 tol_p=0.2\n"
           "base_replicas=4 max_replicas=8 t_max=3000\n"),
    "couple": "graph=cycle n=120 profile=quick times=6,12 replicas=800\n",
    "verify": "profile=quick checks=gate-exactness,figure-regimes\n",
}


def test_c11_every_command_reruns_byte_identical(tmp_path, monkeypatch):
    monkeypatch.delenv("DLACS_SEED", raising=False)
    for command, cfg_text in _C11_CONFIGS.items():
        cfg_path = tmp_path / f"{command}.cfg"
        cfg_path.write_text(cfg_text)
        outs = []
        codes = []
        for run_i, jobs in ((1, "1"), (2, "2")):
            out = tmp_path / f"{command}{run_i}"
            out.mkdir()
            codes.append(cli.main([command, "--config", str(cfg_path),
                                   "--seed", "7", "--jobs", jobs,
                                   "--out", str(out)]))
            outs.append(out)
        assert codes[0] == codes[1]
        a, b = outs
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        assert names, command
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes(), \
                f"{command}: {name} differs between reruns"
