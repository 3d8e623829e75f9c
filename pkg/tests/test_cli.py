"""Front-end contract: grammar, seeds, outputs, determinism, schema."""

import json
import os
import subprocess
import sys

import jsonschema
import pytest

from dlacs.cli import ConfigError, main, parse_config, resolve_seed
from dlacs.engine import Species, UNBOUNDED

SCHEMA = json.load(open(os.path.join(os.path.dirname(__file__), "..",
                                     "docs", "report.schema.json")))


def run_main(args):
    return main(args)


def read(path, mode="r"):
    with open(path, mode) as f:
        return f.read()


# ---------------------------------------------------------------------------
# grammar

def test_parse_full_example_line():
    rc = parse_config("graph=cycle n=2000 p=0.7 lambda_B=0 M=inf mode=discrete "
                      "steps=2000 seed=42")
    assert rc.sim.topology.kind == "cycle" and rc.sim.topology.vertex_count == 2000
    assert rc.sim.p == 0.7
    assert rc.sim.lambda_b == 0.0
    assert rc.sim.cap_a == UNBOUNDED
    assert rc.sim.mode == "discrete" and rc.sim.steps == 2000
    assert rc.seed == 42


def test_parse_comments_and_blank_lines():
    rc = parse_config("# header\n\ngraph=torus n=4 d=2  # trailing\np=0.25\n")
    assert rc.sim.topology.vertex_count == 16
    assert rc.sim.p == 0.25


def test_empty_config_rejected():
    with pytest.raises(ConfigError, match="graph required"):
        parse_config("")


def test_range_error_names_key():
    with pytest.raises(ConfigError, match="'p'"):
        parse_config("graph=cycle p=1.5")


def test_unknown_key_rejected_with_line():
    with pytest.raises(ConfigError, match="line 2.*'wat'"):
        parse_config("graph=cycle\nwat=3")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate key 'p'"):
        parse_config("graph=cycle p=0.5\np=0.6")


def test_malformed_token_rejected():
    with pytest.raises(ConfigError, match="key=value"):
        parse_config("graph=cycle oops")


def test_engine_constraints_surface_as_config_errors():
    with pytest.raises(ConfigError, match="lambda_b"):
        parse_config("graph=cycle mode=discrete steps=5")


def test_defaults_documented_values():
    rc = parse_config("graph=cycle")
    assert rc.sim.topology.vertex_count == 100
    assert rc.sim.p == 0.5
    assert rc.sim.lambda_a == 1.0 and rc.sim.lambda_b == 1.0
    assert rc.sim.horizon == 10.0 and rc.sim.mode == "continuous"
    assert rc.p_values == (0.6, 0.7, 0.8)
    assert rc.profile == "full"
    assert (rc.p_lo, rc.p_hi, rc.tol_p) == (0.56, 0.84, 0.03)
    assert rc.t_max is None
    assert parse_config("graph=cycle t_max=4000").t_max == 4000.0


# ---------------------------------------------------------------------------
# seeds

def test_seed_precedence_flag_config_env(monkeypatch):
    monkeypatch.setenv("DLACS_SEED", "33")
    assert resolve_seed(5, 9) == 5
    assert resolve_seed(None, 9) == 9
    assert resolve_seed(None, None) == 33
    monkeypatch.delenv("DLACS_SEED")
    assert resolve_seed(None, None) == 0


def test_bad_env_seed_rejected(monkeypatch):
    monkeypatch.setenv("DLACS_SEED", "nope")
    with pytest.raises(ConfigError):
        resolve_seed(None, None)


# ---------------------------------------------------------------------------
# commands

def test_bad_config_file_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle p=1.5\n")
    rc = run_main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 2
    assert "'p'" in capsys.readouterr().err


def test_missing_config_for_simulate_exits_2(tmp_path, capsys):
    assert run_main(["simulate", "--out", str(tmp_path)]) == 2


def test_simulate_horizon_zero_header_only(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=30 horizon=0\n")
    out = tmp_path / "out"
    assert run_main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert read(out / "curves.csv") == "t,estimate,stderr,n\n"
    doc = json.loads(read(out / "report.json"))
    jsonschema.validate(doc, SCHEMA)


def test_simulate_continuous_outputs(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=40 p=0.6 horizon=3 replicas=24\n")
    out = tmp_path / "out"
    assert run_main(["simulate", "--config", str(cfg), "--seed", "7",
                     "--out", str(out)]) == 0
    lines = read(out / "curves.csv").splitlines()
    assert lines[0] == "t,estimate,stderr,n"
    assert len(lines) > 2
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 1.0
    probs = [float(l.split(",")[1]) for l in lines[1:]]
    assert all(a >= b for a, b in zip(probs, probs[1:])), "survival decreasing"
    doc = json.loads(read(out / "report.json"))
    jsonschema.validate(doc, SCHEMA)
    assert doc["command"] == "simulate" and doc["seed"] == 7


def test_sweep_outputs_and_determinism(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=60 lambda_B=0 mode=discrete steps=60 "
                   "p_values=0.6,0.8 replicas=10\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_main(["sweep", "--config", str(cfg), "--seed", "3",
                         "--out", str(out)]) == 0
        outs.append((read(out / "curves.csv", "rb"), read(out / "report.json", "rb")))
    assert outs[0] == outs[1], "byte-identical rerun"
    doc = json.loads(outs[0][1])
    jsonschema.validate(doc, SCHEMA)
    rows = [l.split(",") for l in outs[0][0].decode().splitlines()[1:]]
    assert [float(r[0]) for r in rows] == [0.6, 0.8]


def test_plot_single_panel_names(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=50 p=0.7 lambda_B=0 mode=discrete steps=40\n")
    out = tmp_path / "out"
    assert run_main(["plot", "--config", str(cfg), "--seed", "2",
                     "--out", str(out)]) == 0
    names = sorted(os.listdir(out))
    assert names == ["curves.csv", "report.json", "spacetime.ppm", "spacetime.svg"]
    ppm = read(out / "spacetime.ppm", "rb")
    assert ppm.startswith(b"P6\n50 40\n255\n")
    doc = json.loads(read(out / "report.json"))
    jsonschema.validate(doc, SCHEMA)
    assert doc["checks"] == []  # single panel: no regime comparison


def test_plot_multi_panel_determinism(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=40 lambda_B=0 mode=discrete steps=30 "
                   "p_values=0.6,0.8\n")
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        run_main(["plot", "--config", str(cfg), "--seed", "4", "--out", str(out)])
        blobs.append({f: read(out / f, "rb") for f in sorted(os.listdir(out))})
    assert blobs[0] == blobs[1]
    assert "spacetime-p.6.ppm" in blobs[0] and "spacetime-p.8.svg" in blobs[0]


def test_pc_reports_bracket(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=48 lambda_B=0 mode=discrete steps=1200 "
                   "p_lo=0.6 p_hi=0.8 tol_p=0.2 base_replicas=4 max_replicas=8\n")
    out = tmp_path / "out"
    rc = run_main(["pc", "--config", str(cfg), "--seed", "11", "--out", str(out)])
    assert rc in (0, 1)  # tiny budgets may leave the window
    doc = json.loads(read(out / "report.json"))
    jsonschema.validate(doc, SCHEMA)
    assert doc["checks"][0]["name"] == "pc-bracket"
    assert doc["extras"]["bisect"]["mean_field_reference"] == pytest.approx(2 / 3)
    lines = read(out / "curves.csv").splitlines()
    assert lines[0] == "t,estimate,stderr,n" and len(lines) >= 2


def test_couple_quick_profile(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=200 profile=quick\n")
    out = tmp_path / "out"
    rc = run_main(["couple", "--config", str(cfg), "--seed", "1", "--out", str(out)])
    assert rc == 0
    doc = json.loads(read(out / "report.json"))
    jsonschema.validate(doc, SCHEMA)
    assert [c["name"] for c in doc["checks"]] == \
        ["goodness-convergence", "two-thirds-ratio"]
    assert all(c["passed"] for c in doc["checks"])
    assert len(doc["extras"]["rows"]) == 2


def test_verify_subset_and_exit_code(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("profile=quick checks=gate-exactness\n")
    out = tmp_path / "out"
    rc = run_main(["verify", "--config", str(cfg), "--seed", "0", "--out", str(out)])
    assert rc == 0
    doc = json.loads(read(out / "report.json"))
    jsonschema.validate(doc, SCHEMA)
    assert [c["name"] for c in doc["checks"]] == ["gate-exactness"]
    assert "wall_time" not in doc["checks"][0]


def test_verify_hidden_oracle_flag(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("profile=quick checks=gate-exactness\n")
    out = tmp_path / "out"
    rc = run_main(["verify", "--config", str(cfg), "--seed", "0", "--out", str(out),
                   "--oracles"])
    assert rc == 0
    doc = json.loads(read(out / "report.json"))
    assert [c["name"] for c in doc["checks"]] == \
        ["gate-exactness", "engine-vs-reference"]


def test_verify_unknown_check_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("checks=not-a-check\n")
    assert run_main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "not-a-check" in capsys.readouterr().err


def test_env_seed_reaches_report(tmp_path, monkeypatch):
    monkeypatch.setenv("DLACS_SEED", "77")
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph=cycle n=30 horizon=0\n")
    out = tmp_path / "out"
    assert run_main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(read(out / "report.json"))["seed"] == 77


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dlacs"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "command" in proc.stderr
