"""CLI surface: subcommands, exit codes, artifact determinism."""

from __future__ import annotations

import json
from importlib import resources

import pytest

from sdp.cli import main

FIXTURE = str(resources.files("sdp.fixtures") / "device_finance.json")


def test_validate_ok(capsys):
    assert main(["validate", FIXTURE]) == 0
    assert "config OK" in capsys.readouterr().out


def test_validate_broken_config_exits_one(tmp_path, capsys):
    bad = tmp_path / "cfg.json"
    bad.write_text("{oops")
    assert main(["validate", str(bad)]) == 1


def test_evaluate_prints_components_and_sigma(capsys):
    code = main(["evaluate", FIXTURE, "--weights", "0.40,0.25,0.15,0.15,0.05"])
    out = capsys.readouterr().out
    assert code == 0
    assert "F         = 0.023000" in out
    assert "P         = 0.015500" in out
    assert "R         = 0.031500" in out
    assert "sigma     = 0.023333" in out


def test_evaluate_invalid_weights_exits_one(capsys):
    assert main(["evaluate", FIXTURE, "--weights", "0.9,0.9,0,0,0"]) == 1


def test_optimize_two_category_hand_fixture(tmp_path, capsys):
    cfg = {
        "catalog": {
            "version": "hand-2cat",
            "categories": [
                {"id": "a", "name": "A", "fairness_score": 0.02,
                 "provenance_score": 0.02, "robustness_score": 0.02},
                {"id": "b", "name": "B", "fairness_score": 0.10,
                 "provenance_score": 0.10, "robustness_score": 0.10},
            ],
        },
        "policy": {"alpha": 0.3333333333333333, "beta": 0.3333333333333333,
                   "gamma": 0.3333333333333333},
        "constraints": {"risk_cap": 0.06},
        "return_model": {"kind": "linear", "coefficients": {"a": 0.5, "b": 0.9}},
    }
    path = tmp_path / "hand.json"
    path.write_text(json.dumps(cfg))
    out_path = tmp_path / "opt.json"
    code = main(["optimize", str(path), "--seed", "0", "--out", str(out_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "w[a] = 0.500000" in out
    assert "w[b] = 0.500000" in out
    assert "mu        = 0.700000" in out
    doc = json.loads(out_path.read_text())
    assert doc["weights"] == pytest.approx([0.5, 0.5], abs=1e-9)
    assert "risk_cap" in doc["binding_constraints"]


def test_frontier_seeded_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["frontier", FIXTURE, "--method", "dirichlet", "--count", "80",
                     "--seed", "42", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_report_writes_three_artifacts_and_lints_clean(tmp_path, capsys):
    out_dir = tmp_path / "reports"
    assert main([
        "report", FIXTURE, "--out-dir", str(out_dir), "--seed", "42",
        "--count", "50", "--timestamp", "2026-02-01T00:00:00+00:00",
    ]) == 0
    for name in ("dps.json", "dpc.json", "cpr.json"):
        assert (out_dir / name).exists()
    assert main(["lint", str(out_dir / "dpc.json"), FIXTURE]) == 0


def test_lint_tampered_card_exits_two(tmp_path, capsys):
    out_dir = tmp_path / "reports"
    main(["report", FIXTURE, "--out-dir", str(out_dir), "--seed", "42",
          "--count", "50", "--timestamp", "2026-02-01T00:00:00+00:00"])
    card = json.loads((out_dir / "dpc.json").read_text())
    card["weights"][0]["weight"] += 0.05
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(card))
    assert main(["lint", str(tampered), FIXTURE]) == 2
    out = capsys.readouterr().out
    assert "SELF_CONSISTENCY" in out


def test_lint_unparseable_card_exits_one(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["lint", str(bad), FIXTURE]) == 1


def test_stress_subcommand(capsys):
    code = main(["stress", FIXTURE, "--weights", "0.40,0.25,0.15,0.15,0.05"])
    out = capsys.readouterr().out
    assert code == 0
    assert "overall: pass" in out


def test_shapley_exact_totals_match_efficiency(capsys):
    code = main(["shapley", FIXTURE, "--method", "exact", "--seed", "0",
                 "--weights", "0.40,0.25,0.15,0.15,0.05"])
    out = capsys.readouterr().out
    assert code == 0
    assert "phi[payment_history]" in out
