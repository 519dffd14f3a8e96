import json
import math
import os

import numpy as np
import pytest

from subtail.cli import main


def run_cli(tmp_path, sub, cfg=None, extra=()):
    tmp_path.mkdir(parents=True, exist_ok=True)
    argv = [sub, "--out", str(tmp_path / "out")]
    if cfg is not None:
        cpath = tmp_path / "config.json"
        cpath.write_text(json.dumps(cfg))
        argv += ["--config", str(cpath)]
    argv += list(extra)
    return main(argv), tmp_path / "out"


class TestPhiTable:
    def test_caputo_column_is_sqrt(self, tmp_path):
        cfg = {
            "kernel": {"kind": "power", "beta": 0.5, "scale": 1.0 / math.gamma(0.5)},
            "lambdas": {"lo": 1e-2, "hi": 1e2, "n": 9},
        }
        status, out = run_cli(tmp_path, "phi-table", cfg)
        assert status == 0
        lines = (out / "phi_table.csv").read_text().splitlines()
        assert lines[0].startswith("# manifest ")
        assert lines[1] == "lambda,phi,phi_prime,H,b"
        for row in lines[2:]:
            lam, phi, *_ = map(float, row.split(","))
            assert phi == pytest.approx(lam**0.5, rel=1e-8)
        brackets = json.loads((out / "phi_table.json").read_text())
        assert 0.25 <= brackets["achieved_brackets"]["phi"][0]

    def test_schema_violation_exits_2(self, tmp_path):
        status, _ = run_cli(tmp_path, "phi-table", {"kernel": {"kind": "gaussian"}})
        assert status == 2


class TestConditions:
    def test_truncated_report(self, tmp_path):
        cfg = {"kernel": {"kind": "truncated", "beta": 0.5, "delta": 1.0, "scale": 1.0}}
        status, out = run_cli(tmp_path, "conditions", cfg)
        assert status == 0
        rep = json.loads((out / "conditions.json").read_text())
        assert rep["trunc"]["t_f"] == 1.0
        assert rep["spoly"]["t_s"] == pytest.approx(0.5)


class TestTails:
    def test_rows_and_bound_tags(self, tmp_path):
        cfg = {
            "kernel": {"kind": "power", "beta": 0.5, "scale": 1.0 / math.gamma(0.5)},
            "sim": {"cutoff_eps": 1e-3, "n_paths": 5000},
            "grid": {"r": [0.001], "t": [0.5]},
        }
        status, out = run_cli(tmp_path, "tails", cfg, extra=["--seed", "5"])
        assert status == 0
        lines = (out / "tails.csv").read_text().splitlines()
        hdr = lines[1].split(",")
        row = dict(zip(hdr, lines[2].split(",")))
        assert row["bound_tag"] in ("small-t-poly", "large-t-poly")
        assert float(row["upper_p"]) + float(row["lower_p"]) == pytest.approx(1.0, abs=1e-9)


class TestFundsolEstimate:
    def test_fundsol_csv(self, tmp_path):
        cfg = {
            "kernel": {"kind": "power", "beta": 0.5, "scale": 1.0 / math.gamma(0.5)},
            "model": {"family": "J1", "alpha": 1.0, "d": 1.0,
                      "geometry": {"kind": "interval", "length": 1.0}},
            "points": [{"t": 0.05, "x": 0.3, "y": 0.6}, {"t": 0.1, "x": 0.2, "y": 0.25}],
        }
        status, out = run_cli(tmp_path, "fundsol", cfg)
        assert status == 0
        lines = (out / "fundsol.csv").read_text().splitlines()
        assert lines[1] == "t,x,y,p,se,method"
        assert len(lines) == 4
        assert float(lines[2].split(",")[3]) > 0.0

    def test_estimate_json(self, tmp_path):
        cfg = {
            "kernel": {"kind": "truncated", "beta": 0.5, "delta": 1.0, "scale": 1.0},
            "model": {"family": "HK_J", "alpha": 2.0, "d": 1.0, "gamma": 0.0,
                      "lambda": 0.0, "k": 1, "geometry": {"kind": "free"}},
            "case": {"tag": "example1-small", "t": 0.25, "x": 0.0, "y": 0.05},
        }
        status, out = run_cli(tmp_path, "estimate", cfg)
        assert status == 0
        res = json.loads((out / "estimate.json").read_text())
        assert res["value"] == pytest.approx(0.25**-0.25, rel=1e-9)
        assert res["branch"] == "on-diagonal d<alpha"

    def test_estimate_out_of_regime_exits_3(self, tmp_path):
        cfg = {
            "kernel": {"kind": "truncated", "beta": 0.5, "delta": 1.0, "scale": 1.0},
            "model": {"family": "HK_J", "alpha": 2.0, "d": 1.0, "gamma": 0.0,
                      "lambda": 0.0, "k": 1, "geometry": {"kind": "free"}},
            "case": {"tag": "example1-small", "t": 5.0, "x": 0.0, "y": 0.05},
        }
        status, _ = run_cli(tmp_path, "estimate", cfg)
        assert status == 3


class TestCompare:
    def test_dgamma_case_passes(self, tmp_path):
        status, out = run_cli(tmp_path, "compare", {}, extra=["--case", "dgamma-g"])
        assert status == 0
        rep = json.loads((out / "compare_dgamma-g.json").read_text())
        assert rep["passed"] and rep["spread"] <= 8.0
        txt = (out / "compare_dgamma-g.txt").read_text()
        assert "verdict       pass" in txt

    def test_budget_failure_exits_1_with_report(self, tmp_path):
        status, out = run_cli(
            tmp_path, "compare", {}, extra=["--case", "dgamma-g", "--budget", "1.0001"]
        )
        assert status == 1
        rep = json.loads((out / "compare_dgamma-g.json").read_text())
        assert not rep["passed"]


class TestManifest:
    def test_outputs_cite_manifest_hash(self, tmp_path):
        cfg = {"kernel": {"kind": "power", "beta": 0.5, "scale": 1.0}}
        status, out = run_cli(tmp_path, "conditions", cfg)
        assert status == 0
        man = json.loads((out / "manifest.json").read_text())
        rep = json.loads((out / "conditions.json").read_text())
        assert rep["manifest"] == man["hash"]
        assert "conditions.json" in man["outputs"]

    def test_same_manifest_byte_identical(self, tmp_path):
        cfg = {
            "kernel": {"kind": "power", "beta": 0.5, "scale": 1.0},
            "lambdas": {"lo": 0.1, "hi": 10.0, "n": 5},
        }
        s1, out1 = run_cli(tmp_path / "a", "phi-table", cfg)
        s2, out2 = run_cli(tmp_path / "b", "phi-table", cfg)
        assert s1 == s2 == 0
        assert (out1 / "phi_table.csv").read_bytes() == (out2 / "phi_table.csv").read_bytes()
        assert (out1 / "phi_table.json").read_bytes() == (out2 / "phi_table.json").read_bytes()
