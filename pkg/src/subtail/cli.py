"""Batch command-line front end.

Subcommands:

* ``phi-table``  dump (lambda, phi, phi', H, b) rows as CSV, plus the
                 achieved comparability brackets of the moment identities
* ``conditions`` certify the structural conditions of a kernel
* ``tails``      MC tail estimates with the matching structural bound forms
* ``fundsol``    (t, x, y, p, se, method) rows for the fundamental solution
* ``estimate``   evaluate one theorem branch from a JSON request
* ``compare``    regime grid -> (MC | quadrature) -> theorem form ->
                 two-sided ratio report (exit 1 on budget failure)
* ``boundary``   the boundary-decay sweep u(t,x)/delta^{alpha gamma}
* ``report``     the full golden suite as one pass/fail matrix

Exit codes: 0 success; 1 budget failure (the ratio report is still
written); 2 config schema violation (with a JSON-pointer path); 3 empty or
violated regime.

Every run resolves its parameters into a manifest whose SHA-256 hash is
cited by each output file; wall-clock time lives only in the manifest run
log, so outputs are byte-identical across reruns.  Files are written
atomically (temp + rename).  All randomness flows from the manifest seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from .bernstein import BernsteinTable
from .comparability import exp_constant_fit, regime_grid, two_sided_check
from .errors import RangeError, RegimeError
from .estimates import CASE_TAGS, EstimateCase, I_gamma_quadrature, J_gamma, closed_I_gamma, theorem_estimate
from .fundamental import SolutionRequest, p_mc, p_quadrature, solve_u
from .golden import DGAMMA_CASES, GOLDEN_SEED, run_all
from .heat_kernel import Geometry, HKModel, model_from_config
from .kernels import check_conditions, kernel_from_config
from .simulate import SimConfig, lower_tail_prob, upper_tail_prob
from .tail_bounds import upper_bound_form

_KERNEL_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["power", "truncated", "subexp", "distributed", "tabulated"]},
        "beta": {"type": "number"},
        "scale": {"type": "number"},
        "delta": {"type": "number"},
        "theta": {"type": "number"},
        "c0": {"type": "number"},
        "smallBeta": {"type": "number"},
        "weights": {"type": "array"},
        "knots": {"type": "array"},
        "tail": {"enum": ["power", "zero"]},
    },
}

_MODEL_SCHEMA = {
    "type": "object",
    "required": ["family", "alpha", "d"],
    "properties": {
        "family": {
            "enum": ["J1", "J2", "J3", "J4", "D1", "D2", "D3", "HK_J", "HK_D", "HK_M"]
        },
        "alpha": {"type": "number"},
        "d": {"type": "number"},
        "gamma": {"type": "number"},
        "lambda": {"type": "number"},
        "k": {"enum": [1, 2]},
        "psi_alpha": {"type": "number"},
        "exp_c": {"type": "number"},
        "geometry": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["interval", "half-line", "exterior", "free"]},
                "length": {"type": "number"},
            },
        },
    },
}

_SIM_SCHEMA = {
    "type": "object",
    "properties": {
        "cutoff_eps": {"type": "number"},
        "n_paths": {"type": "integer"},
        "seed": {"type": "integer"},
        "compensate": {"type": "boolean"},
        "refine_steps": {"type": "integer"},
    },
}

SCHEMAS = {
    "phi-table": {
        "type": "object",
        "required": ["kernel"],
        "properties": {
            "kernel": _KERNEL_SCHEMA,
            "lambdas": {
                "type": "object",
                "properties": {
                    "lo": {"type": "number"},
                    "hi": {"type": "number"},
                    "n": {"type": "integer"},
                },
            },
        },
    },
    "conditions": {"type": "object", "required": ["kernel"], "properties": {"kernel": _KERNEL_SCHEMA}},
    "tails": {
        "type": "object",
        "required": ["kernel", "grid"],
        "properties": {
            "kernel": _KERNEL_SCHEMA,
            "sim": _SIM_SCHEMA,
            "grid": {
                "type": "object",
                "required": ["r", "t"],
                "properties": {"r": {"type": "array"}, "t": {"type": "array"}},
            },
        },
    },
    "fundsol": {
        "type": "object",
        "required": ["kernel", "model", "points"],
        "properties": {
            "kernel": _KERNEL_SCHEMA,
            "model": _MODEL_SCHEMA,
            "sim": _SIM_SCHEMA,
            "method": {"enum": ["quadrature", "mc"]},
            "points": {"type": "array"},
        },
    },
    "estimate": {
        "type": "object",
        "required": ["kernel", "model", "case"],
        "properties": {
            "kernel": _KERNEL_SCHEMA,
            "model": _MODEL_SCHEMA,
            "case": {
                "type": "object",
                "required": ["tag", "t", "x", "y"],
                "properties": {
                    "tag": {"enum": list(CASE_TAGS)},
                    "t": {"type": "number"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                    "horizon_T": {"type": "number"},
                    "margin": {"type": "number"},
                },
            },
        },
    },
    "compare": {
        "type": "object",
        "properties": {"case": {"type": "string"}, "budget": {"type": "number"}},
    },
    "boundary": {
        "type": "object",
        "properties": {
            "t_values": {"type": "array"},
            "deltas": {"type": "array"},
            "band_budget": {"type": "number"},
        },
    },
    "report": {"type": "object", "properties": {}},
}


def _np_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError("not JSON serializable: %r" % (o,))


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True,
                      default=_np_default)


def _manifest(subcommand, resolved, seed, config_path):
    payload = {
        "subcommand": subcommand,
        "resolved": resolved,
        "seed": seed,
        "version": __version__,
    }
    h = hashlib.sha256(_canonical(payload).encode()).hexdigest()[:16]
    return {
        "hash": h,
        "config_path": config_path,
        **payload,
    }


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path, payload, manifest):
    body = dict(payload)
    body["manifest"] = manifest["hash"]
    _atomic_write(path, json.dumps(body, sort_keys=True, indent=1, default=_np_default) + "\n")


def _write_csv(path, header, rows, manifest):
    lines = ["# manifest %s" % manifest["hash"], ",".join(header)]
    for row in rows:
        lines.append(",".join("%.17g" % v if isinstance(v, float) else str(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _strip_seconds(obj):
    if isinstance(obj, dict):
        return {k: _strip_seconds(v) for k, v in obj.items() if k != "seconds"}
    if isinstance(obj, list):
        return [_strip_seconds(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_phi_table(cfg, out, seed, manifest, args):
    kern = kernel_from_config(cfg["kernel"])
    lam_cfg = cfg.get("lambdas", {})
    lams = np.geomspace(lam_cfg.get("lo", 1e-3), lam_cfg.get("hi", 1e3), lam_cfg.get("n", 97))
    tab = BernsteinTable(kern)
    rows = []
    for lam in lams:
        rows.append(
            (
                float(lam),
                tab.phi(lam),
                tab.phi_prime(lam),
                tab.H(lam),
                tab.b_fun(lam),
            )
        )
    _write_csv(os.path.join(out, "phi_table.csv"), ["lambda", "phi", "phi_prime", "H", "b"], rows, manifest)
    _write_json(
        os.path.join(out, "phi_table.json"),
        {"achieved_brackets": tab.phiHw_brackets(), "n_rows": len(rows)},
        manifest,
    )
    return 0


def _cmd_conditions(cfg, out, seed, manifest, args):
    kern = kernel_from_config(cfg["kernel"])
    rep = check_conditions(kern)
    payload = {
        "ker_ok": rep.ker_ok,
        "ker_integral": rep.ker_integral,
        "spoly": rep.spoly,
        "lpoly": rep.lpoly,
        "sub": rep.sub,
        "trunc": rep.trunc,
        "diagnostics": rep.diagnostics,
        "evidence": rep.evidence,
    }
    _write_json(os.path.join(out, "conditions.json"), payload, manifest)
    return 0


def _cmd_tails(cfg, out, seed, manifest, args):
    kern = kernel_from_config(cfg["kernel"])
    sim_cfg = dict(cfg.get("sim", {}))
    sim_cfg.setdefault("cutoff_eps", 1e-4)
    sim_cfg.setdefault("n_paths", 100_000)
    sim_cfg["seed"] = seed
    if args.paths:
        sim_cfg["n_paths"] = args.paths
    sim = SimConfig(**sim_cfg)
    tab = BernsteinTable(kern, points_per_decade=24)
    conds = check_conditions(kern)
    rows = []
    for r in cfg["grid"]["r"]:
        for t in cfg["grid"]["t"]:
            up = upper_tail_prob(kern, sim, r, t)
            lo = lower_tail_prob(kern, sim, r, t)
            form = upper_bound_form(kern, tab, r, t, conditions=conds)
            rows.append(
                (
                    float(r),
                    float(t),
                    up.p_hat,
                    up.se,
                    lo.p_hat,
                    lo.se,
                    form["tag"],
                    float(form.get("value", math.nan)),
                )
            )
    _write_csv(
        os.path.join(out, "tails.csv"),
        ["r", "t", "upper_p", "upper_se", "lower_p", "lower_se", "bound_tag", "bound_value"],
        rows,
        manifest,
    )
    return 0


def _cmd_fundsol(cfg, out, seed, manifest, args):
    kern = kernel_from_config(cfg["kernel"])
    model, geometry = model_from_config(cfg["model"])
    tab = BernsteinTable(kern, points_per_decade=24)
    method = cfg.get("method", "quadrature")
    sim = None
    if "sim" in cfg or method == "mc":
        sim_cfg = dict(cfg.get("sim", {}))
        sim_cfg.setdefault("cutoff_eps", 1e-4)
        sim_cfg.setdefault("n_paths", 50_000)
        sim_cfg["seed"] = seed
        if args.paths:
            sim_cfg["n_paths"] = args.paths
        sim = SimConfig(**sim_cfg)
    rows = []
    for pnt in cfg["points"]:
        req = SolutionRequest(
            kern, tab, model, geometry, pnt["t"], pnt["x"], pnt["y"], method=method, sim=sim
        )
        res = p_mc(req) if method == "mc" else p_quadrature(req)
        rows.append((pnt["t"], pnt["x"], pnt["y"], res.value, res.se, res.method))
    _write_csv(
        os.path.join(out, "fundsol.csv"), ["t", "x", "y", "p", "se", "method"], rows, manifest
    )
    return 0


def _cmd_estimate(cfg, out, seed, manifest, args):
    kern = kernel_from_config(cfg["kernel"])
    model, geometry = model_from_config(cfg["model"])
    tab = BernsteinTable(kern, points_per_decade=24)
    c = cfg["case"]
    case = EstimateCase(
        c["tag"],
        kern,
        tab,
        model,
        geometry,
        c["t"],
        c["x"],
        c["y"],
        horizon_T=c.get("horizon_T", 1.0),
        margin=c.get("margin", 2.0),
        conditions=check_conditions(kern),
    )
    res = theorem_estimate(case)
    payload = {
        "value": res["value"],
        "lower": res["lower"],
        "upper": res["upper"],
        "branch": res["branch"],
        "regime": {"tag": c["tag"], "margin": c.get("margin", 2.0)},
    }
    _write_json(os.path.join(out, "estimate.json"), payload, manifest)
    return 0


def _compare_case(tag, budget, seed, paths):
    from .kernels import caputo

    kern = caputo(0.5)
    tab = BernsteinTable(kern, points_per_decade=24)
    if tag.startswith("dgamma-"):
        case = tag.split("-", 1)[1]
        alpha, d, gamma = DGAMMA_CASES[case]
        m = HKModel("HK_J", alpha=alpha, d=d, gamma=gamma, lam=0.0, k=1)
        g = Geometry("interval", 1.0)
        obs, pred, coords = [], [], []
        for t in (0.003, 0.02, 0.12, 0.7, 5.0):
            for dx in (0.012, 0.02, 0.045, 0.08, 0.15, 0.25, 0.45):
                for rho in (0.001, 0.004, 0.012, 0.03, 0.09, 0.2, 0.4):
                    y = dx + rho
                    if y >= 1.0 - 1e-9 or rho**alpha * tab.phi(1.0 / t) > 1.0 / (8.0 * math.e**2):
                        continue
                    closed, _, _ = closed_I_gamma(m, g, tab, t, dx, y)
                    quadv = I_gamma_quadrature(m, g, tab, 1, t, dx, y)
                    if quadv > 0.0 and closed > 0.0:
                        obs.append(quadv)
                        pred.append(closed)
                        coords.append((t, dx, y))
        rep = two_sided_check(np.array(obs), np.array(pred), budget or 8.0, coords=coords, case=tag)
        return rep
    m = HKModel("J1", alpha=1.0, d=1.0)
    g = Geometry("interval", 1.0)
    if tag == "mainsmall-i":
        margin = 2.0
    elif tag == "mainsmall-ii-a":
        margin = 40.0
    else:
        raise RegimeError("compare supports mainsmall-i, mainsmall-ii-a and dgamma-<case>")
    pts = regime_grid(tag, kern, tab, m, g, resolution=8, margin=margin, t_window=(1e-3, 0.1))
    obs, pred = [], []
    for (t, x, y) in pts:
        obs.append(p_quadrature(SolutionRequest(kern, tab, m, g, t, x, y)).value)
        if tag == "mainsmall-i":
            pred.append(J_gamma(m, g, tab, kern, m.k, t, x, y))
        else:
            pred.append(
                theorem_estimate(EstimateCase(tag, kern, tab, m, g, t, x, y, margin=margin))["value"]
            )
    return two_sided_check(np.array(obs), np.array(pred), budget or 50.0, case=tag)


def _cmd_compare(cfg, out, seed, manifest, args):
    tag = args.case or cfg.get("case")
    if not tag:
        raise RegimeError("compare needs --case or a 'case' config entry")
    budget = args.budget or cfg.get("budget")
    rep = _compare_case(tag, budget, seed, args.paths)
    payload = rep.to_dict()
    _write_json(os.path.join(out, "compare_%s.json" % tag), payload, manifest)
    text = [
        "case          %s" % rep.case,
        "points        %d" % rep.n_points,
        "ratio range   [%.6g, %.6g]" % (rep.ratio_min, rep.ratio_max),
        "spread        %.6g (budget %.6g)" % (rep.spread, rep.budget),
        "verdict       %s" % ("pass" if rep.passed else "FAIL"),
    ]
    _atomic_write(os.path.join(out, "compare_%s.txt" % tag), "\n".join(text) + "\n")
    if not rep.passed:
        print("budget failure: spread %.4g > %.4g" % (rep.spread, rep.budget), file=sys.stderr)
        return 1
    return 0


def _cmd_boundary(cfg, out, seed, manifest, args):
    from .kernels import caputo

    kern = caputo(0.5)
    tab = BernsteinTable(kern, points_per_decade=24)
    m = HKModel("J1", alpha=1.0, d=1.0)
    g = Geometry("interval", 1.0)
    t_values = cfg.get("t_values", [0.05, 0.2])
    deltas = cfg.get("deltas", [1e-4, 1e-3, 1e-2, 1e-1])
    budget = cfg.get("band_budget", 4.0)
    rows = []
    bands = {}
    ok = True
    for t in t_values:
        ratios = []
        for dlt in deltas:
            u = solve_u(SolutionRequest(kern, tab, m, g, t, dlt, f=lambda y: 1.0)).value
            ratio = u / dlt ** (m.alpha * m.gamma)
            ratios.append(ratio)
            rows.append((float(t), float(dlt), u, ratio))
        band = max(ratios) / min(ratios)
        bands["t=%g" % t] = band
        ok = ok and band <= budget
    _write_csv(
        os.path.join(out, "boundary.csv"), ["t", "delta", "u", "u_over_delta_ag"], rows, manifest
    )
    _write_json(
        os.path.join(out, "boundary.json"),
        {"bands": bands, "budget": budget, "passed": ok},
        manifest,
    )
    return 0 if ok else 1


def _cmd_report(cfg, out, seed, manifest, args):
    results = run_all(seed=seed)
    payload = _strip_seconds(results)
    _write_json(os.path.join(out, "report.json"), payload, manifest)
    lines = ["criterion                                      verdict", "-" * 55]
    for crit in payload["criteria"]:
        lines.append("%-46s %s" % (crit["name"], "pass" if crit["passed"] else "FAIL"))
    lines.append("-" * 55)
    lines.append("overall: %s" % ("pass" if payload["passed"] else "FAIL"))
    _atomic_write(os.path.join(out, "report.txt"), "\n".join(lines) + "\n")
    timing = {c["name"]: c["seconds"] for c in results["criteria"]}
    _write_json(os.path.join(out, "report_timing.json"), {"seconds": timing}, manifest)
    return 0 if payload["passed"] else 1


_COMMANDS = {
    "phi-table": _cmd_phi_table,
    "conditions": _cmd_conditions,
    "tails": _cmd_tails,
    "fundsol": _cmd_fundsol,
    "estimate": _cmd_estimate,
    "compare": _cmd_compare,
    "boundary": _cmd_boundary,
    "report": _cmd_report,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="subtail", description="subordinator tail and fundamental-solution verification"
    )
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--case", default=None, help="estimate/compare case tag")
    parser.add_argument("--paths", type=int, default=None, help="override MC path count")
    parser.add_argument("--budget", type=float, default=None, help="override spread budget")
    args = parser.parse_args(argv)

    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    schema = SCHEMAS[args.subcommand]
    validator = Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: e.json_path)
    if errors:
        for err in errors:
            print("config schema violation at %s: %s" % (err.json_path, err.message), file=sys.stderr)
        return 2

    seed = args.seed if args.seed is not None else cfg.get("seed", GOLDEN_SEED)
    os.makedirs(args.out, exist_ok=True)
    resolved = {"config": cfg, "case": args.case, "paths": args.paths, "budget": args.budget}
    manifest = _manifest(args.subcommand, resolved, seed, args.config)

    t0 = time.time()
    try:
        status = _COMMANDS[args.subcommand](cfg, args.out, seed, manifest, args)
    except RegimeError as exc:
        print("regime error: %s" % exc, file=sys.stderr)
        return 3
    except RangeError as exc:
        print("range error: %s" % exc, file=sys.stderr)
        return 3
    manifest["wall_clock_s"] = round(time.time() - t0, 3)
    manifest["outputs"] = sorted(
        f for f in os.listdir(args.out) if not f.endswith(".tmp")
    )
    _atomic_write(
        os.path.join(args.out, "manifest.json"),
        json.dumps(manifest, sort_keys=True, indent=1, default=_np_default) + "\n",
    )
    return status


if __name__ == "__main__":
    sys.exit(main())
