"""Command-line front end.

Subcommands: criterion, integral, iterate, simulate, thin, sweep, selftest.
Every run reads one JSON config document, writes a JSON summary plus
plottable CSV tables into the output directory, and is byte-reproducible
for a fixed config and seed.  Exit codes: 0 success, 2 config/validation
error, 3 infeasible certificate.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import criteria, operator, simulate, thinning
from .config import ConfigError, parse_delay, parse_offspring, parse_spec, set_by_path
from .errors import DomainError, ScheduleInfeasibleError, ZeroTimeExplosionError
from .offspring import ParetoTail

SCHEMA_VERSION = "1"

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_INFEASIBLE = 3


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path, payload):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _json_safe(x):
    if isinstance(x, float):
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
    return x


def _params(cfg):
    p = cfg.get("params", {})
    if not isinstance(p, dict):
        raise ConfigError("params", "expected an object")
    return p


def _spec_doc(cfg):
    """The process part of the config (everything but run parameters)."""
    return {k: v for k, v in cfg.items() if k not in ("params", "sweep", "schema_version")}


def _criterion_h(cfg):
    """Threshold sequence for the min-sum route.

    Power-tail offspring enter through their witnessed tail exponent, whose
    continuous inverse has the closed doubly-exponential form; verdicts are
    insensitive to the exponent, so this loses no generality.
    """
    off = parse_offspring(cfg.get("offspring", {}))
    p = _params(cfg)
    x0 = float(p.get("x0", 2.0))
    alpha = getattr(off, "alpha", None)
    if alpha is not None and 0 < alpha < 1:
        proxy = ParetoTail(alpha, getattr(off, "c", 1.0))
        return criteria.h_sequence(proxy, x0=x0)
    return criteria.h_sequence(off, x0=x0, n_max=int(p.get("n_max", 64)))


def cmd_criterion(cfg, out):
    sigma = parse_delay(cfg.get("sigma", {}))
    verdict = criteria.minsum_verdict(sigma, _criterion_h(cfg))
    rec = verdict.to_record()
    rec["tail_bound"] = _json_safe(verdict.tail_bound)
    _write_json(out / "criterion.json", {"command": "criterion", **rec})
    _write_csv(
        out / "criterion.csv",
        ["n", "partial_sum"],
        list(enumerate(verdict.partial_sums.tolist(), start=1)),
    )
    return _EXIT_OK


def cmd_integral(cfg, out):
    sigma = parse_delay(cfg.get("sigma", {}))
    p = _params(cfg)
    verdict = criteria.integral_verdict(
        sigma, C=float(p.get("C", 1.0)), eps=float(p.get("eps", 0.1))
    )
    rec = verdict.to_record()
    rec["tail_bound"] = _json_safe(verdict.tail_bound)
    _write_json(out / "integral.json", {"command": "integral", **rec})
    _write_csv(
        out / "integral.csv",
        ["octave", "partial_sum"],
        list(enumerate(verdict.partial_sums.tolist(), start=1)),
    )
    return _EXIT_OK


def cmd_iterate(cfg, out):
    spec = parse_spec(_spec_doc(cfg))
    p = _params(cfg)
    phi, k_stop, residual, hint = operator.iterate_phi(
        spec,
        t_max=float(p.get("t_max", 4.0)),
        n=int(p.get("grid_n", 4096)),
        k_max=int(p.get("k_max", 200)),
        tol=float(p.get("tol", 1e-10)),
    )
    cdf = operator.explosion_time_cdf(phi)
    _write_csv(
        out / "iterate.csv",
        ["t", "phi", "explosion_cdf"],
        list(zip(phi.times.tolist(), phi.values.tolist(), cdf.values.tolist())),
    )
    _write_json(
        out / "iterate.json",
        {
            "command": "iterate",
            "k_stop": k_stop,
            "residual": residual,
            "phi_at_tmax": float(phi.values[-1]),
            "hint": hint,
        },
    )
    return _EXIT_OK


def cmd_simulate(cfg, out, seed_override=None):
    spec = parse_spec(_spec_doc(cfg))
    p = _params(cfg)
    seed = int(seed_override if seed_override is not None else p.get("seed", 0))
    t_grid = [float(t) for t in p.get("t_grid", [0.5, 1.0, 2.0])]
    cap = int(p.get("cap", 10**4))
    trials = int(p.get("trials", 1000))
    est, lo, hi, hits = simulate.estimate_cdf(spec, t_grid, cap, trials, seed)
    _write_csv(
        out / "simulate.csv",
        ["t", "estimate", "ci_low", "ci_high"],
        list(zip(t_grid, est.tolist(), lo.tolist(), hi.tolist())),
    )
    _write_json(
        out / "simulate.json",
        {
            "command": "simulate",
            "cap": cap,
            "trials": trials,
            "seed": seed,
            "hit_counts": [int(c) for c in hits.sum(axis=0)],
        },
    )
    if p.get("per_trial"):
        lines = [
            json.dumps({"trial": i, "hits": [bool(b) for b in row]}, sort_keys=True)
            for i, row in enumerate(hits.tolist())
        ]
        (out / "simulate_trials.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return _EXIT_OK


def cmd_thin(cfg, out):
    p = _params(cfg)
    sigma = parse_delay(cfg.get("sigma", {}))
    off = parse_offspring(cfg.get("offspring", {}))
    C = float(p.get("C", 1.0))
    n_max = int(p.get("n_max", 80))
    mode = p.get("mode", "plain")
    try:
        if mode == "forward_incubation":
            inc = parse_delay(cfg.get("incubation", {}), "incubation")
            sched = thinning.forward_incubation_schedule(
                sigma, inc, off, a=float(p.get("a", 0.5)), C=C, n_max=n_max
            )
        elif mode == "plain":
            sched = thinning.build_schedule(sigma, off, C=C, n_max=n_max)
        else:
            raise ConfigError("params.mode", f"unknown thinning mode {mode!r}")
    except ScheduleInfeasibleError as exc:
        _write_json(
            out / "thin.json",
            {"command": "thin", "feasible": False, "reason": str(exc)},
        )
        return _EXIT_INFEASIBLE
    bound = thinning.survival_bound(sched)
    ns = np.arange(1, len(sched.t_seq) + 1)
    _write_csv(
        out / "thin.csv",
        ["n", "t_n", "log_p_n"],
        list(zip(ns.tolist(), sched.t_seq.tolist(), sched.log_p_seq.tolist())),
    )
    _write_json(
        out / "thin.json",
        {
            "command": "thin",
            "feasible": True,
            "survival_bound": bound,
            "total_T": sched.total_T,
            "C": sched.C,
            "alpha": sched.alpha,
            "beta": sched.beta,
            "mode": sched.mode,
        },
    )
    return _EXIT_OK


def cmd_sweep(cfg, out):
    sweep = cfg.get("sweep")
    if not isinstance(sweep, dict) or "parameter" not in sweep or "values" not in sweep:
        raise ConfigError("sweep", "needs 'parameter' (dotted path) and 'values'")
    parameter = str(sweep["parameter"])
    values = sweep["values"]
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep.values", "expected a nonempty list")
    p = _params(cfg)
    rows = []
    for v in values:
        doc = copy.deepcopy(cfg)
        set_by_path(doc, parameter, v)
        sigma = parse_delay(doc.get("sigma", {}))
        minsum = criteria.minsum_verdict(sigma, _criterion_h(doc))
        integral = criteria.integral_verdict(
            sigma, C=float(p.get("C", 1.0)), eps=float(p.get("eps", 0.1))
        )
        rows.append((v, minsum.verdict, integral.verdict))
    _write_csv(out / "sweep.csv", ["value", "minsum_verdict", "integral_verdict"], rows)
    _write_json(
        out / "sweep.json",
        {
            "command": "sweep",
            "parameter": parameter,
            "cells": [
                {"value": v, "minsum": m, "integral": i} for v, m, i in rows
            ],
        },
    )
    return _EXIT_OK


def cmd_selftest(cfg, out):
    from .selftest import run_selftest

    results = run_selftest()
    rows = [(name, "pass" if ok else "FAIL", note) for name, ok, note in results]
    for name, status, note in rows:
        print(f"[{status}] {name}: {note}")
    _write_csv(out / "selftest.csv", ["fixture", "status", "note"], rows)
    ok_all = all(ok for _, ok, _ in results)
    _write_json(out / "selftest.json", {"command": "selftest", "passed": ok_all})
    return _EXIT_OK if ok_all else 1


_COMMANDS = {
    "criterion": cmd_criterion,
    "integral": cmd_integral,
    "iterate": cmd_iterate,
    "simulate": cmd_simulate,
    "thin": cmd_thin,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cmjbp",
        description="Explosion criteria, certificates and simulation for"
        " heavy-tailed branching processes",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=False, help="path to the JSON config document")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument(
        "--threads", type=int, default=1,
        help="worker hint (runs are sequential and deterministic either way)",
    )
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            print(f"config: file not found: {args.config}", file=sys.stderr)
            return _EXIT_CONFIG
        except json.JSONDecodeError as exc:
            print(f"config: line {exc.lineno}: {exc.msg}", file=sys.stderr)
            return _EXIT_CONFIG
    if not isinstance(cfg, dict):
        print("config: expected a JSON object", file=sys.stderr)
        return _EXIT_CONFIG
    if args.command != "selftest" and not cfg:
        print("config: an empty config cannot describe a run", file=sys.stderr)
        return _EXIT_CONFIG

    try:
        if args.command == "simulate":
            return cmd_simulate(cfg, out, seed_override=args.seed)
        return _COMMANDS[args.command](cfg, out)
    except (ConfigError, DomainError, ZeroTimeExplosionError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return _EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
