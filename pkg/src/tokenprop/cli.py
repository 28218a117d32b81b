"""Command-line interface: gen, solve, propagate, check-compat, verify.

Exit codes: 0 on success or Sat, 1 on GaveUp / Contradiction / violated checks, 2 on
input errors. All output is JSON on stdout.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import tokens as tk
from .classic_sp import SpConfig, run_sp, sp_init
from .csp import FactorGraph
from .equivalence import THEOREMS, SuiteConfig, compatibility_report, run_suite
from .errors import TokenPropError
from .generators import gen_random_ksat, gen_random_qcol
from .instance_io import dumps_instance, load_instance, messages_to_records, dist_to_dict, write_dimacs_cnf, write_edge_list
from .mrf import BpConfig, ForneyGraph, bp_init, bp_step, sdbp_init, sdbp_step
from .ptp import ObedienceConditional, PtpConfig, ksat_gamma_conditional, ptp_init, ptp_step
from .solver import SAT, SolveConfig, solve

ALG_NAMES = {"sp": "SPgamma", "spstar": "SPstar", "ptp": "PTP", "wptp": "WPTP", "bp": "BP", "sdbp": "SDBP"}


def _emit(obj):
    json.dump(obj, sys.stdout, indent=1, default=_default)
    sys.stdout.write("\n")


def _default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def cmd_gen(args):
    if args.kind == "ksat":
        planted = True if args.planted else None
        g = gen_random_ksat(args.n, args.m, args.k, seed=args.seed, planted=planted)
    else:
        g = gen_random_qcol(args.n, args.m, args.q, seed=args.seed)
    fmt = args.format
    if fmt == "dimacs":
        text = write_dimacs_cnf(g)
    elif fmt == "edges":
        text = write_edge_list(g)
    else:
        text = dumps_instance(g) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
        _emit({"written": args.output, "n_vars": g.n_vars, "n_constraints": g.n_constraints, "meta": g.meta})
    else:
        sys.stdout.write(text)
    return 0


def _omega(args, q):
    if q == 2 and args.gamma is not None:
        return ksat_gamma_conditional(args.gamma)
    return ObedienceConditional.indicator(q)


def cmd_solve(args):
    g = load_instance(args.instance, q=args.q, check_degree=False)
    cfg = SolveConfig(
        algorithm=ALG_NAMES[args.alg],
        gamma=1.0 if args.gamma is None else args.gamma,
        max_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
        decimation_threshold=args.decimation_threshold,
        stop=args.stop,
        sweeps=args.sweeps,
    )
    res = solve(g, cfg)
    _emit(
        {
            "status": res.status,
            "assignment": res.assignment,
            "iterations": res.iterations,
            "message": res.message,
            "trace": [
                {"variable": s.variable, "token": tk.to_str(s.token), "bias": s.bias, "iterations": s.iterations, "forced": s.forced}
                for s in res.trace
            ],
        }
    )
    return 0 if res.status == SAT else 1


def cmd_propagate(args):
    g = load_instance(args.instance, q=args.q, check_degree=False)
    out = []
    alg = args.alg
    if alg in ("sp", "spstar"):
        cfg = SpConfig(gamma=1.0 if args.gamma is None else args.gamma, star=alg == "spstar", seed=args.seed)
        state = sp_init(g, cfg)
        for _ in range(args.iters):
            run_sp(g, SpConfig(cfg.gamma, cfg.star, 1, 0.0, cfg.seed), state)
            out.append(
                {
                    "iteration": state.iteration,
                    "right": [{"edge": "c->v", "v": v, "c": c, "eta": state.eta[(v, c)]} for v, c in g.edges],
                    "summaries": {str(v): {"zeta1": s.zeta1, "zeta0": s.zeta0, "zeta_star": s.zeta_star} for v, s in state.summaries.items()},
                }
            )
    elif alg in ("ptp", "wptp"):
        cfg = PtpConfig(mode="plain" if alg == "ptp" else "weighted", omega=_omega(args, g.q), seed=args.seed)
        state = ptp_init(g, cfg)
        for _ in range(args.iters):
            ptp_step(state, cfg)
            out.append(_frame(state.iteration, state.left, state.right, state.summaries))
    elif alg == "bp":
        fg = ForneyGraph(g, _omega(args, g.q))
        cfg = BpConfig(seed=args.seed)
        state = bp_init(fg, cfg)
        for _ in range(args.iters):
            bp_step(state, cfg)
            out.append(_frame(state.iteration, state.left, state.right, state.summaries))
    else:
        state = sdbp_init(ForneyGraph(g, _omega(args, g.q)), args.seed)
        for _ in range(args.iters):
            sdbp_step(state)
            out.append(_frame(state.iteration, state.left, state.rho_star, state.summaries))
    _emit({"algorithm": alg, "iterations": out})
    return 0


def _frame(it, left, right, summaries):
    return {
        "iteration": it,
        "left": messages_to_records(left, "v->c"),
        "right": messages_to_records(right, "c->v"),
        "summaries": {str(v): dist_to_dict(s) for v, s in summaries.items()},
    }


def cmd_check_compat(args):
    g = load_instance(args.instance, q=args.q, check_degree=not args.no_degree_check)
    rep = compatibility_report(g)
    for r in rep:
        w = r["witness"]
        if w is not None:
            w["t_v"] = tk.to_str(w["t_v"])
            w["required"] = tk.to_str(w["required"])
            w["forced"] = tk.to_str(w["forced"])
            w["rect"] = {str(u): tk.to_str(t) for u, t in w["rect"].items()}
    _emit({"all_compatible": all(r["compatible"] for r in rep), "constraints": rep})
    return 0


def cmd_verify(args):
    theorems = [args.theorem] if args.theorem else list(THEOREMS)
    cfg = SuiteConfig(n_instances=args.instances, iters=args.iters, seed=args.seed)
    reports = run_suite(theorems, cfg, workers=args.workers)
    ok = all(r.as_expected for r in reports)
    _emit(
        {
            "all_as_expected": ok,
            "summary": {
                t: {
                    "runs": sum(r.theorem == t for r in reports),
                    "as_expected": sum(r.theorem == t and r.as_expected for r in reports),
                }
                for t in theorems
            },
            "reports": [r.to_dict() for r in reports],
        }
    )
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tokenprop", description="Token-passing message algorithms for CSPs.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("kind", choices=["ksat", "qcol"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--q", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--planted", action="store_true")
    g.add_argument("--format", choices=["json", "dimacs", "edges"], default="json")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    def common(sp):
        sp.add_argument("instance", help=".cnf (DIMACS), .json (native) or an edge list")
        sp.add_argument("--q", type=int, default=3, help="alphabet size for edge lists")
        sp.add_argument("--alg", choices=sorted(ALG_NAMES), default="sp")
        sp.add_argument("--gamma", type=float, default=None)
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="decimation solver")
    common(s)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--decimation-threshold", type=float, default=0.0)
    s.add_argument("--stop", choices=["sweeps", "converge"], default="sweeps")
    s.add_argument("--sweeps", type=int, default=1)
    s.set_defaults(func=cmd_solve)

    pr = sub.add_parser("propagate", help="dump per-iteration messages and summaries")
    common(pr)
    pr.add_argument("--iters", type=int, default=10)
    pr.set_defaults(func=cmd_propagate)

    c = sub.add_parser("check-compat", help="local-compatibility report per constraint")
    c.add_argument("instance")
    c.add_argument("--q", type=int, default=3)
    c.add_argument("--no-degree-check", action="store_true")
    c.set_defaults(func=cmd_check_compat)

    v = sub.add_parser("verify", help="run the equivalence suite")
    v.add_argument("--theorem", choices=THEOREMS)
    v.add_argument("--instances", type=int, default=25)
    v.add_argument("--iters", type=int, default=30)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=1)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        return args.func(args)
    except (TokenPropError, OSError, ValueError, KeyError) as e:
        json.dump({"error": type(e).__name__, "message": str(e)}, sys.stderr)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
