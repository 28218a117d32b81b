"""Run the paired-iteration equivalence suite and print a per-theorem table.

Usage: python3 scripts/run_equivalence_suite.py [--instances 25] [--iters 30] [--json out.json]
"""
import argparse
import json
import time

from tokenprop.equivalence import THEOREMS, SuiteConfig, run_suite


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=3.5)
    p.add_argument("--theorem", choices=THEOREMS, action="append")
    p.add_argument("--json", help="write every report to this file")
    args = p.parse_args()

    cfg = SuiteConfig(n_instances=args.instances, iters=args.iters, seed=args.seed, alpha=args.alpha)
    theorems = args.theorem or list(THEOREMS)
    t0 = time.perf_counter()
    reports = run_suite(theorems, cfg)
    dt = time.perf_counter() - t0

    print(f"{'theorem':<18} {'pos':>4} {'neg':>4} {'as expected':>12} {'max div (pos)':>14} {'stopped':>8}")
    for t in theorems:
        rs = [r for r in reports if r.theorem == t]
        pos = [r for r in rs if r.expectation == "hold"]
        neg = [r for r in rs if r.expectation != "hold"]
        ok = sum(r.as_expected for r in rs)
        worst = max((r.max_divergence() for r in pos), default=0.0)
        stopped = sum("stopped" in r.extra for r in rs)
        print(f"{t:<18} {len(pos):>4} {len(neg):>4} {ok:>5}/{len(rs):<6} {worst:>14.2e} {stopped:>8}")
    print(f"{len(reports)} paired runs in {dt:.1f}s")
    if args.json:
        with open(args.json, "w") as f:
            json.dump([r.to_dict() for r in reports], f, indent=1, default=str)


if __name__ == "__main__":
    main()
