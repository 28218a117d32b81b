"""Decimation solver success rates on planted random 3-SAT and random 3-coloring.

Compares the single-sweep default against propagating to convergence before each
decimation step. Usage: python3 scripts/solver_benchmark.py [--n 60] [--alpha 3.0] [--trials 20]
"""
import argparse
import time

from tokenprop.generators import gen_random_ksat, gen_random_qcol
from tokenprop.solver import SAT, SolveConfig, solve


def bench(make, cfg_kw, trials):
    ok, t0 = 0, time.perf_counter()
    for s in range(trials):
        g = make(s)
        res = solve(g, SolveConfig(seed=s, **cfg_kw))
        ok += res.status == SAT
    return ok, time.perf_counter() - t0


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--alpha", type=float, default=3.0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--col-n", type=int, default=30)
    p.add_argument("--col-degree", type=float, default=4.0)
    args = p.parse_args()

    m = int(round(args.alpha * args.n))
    sat = lambda s: gen_random_ksat(args.n, m, 3, seed=s, planted=True)
    runs = [
        ("SPgamma g=1, 1 sweep", dict(algorithm="SPgamma", gamma=1.0)),
        ("SPgamma g=1, converge", dict(algorithm="SPgamma", gamma=1.0, stop="converge")),
        ("SPgamma g=0.8, 1 sweep", dict(algorithm="SPgamma", gamma=0.8)),
        ("SPstar g=0.8, 1 sweep", dict(algorithm="SPstar", gamma=0.8)),
        ("WPTP g=0.8, 1 sweep", dict(algorithm="WPTP", gamma=0.8)),
    ]
    print(f"planted 3-SAT n={args.n} m={m}, {args.trials} trials")
    for name, kw in runs:
        ok, dt = bench(sat, kw, args.trials)
        print(f"  {name:<26} {ok:>3}/{args.trials}  {dt:6.1f}s")

    me = int(round(args.col_degree * args.col_n / 2))
    col = lambda s: gen_random_qcol(args.col_n, me, 3, seed=s)
    print(f"random 3-COL n={args.col_n} m={me}, {args.trials} trials (not all instances are colorable)")
    for name, kw in [("PTP, 1 sweep", dict(algorithm="PTP")), ("PTP finer, 1 sweep", dict(algorithm="PTP", finer_decimation=True)), ("SDBP, 1 sweep", dict(algorithm="SDBP"))]:
        ok, dt = bench(col, kw, args.trials)
        print(f"  {name:<26} {ok:>3}/{args.trials}  {dt:6.1f}s")


if __name__ == "__main__":
    main()
