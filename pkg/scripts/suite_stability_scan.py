"""How often positive equivalence runs exceed tolerance as clause density and gamma vary.

Algebraically equal formulas can drift apart through rounding when the paired iteration
is chaotic; this scan shows where that happens. Usage:
python3 scripts/suite_stability_scan.py [--alphas 3.5 4.0] [--gammas 0 0.3 0.5 0.8 0.9 1.0]
"""
import argparse

from tokenprop.equivalence import check_sp_star_vs_sp, check_wptp_vs_spstar_ksat
from tokenprop.generators import gen_random_ksat


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--alphas", type=float, nargs="+", default=[3.5, 4.0])
    p.add_argument("--gammas", type=float, nargs="+", default=[0.0, 0.3, 0.5, 0.8, 0.9, 1.0])
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--iters", type=int, default=30)
    args = p.parse_args()

    print("violations of the positive identities (out of --instances) per gamma")
    for alpha in args.alphas:
        row = []
        for gam in args.gammas:
            bad = 0
            for s in range(args.instances):
                g = gen_random_ksat(args.n, int(round(alpha * args.n)), 3, seed=s)
                for check in (check_sp_star_vs_sp, check_wptp_vs_spstar_ksat):
                    if check(g, gam, s, args.iters).verdict != "hold":
                        bad += 1
                        break
            row.append(f"g={gam}:{bad}")
        print(f"alpha={alpha}: " + "  ".join(row))


if __name__ == "__main__":
    main()
