"""Track the turnover preset: roots, kappa, tau and the refined R-T report over time.

Usage::

    python scripts/turnover_report.py [--n N] [--times T1 T2 ...]

Prints a CSV table on stdout.  The report at each time is restricted to
``alpha + tau >= dalpha`` so that values at different times are comparable.
"""
import argparse
import csv
import sys

from muskat_lab.evolution import preset_curve
from muskat_lab.modified import TurnoverContext, refined_rt_check


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--times", type=float, nargs="+", default=[0.0, 5e-4, 1e-3, 2e-3])
    args = p.parse_args(argv)
    curve = preset_curve("turnover", args.n)
    w = csv.writer(sys.stdout)
    w.writerow(["t", "z1", "z2", "kappa", "tau", "tau_prime", "rt_report"])
    for t in args.times:
        ctx = TurnoverContext.from_evolution(curve, t)
        rep = refined_rt_check(ctx, r_min=ctx.curve.dalpha)
        w.writerow([t, ctx.vc.z1, ctx.vc.z2, ctx.kappa, ctx.tau, ctx.tau_prime, rep.value])
    return 0


if __name__ == "__main__":
    sys.exit(main())
