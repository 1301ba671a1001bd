"""
Fitted exponential rate of the optimality gap against alpha, next to the
empirical PL prediction ``mu_hat * alpha``.
"""

import argparse

from proxflow.certificates import estimate_exp_rate, estimate_pl_constant, trajectory_cloud
from proxflow.demos import get_demo
from proxflow.dynamics import FlowConfig, integrate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--demo", default="lasso")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.1, 0.2, 0.5, 1.0])
    ap.add_argument("--t-end", type=float, default=200.0)
    args = ap.parse_args(argv)

    p, x0 = get_demo(args.demo).build(args.seed)
    print("alpha,fitted_rate,r2,mu_hat,mu_hat_alpha")
    for a in args.alphas:
        tr = integrate(p, FlowConfig(alpha=a, step=1e-2, method="rk4", t_end=args.t_end,
                                     record_every=10), x0)
        try:
            fit = estimate_exp_rate(tr)
        except ValueError as exc:
            print(f"{a},skipped: {exc}")
            continue
        pl = estimate_pl_constant(p, a, trajectory_cloud(tr, seed=args.seed, g=p.g), 1000)
        print(f"{a},{fit.rate:.6g},{fit.r2:.6f},{pl.mu_hat:.6g},{pl.mu_hat * a:.6g}")


if __name__ == "__main__":
    main()
