"""Run a convergence sweep and print the verdict table.

    python scripts/run_sweep.py                      # bundled default config
    python scripts/run_sweep.py --mu 0 --trials 50 --out results/mu0
"""

import argparse
import dataclasses

from steinpc import harness, validate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--p-grid", type=int, nargs="+", default=[256, 1024, 4096, 16384])
    ap.add_argument("--seed", type=int, default=20211)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    base = validate.mu_zero_config() if args.mu == 0 else validate.default_config()
    cfg = dataclasses.replace(base, mu=args.mu, n=args.n, trials=args.trials,
                              p_grid=tuple(args.p_grid), master_seed=args.seed)
    report = harness.run_sweep(cfg, workers=args.workers)
    if args.out:
        report.write(args.out)

    print(f"{'check':<20} {'stat':<6} " + " ".join(f"{p:>10}" for p in cfg.p_grid) + "  verdict")
    for v in report.verdicts:
        seq = " ".join(f"{x:>10.4g}" for x in v["sequence"])
        print(f"{v['check']:<20} {v['statistic']:<6} {seq}  {'PASS' if v['passed'] else 'FAIL'}")
    print(f"{report.metadata['runtime']['seconds']:.1f} s")


if __name__ == "__main__":
    main()
