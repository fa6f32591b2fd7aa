"""Plot-ready tables for the two headline comparisons.

Writes two CSV files to the output directory:

  ratios.csv   per p: median mse_js/mse_raw with the median c_inf, and
               median sph_js/sph_raw with the median d_inf
  snr_curve.csv  limits c_inf and d_inf as functions of SNR for a few r_inf
"""

import argparse
import csv
import os

import numpy as np

from steinpc import harness, metrics, validate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="figure_data")
    ap.add_argument("--trials", type=int, default=20)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    cfg = validate.default_config(trials=args.trials, p_grid=(64, 256, 1024, 4096, 16384))
    report = harness.run_sweep(cfg)
    cols = ["ratio_mse", "c_inf", "ratio_sph", "d_inf", "mse_raw", "sph_raw"]
    with open(os.path.join(args.out, "ratios.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p"] + cols)
        for row in report.rows:
            w.writerow([row["p"]] + [repr(row[c]["median"]) for c in cols])

    with open(os.path.join(args.out, "snr_curve.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        rs = (0.25, 0.5, 1 / np.sqrt(2), 1.0)
        w.writerow(["snr", "c_inf"] + [f"d_inf_r{r:.3f}" for r in rs])
        for snr in np.linspace(0, 6, 61):
            w.writerow([repr(float(snr)), repr(float(metrics.limit_c_inf(snr)))]
                       + [repr(float(metrics.limit_d_inf(snr, r))) for r in rs])
    print(f"wrote {args.out}/ratios.csv and {args.out}/snr_curve.csv")


if __name__ == "__main__":
    main()
