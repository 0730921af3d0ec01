#!/usr/bin/env python3
"""Plot empirical MSE against the state-evolution prediction.

Usage:
  plot_results.py PREFIX [PREFIX ...] [--out FILE.png] [--log]

Each PREFIX names a pair of files written by `ampsi run`:
PREFIX.trials.csv and PREFIX.se.csv.
"""

import argparse
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_se(path):
    iters, pred, emp, err = [], [], [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            iters.append(int(row["iter"]))
            pred.append(float(row["pred_mse"]))
            emp.append(float(row["emp_mean_mse"]))
            err.append(float(row["emp_stderr"]))
    return iters, pred, emp, err


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("prefixes", nargs="+", help="output prefixes from `ampsi run`")
    ap.add_argument("--out", default="mse_vs_iteration.png")
    ap.add_argument("--log", action="store_true", help="log-scale MSE axis")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for prefix in args.prefixes:
        se_path = pathlib.Path(prefix + ".se.csv")
        if not se_path.exists():
            sys.exit(f"missing {se_path}; run `ampsi run --config ... --out {prefix}`")
        iters, pred, emp, err = read_se(se_path)
        label = pathlib.Path(prefix).name
        ax.errorbar(iters, emp, yerr=err, fmt="o", ms=4, capsize=2,
                    label=f"{label} empirical")
        ax.plot(iters, pred, "-", lw=1.2, label=f"{label} SE prediction")

    ax.set_xlabel("iteration")
    ax.set_ylabel("MSE")
    if args.log:
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
