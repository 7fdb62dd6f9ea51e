#!/usr/bin/env python3
"""Plot data-error / trace / rank curves from solver history CSVs.

Usage:
    python scripts/plot_convergence.py results/table2/*/history.csv -o curves.png

Needs matplotlib (not a package dependency; install separately).
"""

import argparse
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sarlift.io_formats import load_history_csv


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("histories", nargs="+", help="history.csv paths")
    parser.add_argument("-o", "--output", default="convergence.png")
    args = parser.parse_args()

    fig, axes = plt.subplots(1, 3, figsize=(14, 4))
    for path in args.histories:
        rows = load_history_csv(path)
        its = [r[0] for r in rows]
        label = os.path.basename(os.path.dirname(os.path.abspath(path)))
        axes[0].semilogy(its, [r[3] for r in rows], label=label)
        axes[1].plot(its, [r[1] for r in rows], label=label)
        axes[2].plot(its, [r[2] for r in rows], label=label)
    for ax, title in zip(axes, ["data error", "trace", "rank"]):
        ax.set_xlabel("iteration")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
