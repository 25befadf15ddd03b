#!/usr/bin/env python3
"""Plot a simulated fringe dataset against its model curve.

Usage:
    python scripts/plot_fringe.py OUTDIR [--save FILE]

where OUTDIR holds the dataset.csv and model_curve.csv written by
``etpsim fringe --out OUTDIR``.
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", help="directory with dataset.csv and model_curve.csv")
    parser.add_argument("--save", default=None, help="output image path (default OUTDIR/fringe.png)")
    args = parser.parse_args(argv)

    outdir = Path(args.outdir)
    with open(outdir / "dataset.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    angles = np.array([float(r["angle_deg"]) for r in rows])
    counts = np.array([int(r["counts"]) for r in rows])
    sigmas = np.array([float(r["sigma"]) for r in rows])

    with open(outdir / "model_curve.csv", newline="") as fh:
        curve = list(csv.DictReader(fh))
    curve_angles = np.array([float(r["angle_deg"]) for r in curve])
    curve_counts = np.array([float(r["expected_counts"]) for r in curve])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(angles, counts, yerr=sigmas, fmt="o", ms=4, capsize=2,
                label="simulated counts")
    ax.plot(curve_angles, curve_counts, "-", lw=1.2, label="model")
    ax.set_xlabel("wave-plate angle (deg)")
    ax.set_ylabel("four-fold counts")
    ax.legend()
    fig.tight_layout()
    target = args.save or outdir / "fringe.png"
    fig.savefig(target, dpi=150)
    print(f"wrote {target}")


if __name__ == "__main__":
    sys.exit(main())
