#!/usr/bin/env python3
"""Plot the CSV files written by the attradius CLI.

Usage: plot_outputs.py KIND FILE [-o OUT.png]
with KIND one of trace | trajectory | sweep | pixels | orbit.

Consumes only the documented CSV schemas; the package itself never plots.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    arr = np.array([[float(v) for v in r] for r in data])
    return header, arr


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("kind", choices=["trace", "trajectory", "sweep", "pixels",
                                     "orbit"])
    ap.add_argument("file")
    ap.add_argument("-o", "--out", default=None)
    args = ap.parse_args(argv)
    header, arr = _read(args.file)
    fig, ax = plt.subplots(figsize=(7, 4.5))

    if args.kind == "trace":
        ax.plot(arr[:, 0], arr[:, 1])
        ax.set_xlabel("t")
        ax.set_ylabel("segment norm")
    elif args.kind == "trajectory":
        for j in range(1, arr.shape[1]):
            ax.plot(arr[:, 0], arr[:, j], label=header[j])
        ax.set_xlabel("t")
        ax.legend()
    elif args.kind == "sweep":
        for j, name in enumerate(header[2:], start=2):
            ok = np.isfinite(arr[:, j])
            ax.plot(arr[ok, 0], arr[ok, j], ".-", label=name)
        ax.set_xlabel("delay")
        ax.set_ylabel("bound")
        ax.legend()
    elif args.kind == "pixels":
        conv = arr[arr[:, 2] == 1]
        rest = arr[arr[:, 2] != 1]
        ax.plot(conv[:, 0], conv[:, 1], "ks", ms=2, label="convergent")
        ax.plot(rest[:, 0], rest[:, 1], "rs", ms=2, alpha=0.3,
                label="non-convergent")
        ax.set_xlabel("p1")
        ax.set_ylabel("p2")
        ax.legend()
    else:  # orbit profile
        ax.plot(arr[:, 1], arr[:, 2] if arr.shape[1] > 2 else arr[:, 1])
        ax.set_xlabel(header[1])
        ax.set_ylabel(header[2] if len(header) > 2 else header[1])

    out = args.out or (args.file.rsplit(".", 1)[0] + ".png")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
