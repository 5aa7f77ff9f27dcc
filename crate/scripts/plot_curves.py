#!/usr/bin/env python3
"""Plot the per-curve CSV files written by `hprec run`.

Usage: plot_curves.py RESULT_DIR [--out FILE] [--curves a,b,...]

Every `<curve>.csv` in RESULT_DIR (columns snr_db,value,stderr) becomes one line
with +-stderr error bars. Lines starting with '#' mark a failed point and are skipped.
"""

import argparse
import csv
import pathlib
import sys


def read_curve(path):
    snr, value, err = [], [], []
    with path.open() as f:
        rows = csv.reader(line for line in f if not line.startswith("#"))
        next(rows, None)
        for r in rows:
            snr.append(float(r[0]))
            value.append(float(r[1]))
            err.append(float(r[2]))
    return snr, value, err


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("result_dir", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, help="image file (default: RESULT_DIR/curves.png)")
    ap.add_argument("--curves", help="comma-separated subset of curve names")
    args = ap.parse_args()

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        sys.exit("matplotlib is required: pip install matplotlib")

    wanted = set(args.curves.split(",")) if args.curves else None
    files = sorted(p for p in args.result_dir.glob("*.csv") if wanted is None or p.stem in wanted)
    if not files:
        sys.exit(f"no curve files in {args.result_dir}")

    fig, (ax_mi, ax_ee) = plt.subplots(1, 2, figsize=(11, 4.5))
    has_energy = False
    for path in files:
        snr, value, err = read_curve(path)
        ax = ax_ee if path.stem.endswith("_energy") else ax_mi
        has_energy |= ax is ax_ee
        ax.errorbar(snr, value, yerr=err, marker="o", ms=3, capsize=2, label=path.stem)

    ax_mi.set_xlabel("SNR [dB]")
    ax_mi.set_ylabel("bits/s/Hz")
    ax_mi.grid(True, alpha=0.3)
    ax_mi.legend(fontsize=8)
    if has_energy:
        ax_ee.set_xlabel("SNR [dB]")
        ax_ee.set_ylabel("bits/s/Hz/W")
        ax_ee.grid(True, alpha=0.3)
        ax_ee.legend(fontsize=8)
    else:
        fig.delaxes(ax_ee)
    fig.suptitle(args.result_dir.name)
    fig.tight_layout()
    out = args.out or args.result_dir / "curves.png"
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
