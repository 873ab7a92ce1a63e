#!/usr/bin/env python3
"""Sweep the ladder angle, refine the CHSH maximum, and tabulate violation.

Writes the scan rows and a one-line summary; with --eta-f below 1/sqrt(2)
no row can violate the classical bound, which is the detection threshold
this family of settings exhibits.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

from ttbell.chsh import CRITICAL_ETA_F, scan_alpha


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--alpha-min", type=float, default=0.0)
    parser.add_argument("--alpha-max", type=float, default=math.pi)
    parser.add_argument("--alpha-step", type=float, default=1e-3)
    parser.add_argument("--eta-f", type=float, default=1.0,
                        help="overall detection probability eta_d * F")
    parser.add_argument("--out", default="alpha_scan.csv")
    args = parser.parse_args(argv)

    rows, summary = scan_alpha(args.alpha_min, args.alpha_max, args.alpha_step,
                               eta_f=args.eta_f)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "s_ideal", "s_exp", "violated"])
        for r in rows:
            writer.writerow([f"{r.alpha:.9f}", f"{r.s_ideal:.9f}",
                             f"{r.s_exp:.9f}", str(r.violated).lower()])

    print(f"wrote {len(rows)} rows to {args.out}")
    print(f"alpha* = {summary.alpha_star:.9f}  (pi/4 = {math.pi / 4:.9f})")
    print(f"S_max  = {summary.s_max:.9f}  S_exp_max = {summary.s_exp_max:.9f}")
    print(f"eta_f  = {summary.eta_f:.9f}  critical = {CRITICAL_ETA_F:.9f}")
    print(f"violated: {summary.violated}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
