#!/usr/bin/env python3
"""Monte Carlo CHSH value versus detection probability.

For each eta_d*F on a grid, runs the four ladder setting pairs at alpha =
pi/4 and evaluates the measured CHSH combination from raw (detection-
included) correlator estimates.  The closed form is eta_f * 2*sqrt(2);
the empirical crossing of the classical bound 2 sits at eta_f = 1/sqrt(2).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

from ttbell.chsh import CRITICAL_ETA_F, chsh_value, ladder_settings
from ttbell.montecarlo import DetectionConfig, estimate, run


def measured_chsh(eta_f: float, trials: int, seed: int) -> float:
    settings = ladder_settings(math.pi / 4)
    pairs = [
        (settings.a, settings.b),
        (settings.a, settings.b_prime),
        (settings.a_prime, settings.b_prime),
        (settings.a_prime, settings.b),
    ]
    config = DetectionConfig(eta_d=eta_f)  # only the product matters
    estimates = {}
    for k, (x, y) in enumerate(pairs):
        est = estimate(run(x, y, config, trials, seed=seed + k))
        estimates[(x, y)] = est.correlator_exp
    return chsh_value(lambda x, y: estimates[(x, y)], settings).s_value


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--eta-f-min", type=float, default=0.60)
    parser.add_argument("--eta-f-max", type=float, default=1.00)
    parser.add_argument("--eta-f-step", type=float, default=0.02)
    parser.add_argument("--trials", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=20240809)
    parser.add_argument("--out", default="efficiency_sweep.csv")
    args = parser.parse_args(argv)

    s_ideal_max = 2.0 * math.sqrt(2.0)
    grid = []
    value = args.eta_f_min
    while value <= args.eta_f_max + 1e-12:
        grid.append(round(value, 12))
        value += args.eta_f_step

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["eta_f", "s_exp_mc", "s_exp_closed", "violated_mc", "violated_closed"])
        for i, eta_f in enumerate(grid):
            s_mc = measured_chsh(eta_f, args.trials, args.seed + 10 * i)
            s_closed = eta_f * s_ideal_max
            writer.writerow([
                f"{eta_f:.9f}", f"{s_mc:.9f}", f"{s_closed:.9f}",
                str(s_mc > 2.0).lower(), str(s_closed > 2.0).lower(),
            ])

    print(f"wrote {len(grid)} rows to {args.out}")
    print(f"threshold eta_f = 1/sqrt(2) = {CRITICAL_ETA_F:.9f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
