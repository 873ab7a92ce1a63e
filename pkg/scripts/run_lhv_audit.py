#!/usr/bin/env python3
"""Audit the hidden-variable machinery end to end.

Builds the fixed-setting reproducer and the position-style model, runs the
ensemble bookkeeping checks and CHSH bounds, sweeps random stochastic
models against the bound, and demonstrates the model-file round-trip.
"""

from __future__ import annotations

import argparse
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from ttbell import lhv, model_io
from ttbell.chsh import ladder_settings


def audit_model(name: str, model, a: float, b: float, settings) -> bool:
    report = lhv.verify_consistency(model, a, b)
    lines = [f"== {name} ({model.kind}, {len(model.support)} states)"]
    lines.append(f"   bookkeeping identities: {'PASS' if report.passed else 'FAIL'}")
    ok = report.passed
    if model.kind == lhv.FACTORIZED:
        per_max = max(lhv.per_lambda_chsh(model, settings, lam) for lam in model.support)
        avg = lhv.averaged_chsh(model, settings)
        ok = ok and per_max <= 2.0 + 1e-12 and avg <= 2.0 + 1e-12
        lines.append(f"   per-state CHSH max {per_max:.9f}, averaged {avg:.9f} (bound 2)")
    print("\n".join(lines))
    return ok


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid-size", type=int, default=2000)
    parser.add_argument("--random-models", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args(argv)

    settings = ladder_settings(math.pi / 4)
    ok = True

    a, b = math.pi / 3, math.pi / 6
    reproducer = lhv.fixed_setting_reproducer(a, b)
    ok &= audit_model("fixed-setting reproducer", reproducer, a, b, settings)

    position = lhv.position_style_model(args.grid_size)
    ok &= audit_model("position-style model", position, 0.4, 1.1, settings)

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    t1 = [settings.a, settings.a_prime]
    t2 = [settings.b, settings.b_prime]
    for _ in range(args.random_models):
        model = lhv.random_factorized_model(rng, int(rng.integers(1, 4)), t1, t2)
        for lam in model.support:
            worst = max(worst, lhv.per_lambda_chsh(model, settings, lam))
    print(f"== random sweep: {args.random_models} models, per-state CHSH max {worst:.9f}")
    ok &= worst <= 2.0 + 1e-12

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "reproducer.model"
        model_io.write_model_file(path, reproducer, t1_angles=[a], t2_angles=[b])
        reloaded = model_io.load_model(path)
        j1, _ = lhv.average_over_lambda(reproducer, a, b)
        j2, _ = lhv.average_over_lambda(reloaded, a, b)
        round_trip = j1 == j2
        print(f"== model-file round trip: {'PASS' if round_trip else 'FAIL'}")
        ok &= round_trip

    print(f"overall: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
