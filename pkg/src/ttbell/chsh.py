"""CHSH expression over two-time correlators, angle ladder and threshold.

The inequality combines four correlators,

    S = | E(a,b) + E(a,b') + E(a',b') - E(a',b) |  <=  2,

which any factorized hidden-variable model obeys.  The quantum correlator
cos(a - b) on the one-parameter angle ladder with separations
|a-b| = |a-b'| = |a'-b'| = alpha and |a'-b| = 3*alpha gives

    S_ideal(alpha) = | 3 cos(alpha) - cos(3*alpha) |,

maximal at alpha = pi/4 with S = 2*sqrt(2).  With detector efficiency
eta_d and overall transmission F the measured value scales linearly,
S_exp = eta_d*F*S_ideal, so a violation needs eta_d*F > 1/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

CLASSICAL_BOUND = 2.0
VIOLATION_TOL = 1e-12
CRITICAL_ETA_F = 1.0 / math.sqrt(2.0)
S_IDEAL_MAX = 2.0 * math.sqrt(2.0)


class InvalidCorrelatorError(ValueError):
    """A correlator callback returned a value outside [-1, 1]."""


@dataclass(frozen=True)
class ChshSettings:
    """The four analyzer angles (radians, xz-plane)."""

    a: float
    a_prime: float
    b: float
    b_prime: float


@dataclass(frozen=True)
class ChshReport:
    s_value: float
    bound: float = CLASSICAL_BOUND
    violated: bool = False
    margin: float = 0.0


@dataclass(frozen=True)
class AlphaScanRow:
    alpha: float
    s_ideal: float
    s_exp: float
    violated: bool


@dataclass(frozen=True)
class ScanSummary:
    alpha_star: float
    s_max: float
    eta_f: float
    s_exp_max: float
    eta_f_critical: float = field(default=CRITICAL_ETA_F)
    violated: bool = False


@dataclass(frozen=True)
class ThresholdReport:
    eta_d: float
    f: float
    eta_f: float
    critical_eta_f: float
    s_exp_max: float
    violated: bool
    margin: float


def ladder_settings(alpha: float) -> ChshSettings:
    """One-parameter angle family with the stated separations.

    Absolute orientation is a gauge choice (correlators depend on angle
    differences only); a' = 0 is fixed, giving (a, a', b, b') =
    (2a, 0, 3a, a) with |a-b| = |a-b'| = |a'-b'| = alpha, |a'-b| = 3*alpha.
    """
    return ChshSettings(a=2.0 * alpha, a_prime=0.0, b=3.0 * alpha, b_prime=alpha)


def _checked(correlator: Callable[[float, float], float], x: float, y: float) -> float:
    value = correlator(x, y)
    if not (-1.0 - 1e-9 <= value <= 1.0 + 1e-9):
        raise InvalidCorrelatorError(
            f"correlator({x!r}, {y!r}) = {value!r} outside [-1, 1]"
        )
    return value


def chsh_value(correlator: Callable[[float, float], float], s: ChshSettings) -> ChshReport:
    """Evaluate |E(a,b) + E(a,b') + E(a',b') - E(a',b)| for a correlator."""
    total = (
        _checked(correlator, s.a, s.b)
        + _checked(correlator, s.a, s.b_prime)
        + _checked(correlator, s.a_prime, s.b_prime)
        - _checked(correlator, s.a_prime, s.b)
    )
    s_value = abs(total)
    return ChshReport(
        s_value=s_value,
        bound=CLASSICAL_BOUND,
        violated=s_value > CLASSICAL_BOUND + VIOLATION_TOL,
        margin=s_value - CLASSICAL_BOUND,
    )


def s_ideal_closed(alpha: float) -> float:
    """|3 cos(alpha) - cos(3*alpha)|, the ladder CHSH value at unit detection."""
    return abs(3.0 * math.cos(alpha) - math.cos(3.0 * alpha))


def _parabolic_polish(f: Callable[[float], float], x0: float, h: float,
                      lo: float, hi: float) -> float:
    """One parabolic-vertex step around x0; falls back to x0 if ill-posed.

    Pure value comparisons cannot localize a quadratic maximum much below
    ~sqrt(eps), so golden-section alone stalls near 1e-8; the three-point
    vertex formula recovers ~1e-11.
    """
    if x0 - h < lo or x0 + h > hi:
        return x0
    fm, f0, fp = f(x0 - h), f(x0), f(x0 + h)
    denom = fm - 2.0 * f0 + fp
    if denom >= 0.0:  # not locally concave, leave the bracket result alone
        return x0
    step = 0.5 * h * (fm - fp) / denom
    if abs(step) > h:
        return x0
    return x0 + step


def _refine_max(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Locate the maximizer of a smooth unimodal f on [lo, hi] to ~1e-10."""
    if hi <= lo:
        return lo
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > 2e-5:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x0 = 0.5 * (a + b)
    return min(max(_parabolic_polish(f, x0, 1e-5, lo, hi), lo), hi)


def scan_alpha(
    alpha_min: float,
    alpha_max: float,
    step: float,
    eta_f: float = 1.0,
) -> tuple[list[AlphaScanRow], ScanSummary]:
    """Tabulate the ladder CHSH value and refine its maximizer.

    Rows cover alpha_min, alpha_min + step, ... up to alpha_max.  The
    returned summary refines the grid argmax by golden section plus a
    parabolic polish; grid ties (the ladder has equal-height peaks) are
    broken toward the smallest alpha.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    if alpha_max < alpha_min:
        raise ValueError("empty scan range: alpha_max < alpha_min")
    n = int(math.floor((alpha_max - alpha_min) / step + 1e-9)) + 1
    alphas = [alpha_min + k * step for k in range(n)]

    rows = []
    for alpha in alphas:
        s_id = s_ideal_closed(alpha)
        s_exp = eta_f * s_id
        rows.append(
            AlphaScanRow(
                alpha=alpha,
                s_ideal=s_id,
                s_exp=s_exp,
                violated=s_exp > CLASSICAL_BOUND + VIOLATION_TOL,
            )
        )

    values = [r.s_ideal for r in rows]
    grid_max = max(values)
    tie_tol = max(4.0 * step * step, 1e-12)
    first = next(i for i, v in enumerate(values) if v >= grid_max - tie_tol)
    lo = alphas[max(first - 1, 0)]
    hi = alphas[min(first + 1, n - 1)]
    alpha_star = _refine_max(s_ideal_closed, lo, hi)
    s_max = s_ideal_closed(alpha_star)
    s_exp_max = eta_f * s_max
    summary = ScanSummary(
        alpha_star=alpha_star,
        s_max=s_max,
        eta_f=eta_f,
        s_exp_max=s_exp_max,
        violated=s_exp_max > CLASSICAL_BOUND + VIOLATION_TOL,
    )
    return rows, summary


def threshold_analysis(eta_d: float, f: float) -> ThresholdReport:
    """Detection threshold: violation is possible iff eta_d*F > 1/sqrt(2).

    The maximal measured CHSH value is eta_d*F*2*sqrt(2); equality with the
    classical bound (eta_d*F exactly 1/sqrt(2)) counts as no violation.
    """
    for name, value in (("eta_d", eta_d), ("f", f)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    eta_f = eta_d * f
    s_exp_max = eta_f * S_IDEAL_MAX
    return ThresholdReport(
        eta_d=eta_d,
        f=f,
        eta_f=eta_f,
        critical_eta_f=CRITICAL_ETA_F,
        s_exp_max=s_exp_max,
        violated=s_exp_max > CLASSICAL_BOUND + VIOLATION_TOL,
        margin=s_exp_max - CLASSICAL_BOUND,
    )
