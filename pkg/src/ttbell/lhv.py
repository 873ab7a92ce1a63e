"""Hidden-variable models for the two-time spin experiment.

A model is a finite weighted support of hidden states ("lambda points")
together with response probabilities for the two measurement slots.  Two
kinds are distinguished:

- *factorized*: p(A,B | a,b,lambda) = p1(A | a,lambda) * p2(B | b,lambda),
  the statistical-independence form (the second response sees neither the
  first setting nor the first outcome);
- *general*:    p(A,B | a,b,lambda) = p1(A | a,lambda) * p2(B | a,b,A,lambda),
  the unrestricted chain-rule form.

Continuous hidden-variable densities are discretized to finite supports:
every quantity of interest is an expectation, which finite weighted sums
evaluate exactly.

For factorized models the per-lambda product mean factorizes,
E12 = E1 * E2, which is what bounds the per-lambda CHSH combination by 2.
`verify_consistency` checks the ensemble-level bookkeeping identities
(marginal/mean inversion, moment-route conditionals, outcome-swap symmetry
and its mean-product consequence, and factorization of double averages
over independent lambda pairs) that underpin that derivation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from .chsh import ChshSettings
from .quantum import (
    OUTCOMES,
    JointDistribution,
    Moments,
    UndefinedConditionalError,
    clamp_probability,
    quantum_joint,
)

RESPONSE_TOL = 1e-12
FACTORIZED = "factorized"
GENERAL = "general"


class InvalidModelError(ValueError):
    """Model weights or response probabilities violate their contracts."""


class UnsupportedModelError(InvalidModelError):
    """Operation requires a factorized model."""


@dataclass(frozen=True)
class LambdaPoint:
    """One discrete hidden state with its ensemble weight."""

    id: int
    weight: float


@dataclass(frozen=True)
class PerLambdaStats:
    """Slot means and product mean at a single hidden state."""

    e1: float
    e2: float
    e12: float


@dataclass(frozen=True)
class LhvModel:
    """Finite hidden-variable model.

    ``p1(A, a, lam)`` is the probability of first-slot outcome A at angle a.
    For factorized models ``p2(B, b, lam)`` likewise; for general models
    ``p2(B, a, b, A, lam)`` may also see the first setting and outcome.
    """

    support: tuple[LambdaPoint, ...]
    p1: Callable[..., float]
    p2: Callable[..., float]
    kind: Literal["factorized", "general"]

    def __post_init__(self):
        if not self.support:
            raise InvalidModelError("model support is empty")
        if self.kind not in (FACTORIZED, GENERAL):
            raise InvalidModelError(f"unknown model kind {self.kind!r}")
        for lam in self.support:
            if lam.weight < -RESPONSE_TOL:
                raise InvalidModelError(f"negative weight {lam.weight!r} at id {lam.id}")
        total = math.fsum(lam.weight for lam in self.support)
        if abs(total - 1.0) > RESPONSE_TOL:
            raise InvalidModelError(f"weights sum to {total!r}, expected 1")


def factorized_model(support, p1, p2) -> LhvModel:
    return LhvModel(support=tuple(support), p1=p1, p2=p2, kind=FACTORIZED)


def general_model(support, p1, p2) -> LhvModel:
    return LhvModel(support=tuple(support), p1=p1, p2=p2, kind=GENERAL)


def _response_pair(evaluate: Callable[[int], float], what: str) -> tuple[float, float]:
    """Evaluate a response for both outcomes and validate normalization."""
    values = []
    for outcome in OUTCOMES:
        v = evaluate(outcome)
        if not (-RESPONSE_TOL <= v <= 1.0 + RESPONSE_TOL):
            raise InvalidModelError(f"{what} returned {v!r}, outside [0, 1]")
        values.append(clamp_probability(v, RESPONSE_TOL))
    if abs(values[0] + values[1] - 1.0) > RESPONSE_TOL:
        raise InvalidModelError(
            f"{what} outcome probabilities sum to {values[0] + values[1]!r}, expected 1"
        )
    return values[0], values[1]


def _t1_pair(m: LhvModel, a: float, lam: LambdaPoint) -> tuple[float, float]:
    return _response_pair(lambda A: m.p1(A, a, lam), f"p1(a={a!r}, id={lam.id})")


def _t2_pair_factorized(m: LhvModel, b: float, lam: LambdaPoint) -> tuple[float, float]:
    return _response_pair(lambda B: m.p2(B, b, lam), f"p2(b={b!r}, id={lam.id})")


def per_lambda_joint(m: LhvModel, a: float, b: float, lam: LambdaPoint) -> JointDistribution:
    """Joint outcome distribution contributed by a single hidden state."""
    pa_plus, pa_minus = _t1_pair(m, a, lam)
    if m.kind == FACTORIZED:
        pb_plus, pb_minus = _t2_pair_factorized(m, b, lam)
        return JointDistribution(
            pp=pa_plus * pb_plus,
            pm=pa_plus * pb_minus,
            mp=pa_minus * pb_plus,
            mm=pa_minus * pb_minus,
        )
    pb_plus_given_p, pb_minus_given_p = _response_pair(
        lambda B: m.p2(B, a, b, 1, lam), f"p2(a={a!r}, b={b!r}, A=+1, id={lam.id})"
    )
    pb_plus_given_m, pb_minus_given_m = _response_pair(
        lambda B: m.p2(B, a, b, -1, lam), f"p2(a={a!r}, b={b!r}, A=-1, id={lam.id})"
    )
    return JointDistribution(
        pp=pa_plus * pb_plus_given_p,
        pm=pa_plus * pb_minus_given_p,
        mp=pa_minus * pb_plus_given_m,
        mm=pa_minus * pb_minus_given_m,
    )


def per_lambda_stats(m: LhvModel, a: float, b: float, lam: LambdaPoint) -> PerLambdaStats:
    """Slot means e1, e2 and the product mean e12 at one hidden state.

    e12 is summed from the per-lambda joint rather than taken as e1*e2, so
    the factorization identity stays an observable property, not an input.
    """
    pa_plus, pa_minus = _t1_pair(m, a, lam)
    joint = per_lambda_joint(m, a, b, lam)
    if m.kind == FACTORIZED:
        pb_plus, pb_minus = _t2_pair_factorized(m, b, lam)
        e2 = pb_plus - pb_minus
    else:
        e2 = (joint.pp + joint.mp) - (joint.pm + joint.mm)
    return PerLambdaStats(e1=pa_plus - pa_minus, e2=e2, e12=joint.correlator())


def average_over_lambda(m: LhvModel, a: float, b: float) -> tuple[JointDistribution, Moments]:
    """Ensemble joint and moments: weighted sums of per-lambda quantities."""
    pp = pm = mp = mm = 0.0
    for lam in m.support:
        j = per_lambda_joint(m, a, b, lam)
        pp += lam.weight * j.pp
        pm += lam.weight * j.pm
        mp += lam.weight * j.mp
        mm += lam.weight * j.mm
    joint = JointDistribution(pp=pp, pm=pm, mp=mp, mm=mm)
    moments = Moments(
        mean_t1=(pp + pm) - (mp + mm),
        mean_t2=(pp + mp) - (pm + mm),
        correlator=joint.correlator(),
    )
    return joint, moments


def model_conditional_t2(m: LhvModel, a: float, b: float, a_outcome: int, b_outcome: int) -> float:
    """Ensemble conditional P(B | A) = joint / first-slot marginal."""
    joint, _ = average_over_lambda(m, a, b)
    p1 = joint.prob(a_outcome, 1) + joint.prob(a_outcome, -1)
    if p1 <= 0.0:
        raise UndefinedConditionalError(
            f"first-slot outcome {a_outcome:+d} has zero probability; conditional undefined"
        )
    return joint.prob(a_outcome, b_outcome) / p1


def fixed_setting_reproducer(a: float, b: float) -> LhvModel:
    """Factorized model matching the quantum statistics at one setting pair.

    One deterministic hidden state per outcome pair (A, B), weighted by the
    quantum joint at (a, b); zero-weight pairs are dropped.  Responses
    ignore the angles, so agreement with quantum statistics holds at the
    construction settings only.
    """
    joint = quantum_joint(a, b)
    assign_a: dict[int, int] = {}
    assign_b: dict[int, int] = {}
    support = []
    for (A, B), w in joint.items():
        if w == 0.0:
            continue
        idx = len(support)
        support.append(LambdaPoint(id=idx, weight=w))
        assign_a[idx] = A
        assign_b[idx] = B

    def p1(A, angle, lam):
        return 1.0 if A == assign_a[lam.id] else 0.0

    def p2(B, angle, lam):
        return 1.0 if B == assign_b[lam.id] else 0.0

    return factorized_model(support, p1, p2)


def position_style_model(grid_size: int) -> LhvModel:
    """Deterministic responses driven by a uniform initial coordinate.

    Hidden state k carries lambda = k/grid_size on [0, 1).  The first slot
    answers +1 iff lambda falls below (1 + sin a)/2; the second slot uses
    the half-shifted coordinate lambda + 1/2 (mod 1) against
    (1 + sin b)/2.  The first-slot marginal converges to the quantum one as
    the grid refines.  An illustrative concrete instance, not canonical.
    """
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    n = int(grid_size)
    weight = 1.0 / n
    support = [LambdaPoint(id=k, weight=weight) for k in range(n)]

    def p1(A, angle, lam):
        coord = lam.id / n
        s = 1 if coord < 0.5 * (1.0 + math.sin(angle)) else -1
        return 1.0 if A == s else 0.0

    def p2(B, angle, lam):
        coord = (lam.id / n + 0.5) % 1.0
        s = 1 if coord < 0.5 * (1.0 + math.sin(angle)) else -1
        return 1.0 if B == s else 0.0

    return factorized_model(support, p1, p2)


def tabulated_factorized_model(
    weights,
    p1_tables: dict[int, dict[float, float]],
    p2_tables: dict[int, dict[float, float]],
    angle_tol: float = 1e-9,
) -> LhvModel:
    """Factorized model whose responses are lookup tables angle -> P(+1).

    Evaluating at an angle not present in a table (within angle_tol) is an
    error: finite models are defined only at their tabulated settings.
    """
    support = [LambdaPoint(id=i, weight=w) for i, w in enumerate(weights)]

    def p1(A, angle, lam):
        p_plus = _lookup_angle(p1_tables[lam.id], angle, angle_tol, "t1", lam.id)
        return p_plus if A == 1 else 1.0 - p_plus

    def p2(B, angle, lam):
        p_plus = _lookup_angle(p2_tables[lam.id], angle, angle_tol, "t2", lam.id)
        return p_plus if B == 1 else 1.0 - p_plus

    return factorized_model(support, p1, p2)


def tabulated_general_model(
    weights,
    p1_tables: dict[int, dict[float, float]],
    p2_tables: dict[int, dict[tuple[float, float, int], float]],
    angle_tol: float = 1e-9,
) -> LhvModel:
    """General model with first-slot tables angle -> P(+1) and second-slot
    tables (a, b, A) -> P(+1)."""
    support = [LambdaPoint(id=i, weight=w) for i, w in enumerate(weights)]

    def p1(A, angle, lam):
        p_plus = _lookup_angle(p1_tables[lam.id], angle, angle_tol, "t1", lam.id)
        return p_plus if A == 1 else 1.0 - p_plus

    def p2(B, a, b, A, lam):
        table = p2_tables[lam.id]
        if (a, b, A) in table:
            p_plus = table[(a, b, A)]
        else:
            for (ta, tb, tA), v in table.items():
                if tA == A and abs(ta - a) <= angle_tol and abs(tb - b) <= angle_tol:
                    p_plus = v
                    break
            else:
                raise InvalidModelError(
                    f"no t2 response tabulated at (a={a!r}, b={b!r}, A={A:+d}) for id {lam.id}"
                )
        return p_plus if B == 1 else 1.0 - p_plus

    return general_model(support, p1, p2)


def _lookup_angle(table: dict[float, float], angle: float, tol: float, slot: str, lam_id: int) -> float:
    if angle in table:
        return table[angle]
    for key, value in table.items():
        if abs(key - angle) <= tol:
            return value
    raise InvalidModelError(f"no {slot} response tabulated at angle {angle!r} for id {lam_id}")


def random_factorized_model(
    rng: np.random.Generator,
    n_lambda: int,
    t1_angles,
    t2_angles,
) -> LhvModel:
    """Random stochastic factorized model tabulated at the given angles."""
    raw = rng.random(n_lambda) + 1e-9
    weights = raw / raw.sum()
    p1_tables = {
        i: {float(a): float(p) for a, p in zip(t1_angles, rng.random(len(t1_angles)))}
        for i in range(n_lambda)
    }
    p2_tables = {
        i: {float(b): float(p) for b, p in zip(t2_angles, rng.random(len(t2_angles)))}
        for i in range(n_lambda)
    }
    return tabulated_factorized_model(weights, p1_tables, p2_tables)


def per_lambda_chsh(m: LhvModel, s: ChshSettings, lam: LambdaPoint) -> float:
    """|e1(a)e2(b) + e1(a)e2(b') + e1(a')e2(b') - e1(a')e2(b)| at one state.

    Requires a factorized model: the combination presupposes that the
    product mean splits into slot means.  Bounded by 2 for any response
    probabilities.
    """
    if m.kind != FACTORIZED:
        raise UnsupportedModelError("per-lambda CHSH requires a factorized model")
    e1_a = _mean(_t1_pair(m, s.a, lam))
    e1_ap = _mean(_t1_pair(m, s.a_prime, lam))
    e2_b = _mean(_t2_pair_factorized(m, s.b, lam))
    e2_bp = _mean(_t2_pair_factorized(m, s.b_prime, lam))
    return abs(e1_a * e2_b + e1_a * e2_bp + e1_ap * e2_bp - e1_ap * e2_b)


def averaged_chsh(m: LhvModel, s: ChshSettings) -> float:
    """CHSH combination of the ensemble correlators."""
    def corr(x, y):
        return average_over_lambda(m, x, y)[1].correlator

    return abs(corr(s.a, s.b) + corr(s.a, s.b_prime) + corr(s.a_prime, s.b_prime) - corr(s.a_prime, s.b))


def _mean(pair: tuple[float, float]) -> float:
    return pair[0] - pair[1]


@dataclass(frozen=True)
class ConsistencyReport:
    """Ensemble-level bookkeeping checks for one model at one setting pair.

    All errors are max absolute deviations.  ``outcome_swap_symmetric``
    (whether P(B|A) is invariant under exchanging the outcome values) is
    reported, not asserted: general models may legitimately break it.  The
    mean-product identity mean_t2 = mean_t1 * correlator is a consequence
    of that symmetry, so its error is only meaningful (and only required
    to vanish) when the symmetry holds.
    """

    marginal_from_mean_error: float
    conditional_moment_route_error: float
    outcome_swap_error: Optional[float]
    outcome_swap_symmetric: bool
    mean_product_error: float
    double_average_error: float
    marginal_double_average_error: float
    tol: float = RESPONSE_TOL

    @property
    def passed(self) -> bool:
        mandatory = [
            self.marginal_from_mean_error,
            self.conditional_moment_route_error,
            self.double_average_error,
            self.marginal_double_average_error,
        ]
        if self.outcome_swap_symmetric:
            mandatory.append(self.mean_product_error)
        return all(e <= self.tol for e in mandatory)


def verify_consistency(m: LhvModel, a: float, b: float, tol: float = RESPONSE_TOL) -> ConsistencyReport:
    """Run the ensemble bookkeeping identities for a model at (a, b)."""
    joint, moments = average_over_lambda(m, a, b)

    # marginal from mean: P(B) = (1/2)(1 + B * mean_t2)
    err_marginal = 0.0
    for B in OUTCOMES:
        p2_direct = joint.prob(1, B) + joint.prob(-1, B)
        err_marginal = max(err_marginal, abs(p2_direct - 0.5 * (1.0 + B * moments.mean_t2)))

    # conditional via the moment route vs the joint/marginal ratio; compared
    # in cross-multiplied form so near-deterministic first slots (conditioning
    # weight 1 + A*mean_t1 -> 0) do not amplify rounding
    err_conditional = 0.0
    conds: dict[tuple[int, int], float] = {}
    for A in OUTCOMES:
        p1 = joint.prob(A, 1) + joint.prob(A, -1)
        if p1 <= 0.0:
            continue
        for B in OUTCOMES:
            direct = joint.prob(A, B) / p1
            conds[(A, B)] = direct
            denom = 1.0 + A * moments.mean_t1
            num = B * moments.mean_t2 + A * B * moments.correlator
            err_conditional = max(err_conditional, abs(direct * denom - 0.5 * (denom + num)))

    # outcome-swap symmetry of conditionals, where both sides are defined
    swap_err = None
    for (A, B), v in conds.items():
        if (B, A) in conds:
            d = abs(v - conds[(B, A)])
            swap_err = d if swap_err is None else max(swap_err, d)
    symmetric = swap_err is not None and swap_err <= tol

    err_mean_product = abs(moments.mean_t2 - moments.mean_t1 * moments.correlator)

    # double averages over independent hidden-state pairs factorize
    stats = [per_lambda_stats(m, a, b, lam) for lam in m.support]
    w = np.array([lam.weight for lam in m.support])
    wx = w * np.array([st.e1 for st in stats])
    wy = w * np.array([st.e12 for st in stats])
    # naive pair sum (chunked to bound memory), kept independent of the
    # factorized product it is compared against
    double_sum = 0.0
    for i0 in range(0, len(wx), 256):
        double_sum += float(np.multiply.outer(wx[i0:i0 + 256], wy).sum())
    single_product = float(wx.sum()) * float(wy.sum())
    err_double = abs(double_sum - single_product)

    err_marginal_double = 0.0
    for B in OUTCOMES:
        lhs = 0.5 * (1.0 + B * double_sum)
        rhs = 0.5 * (1.0 + B * single_product)
        err_marginal_double = max(err_marginal_double, abs(lhs - rhs))

    return ConsistencyReport(
        marginal_from_mean_error=err_marginal,
        conditional_moment_route_error=err_conditional,
        outcome_swap_error=swap_err,
        outcome_swap_symmetric=symmetric,
        mean_product_error=err_mean_product,
        double_average_error=err_double,
        marginal_double_average_error=err_marginal_double,
        tol=tol,
    )
