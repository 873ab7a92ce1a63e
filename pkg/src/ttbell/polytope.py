"""Local-polytope membership certificates for four two-setting correlators.

A deterministic strategy assigns fixed outcomes (A_a, A_a', B_b, B_b') in
{+1,-1}^4; its correlator vector is (A_a*B_b, A_a*B_b', A_a'*B_b',
A_a'*B_b).  A target vector of four correlators admits a local model iff
it is a convex mixture of the 16 strategy vectors.  For correlators in
[-1,1]^4 this holds iff every signed CHSH combination with an odd number
of minus signs stays at or below 2 (those eight combinations are the
nontrivial facets of the correlator polytope).

Membership is decided twice, by independent routes: the facet scan above,
and a phase-1 simplex that searches for explicit nonnegative strategy
weights.  Feasible targets come with the weights as a certificate;
infeasible ones with the violated facet and its gap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .chsh import CLASSICAL_BOUND, ChshSettings

FEASIBILITY_TOL = 1e-9

Strategy = tuple[int, int, int, int]  # (A_a, A_a', B_b, B_b')

STRATEGIES: tuple[Strategy, ...] = tuple(itertools.product((1, -1), repeat=4))

# sign patterns with an odd number of -1: the nontrivial facet normals
FACET_SIGNS: tuple[tuple[int, int, int, int], ...] = tuple(
    signs for signs in itertools.product((1, -1), repeat=4) if signs[0] * signs[1] * signs[2] * signs[3] == -1
)


def strategy_correlators(s: Strategy) -> tuple[int, int, int, int]:
    a, ap, b, bp = s
    return (a * b, a * bp, ap * bp, ap * b)


def strategy_label(s: Strategy) -> str:
    return "".join("+" if v == 1 else "-" for v in s)


@dataclass(frozen=True)
class PolytopeCertificate:
    feasible: bool
    gap: float
    weights: Optional[dict[Strategy, float]] = None
    violated_facet: Optional[tuple[tuple[int, int, int, int], float]] = None


def targets_from_correlator(
    correlator: Callable[[float, float], float], s: ChshSettings
) -> tuple[float, float, float, float]:
    """Four correlators in the fixed order (a,b), (a,b'), (a',b'), (a',b)."""
    return (
        correlator(s.a, s.b),
        correlator(s.a, s.b_prime),
        correlator(s.a_prime, s.b_prime),
        correlator(s.a_prime, s.b),
    )


def facet_values(targets: Sequence[float]) -> list[tuple[tuple[int, int, int, int], float]]:
    """All eight signed CHSH combinations of the targets."""
    return [
        (signs, sum(e * t for e, t in zip(signs, targets)))
        for signs in FACET_SIGNS
    ]


def _simplex_weights(targets: Sequence[float], tol: float) -> Optional[dict[Strategy, float]]:
    """Phase-1 simplex: nonnegative strategy weights matching the targets.

    Minimizes the total artificial infeasibility of the 5-equation system
    (four correlators plus normalization) over the 16 strategy weights,
    with Bland's rule for termination.  Returns None when the residual
    optimum exceeds tol.
    """
    n_rows, n_cols = 5, len(STRATEGIES)
    a_mat = np.ones((n_rows, n_cols))
    for j, s in enumerate(STRATEGIES):
        a_mat[:4, j] = strategy_correlators(s)
    rhs = np.array([*targets, 1.0], dtype=float)

    for i in range(n_rows):
        if rhs[i] < 0.0:
            a_mat[i] *= -1.0
            rhs[i] *= -1.0

    # tableau: strategy columns | artificial identity | rhs
    tab = np.hstack([a_mat, np.eye(n_rows), rhs[:, None]])
    basis = list(range(n_cols, n_cols + n_rows))
    # phase-1 reduced costs: z_j - c_j for cost 1 on artificials
    obj = np.zeros(n_cols + n_rows + 1)
    obj[: n_cols + n_rows] = -tab[:, :-1].sum(axis=0)
    obj[n_cols: n_cols + n_rows] += 1.0  # artificial columns have cost 1
    obj[-1] = -tab[:, -1].sum()

    pivot_tol = 1e-11
    for _ in range(10000):
        entering = next((j for j in range(n_cols + n_rows) if obj[j] < -pivot_tol), None)
        if entering is None:
            break
        ratios = [
            (tab[i, -1] / tab[i, entering], basis[i], i)
            for i in range(n_rows)
            if tab[i, entering] > pivot_tol
        ]
        if not ratios:
            return None  # unbounded phase-1 cannot happen; bail out defensively
        _, _, leaving = min(ratios)
        pivot = tab[leaving, entering]
        tab[leaving] /= pivot
        for i in range(n_rows):
            if i != leaving and tab[i, entering] != 0.0:
                tab[i] -= tab[i, entering] * tab[leaving]
        obj -= obj[entering] * tab[leaving]
        basis[leaving] = entering
    else:
        raise RuntimeError("simplex did not terminate")

    infeasibility = -obj[-1]
    if infeasibility > tol:
        return None

    weights = {s: 0.0 for s in STRATEGIES}
    for i, var in enumerate(basis):
        if var < n_cols:
            weights[STRATEGIES[var]] = max(float(tab[i, -1]), 0.0)
    return weights


def reconstruct_targets(weights: dict[Strategy, float]) -> tuple[float, float, float, float]:
    """Correlators implied by a strategy mixture."""
    acc = [0.0, 0.0, 0.0, 0.0]
    for s, w in weights.items():
        for k, v in enumerate(strategy_correlators(s)):
            acc[k] += w * v
    return tuple(acc)


def polytope_check(targets: Sequence[float], tol: float = FEASIBILITY_TOL) -> PolytopeCertificate:
    """Decide local-polytope membership of four correlators, with certificate.

    The facet scan is the decision oracle; the simplex provides the
    explicit weights on feasible instances.  Disagreement between the two
    routes (beyond tol) is a logic error and raises.
    """
    targets = tuple(float(t) for t in targets)
    if len(targets) != 4:
        raise ValueError(f"need exactly four correlators, got {len(targets)}")
    for t in targets:
        if not -1.0 <= t <= 1.0:
            raise ValueError(f"correlator {t!r} outside [-1, 1]")

    facets = facet_values(targets)
    worst_signs, worst_value = max(facets, key=lambda sv: sv[1])
    feasible = worst_value <= CLASSICAL_BOUND + tol
    gap = max(worst_value - CLASSICAL_BOUND, 0.0)

    weights = _simplex_weights(targets, tol)
    if feasible and weights is None:
        raise RuntimeError(
            f"facet oracle says feasible (max facet {worst_value!r}) but no weights found"
        )
    if not feasible and weights is not None:
        residual = max(abs(x - y) for x, y in zip(reconstruct_targets(weights), targets))
        raise RuntimeError(
            f"facet oracle says infeasible (max facet {worst_value!r}) but simplex "
            f"found weights with residual {residual!r}"
        )

    if feasible:
        return PolytopeCertificate(feasible=True, gap=gap, weights=weights)
    return PolytopeCertificate(
        feasible=False, gap=gap, violated_facet=(worst_signs, worst_value)
    )
