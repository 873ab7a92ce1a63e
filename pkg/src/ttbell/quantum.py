"""Quantum statistics of two sequential spin measurements on one particle.

A spin-1/2 particle is emitted polarized along x, analyzed along angle ``a``
(xz-plane, measured from the z-axis) at the first time slot and along ``b``
at the second.  With outcomes A, B = +/-1 the joint distribution is

    P(A, B | a, b) = (1/4) (1 + A sin a) [1 + A B cos(a - b)]

which this module evaluates both in that closed form and by composing
squared overlaps of the explicit spin states (the two routes cross-check
each other).  Marginals, conditionals, the ideal two-time correlator
cos(a - b) and the dichotomic-moment identities used by the hidden-variable
analysis are provided as well.

All functions are pure; angles are radians, restricted to the xz-plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

OUTCOMES = (1, -1)
PROB_TOL = 1e-12


class InvalidStateError(ValueError):
    """A spin state failed its normalization contract."""


class UndefinedConditionalError(ValueError):
    """Conditioning event has zero (or non-positive) probability."""


def clamp_probability(p: float, tol: float = PROB_TOL) -> float:
    """Snap float noise at the edges of [0, 1]; reject anything worse.

    Values in [-tol, 0) and (1, 1+tol] are rounding dust and are clamped;
    excursions beyond tol indicate a logic error and raise.
    """
    if -tol <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + tol:
        return 1.0
    if p < 0.0 or p > 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1] beyond tolerance {tol}")
    return p


def _check_outcome(value: int, name: str = "outcome") -> int:
    if value not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {value!r}")
    return value


@dataclass(frozen=True)
class SpinState:
    """Spinor in the sigma_z basis: amp_plus |z+> + amp_minus |z->."""

    amp_plus: complex
    amp_minus: complex

    @property
    def norm_sq(self) -> float:
        return abs(self.amp_plus) ** 2 + abs(self.amp_minus) ** 2


@dataclass(frozen=True)
class JointDistribution:
    """Probabilities of the four (A, B) outcome pairs of one run."""

    pp: float  # A=+1, B=+1
    pm: float  # A=+1, B=-1
    mp: float  # A=-1, B=+1
    mm: float  # A=-1, B=-1

    def prob(self, a_outcome: int, b_outcome: int) -> float:
        _check_outcome(a_outcome, "A")
        _check_outcome(b_outcome, "B")
        if a_outcome == 1:
            return self.pp if b_outcome == 1 else self.pm
        return self.mp if b_outcome == 1 else self.mm

    def items(self):
        yield (1, 1), self.pp
        yield (1, -1), self.pm
        yield (-1, 1), self.mp
        yield (-1, -1), self.mm

    @property
    def total(self) -> float:
        return self.pp + self.pm + self.mp + self.mm

    def correlator(self) -> float:
        return self.pp - self.pm - self.mp + self.mm


@dataclass(frozen=True)
class Moments:
    """First and second dichotomic moments of a two-time run.

    ``mean_t2`` is the second-slot mean for a *given* first-slot setting
    (the first analyzer re-prepares the spin, so it enters even without
    conditioning on the first outcome).
    """

    mean_t1: float
    mean_t2: float
    correlator: float


def basis_state(theta: float, sign: int) -> SpinState:
    """Eigenstate of the spin component along ``theta`` with eigenvalue ``sign``.

    +1 maps to (cos t/2, sin t/2), -1 to (-sin t/2, cos t/2); both are
    real-valued unit spinors.
    """
    _check_outcome(sign)
    half = 0.5 * theta
    c, s = math.cos(half), math.sin(half)
    if sign == 1:
        return SpinState(complex(c), complex(s))
    return SpinState(complex(-s), complex(c))


def initial_state() -> SpinState:
    """Source state: polarized along +x, (|z+> + |z->)/sqrt(2)."""
    r = math.sqrt(0.5)
    return SpinState(complex(r), complex(r))


def overlap_prob(psi: SpinState, phi: SpinState, norm_tol: float = 1e-9) -> float:
    """|<psi|phi>|^2 for unit-normalized states."""
    for state in (psi, phi):
        if abs(state.norm_sq - 1.0) > norm_tol:
            raise InvalidStateError(
                f"state norm^2 = {state.norm_sq!r} deviates from 1 beyond {norm_tol}"
            )
    inner = (
        psi.amp_plus.conjugate() * phi.amp_plus
        + psi.amp_minus.conjugate() * phi.amp_minus
    )
    return clamp_probability(abs(inner) ** 2)


def quantum_joint(a: float, b: float, mode: str = "closed_form") -> JointDistribution:
    """Joint distribution of (A, B) for settings (a, b).

    ``closed_form`` evaluates the product formula directly; ``amplitude``
    composes |<psi0|phi_A(a)>|^2 |<phi_A(a)|phi_B(b)>|^2.  The two agree to
    1e-12 and the amplitude route is kept as the independent oracle.
    """
    if mode == "closed_form":
        sa = math.sin(a)
        c = math.cos(a - b)
        probs = {
            (A, B): clamp_probability(0.25 * (1.0 + A * sa) * (1.0 + A * B * c))
            for A in OUTCOMES
            for B in OUTCOMES
        }
    elif mode == "amplitude":
        psi0 = initial_state()
        probs = {}
        for A in OUTCOMES:
            phi_a = basis_state(a, A)
            first = overlap_prob(psi0, phi_a)
            for B in OUTCOMES:
                probs[(A, B)] = clamp_probability(first * overlap_prob(phi_a, basis_state(b, B)))
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'closed_form' or 'amplitude'")
    return JointDistribution(probs[(1, 1)], probs[(1, -1)], probs[(-1, 1)], probs[(-1, -1)])


def marginal_t1(a: float, a_outcome: int) -> float:
    """P(A | a) = (1/2)(1 + A sin a); the b-sum of the joint."""
    _check_outcome(a_outcome, "A")
    return clamp_probability(0.5 * (1.0 + a_outcome * math.sin(a)))


def marginal_t2(a: float, b: float, b_outcome: int) -> float:
    """P(B | a, b) = (1/2)[1 + B sin a cos(a - b)], regardless of A.

    Depends on the *first* setting: the second-slot statistics remember the
    re-preparation at the first analyzer.
    """
    _check_outcome(b_outcome, "B")
    return clamp_probability(0.5 * (1.0 + b_outcome * math.sin(a) * math.cos(a - b)))


def conditional_t2(a: float, b: float, a_outcome: int, b_outcome: int) -> float:
    """P(B | a, b, A) = (1/2)[1 + A B cos(a - b)].

    Defined only when the first-slot outcome has nonzero probability.
    """
    _check_outcome(a_outcome, "A")
    _check_outcome(b_outcome, "B")
    if marginal_t1(a, a_outcome) == 0.0:
        raise UndefinedConditionalError(
            f"P(A={a_outcome:+d} | a={a!r}) = 0; conditional at t2 undefined"
        )
    return clamp_probability(0.5 * (1.0 + a_outcome * b_outcome * math.cos(a - b)))


def ideal_correlator(a: float, b: float) -> float:
    """<sigma_a sigma_b> = cos(a - b) for perfect detection."""
    return math.cos(a - b)


def quantum_moments(a: float, b: float) -> Moments:
    """The three dichotomic moments of the joint at (a, b)."""
    return Moments(
        mean_t1=math.sin(a),
        mean_t2=math.sin(a) * math.cos(a - b),
        correlator=ideal_correlator(a, b),
    )


def conditional_from_moments(m: Moments, a_outcome: int, b_outcome: int) -> float:
    """Conditional P(B | A) reconstructed from dichotomic moments.

    For observables valued +/-1,
        P(B|A) = (1/2) [1 + (B m2 + A B m12) / (1 + A m1)].
    Raises when the conditioning weight 1 + A m1 is not positive.
    """
    _check_outcome(a_outcome, "A")
    _check_outcome(b_outcome, "B")
    denom = 1.0 + a_outcome * m.mean_t1
    if denom <= 0.0:
        raise UndefinedConditionalError(
            f"1 + A<t1-mean> = {denom!r} is not positive; conditional undefined"
        )
    num = b_outcome * m.mean_t2 + a_outcome * b_outcome * m.correlator
    return clamp_probability(0.5 * (1.0 + num / denom))


def t2_mean_identity(a: float, b: float) -> tuple[float, float]:
    """Both sides of <sigma_b>_a = <sigma_a><sigma_a sigma_b>.

    The left side is the t2 mean read off the t2 marginal, the right side
    the product of the t1 mean and the correlator, each assembled from its
    own route through the distributions.  For this preparation they agree
    identically in (a, b).
    """
    lhs = sum(B * marginal_t2(a, b, B) for B in OUTCOMES)
    mean_t1 = sum(A * marginal_t1(a, A) for A in OUTCOMES)
    joint = quantum_joint(a, b)
    rhs = mean_t1 * joint.correlator()
    return lhs, rhs
