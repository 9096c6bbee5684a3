"""Family parameters, derived constants and the defining polynomials.

The curve of the family is built from

    g1(z) = (z - lam)(z + 1)(z - lam1)(z + lam2)
    g2(z) = (z + lam)(z - 1)(z + lam1)(z - lam2) = g1(-z)

with ``g1 + g2 = 2 (z^2 - a^2)(z^2 - b^2)``.  Besides ``a`` and ``b`` this
module provides cancellation-free forms of the small differences that the
period integrands need near the degenerate corners of parameter space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

#: Minimal gaps ``lam1 - 1`` and ``lam2 - lam1`` accepted at construction.
PARAM_MARGIN = 1e-12


@dataclass(frozen=True)
class FamilyParams:
    """The triple ``0 < lam < 1 < lam1 < lam2``."""

    lam: float
    lam1: float
    lam2: float

    def __post_init__(self):
        lam, lam1, lam2 = float(self.lam), float(self.lam1), float(self.lam2)
        if not all(math.isfinite(v) for v in (lam, lam1, lam2)):
            raise DomainError(f"non-finite parameters {self!r}")
        if not 0.0 < lam < 1.0:
            raise DomainError(f"lambda must lie in (0, 1), got {lam}")
        if lam1 - 1.0 < PARAM_MARGIN:
            raise DomainError(f"lambda1 must exceed 1, got {lam1}")
        if lam2 - lam1 < PARAM_MARGIN:
            raise DomainError(f"lambda2 must exceed lambda1, got {lam2} <= {lam1}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "lam1", lam1)
        object.__setattr__(self, "lam2", lam2)

    def as_tuple(self):
        return (self.lam, self.lam1, self.lam2)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants of ``g1 + g2 = 2 (z^2 - a^2)(z^2 - b^2)``.

    ``one_minus_a2``, ``b2_minus_1`` and ``b2_minus_lam1sq`` are evaluated
    from factored identities so they keep full relative accuracy when the
    corresponding gap closes.
    """

    alpha: float
    a: float
    b: float
    discriminant: float
    a2: float = field(repr=False)
    b2: float = field(repr=False)
    one_minus_a2: float = field(repr=False)
    b2_minus_1: float = field(repr=False)
    b2_minus_lam1sq: float = field(repr=False)


def alpha_of(lam, lam1, lam2):
    return lam + lam1 - lam2 - lam * lam1 + lam * lam2 + lam1 * lam2


def derive_constants(params: FamilyParams) -> DerivedConstants:
    lam, lam1, lam2 = params.as_tuple()
    alpha = alpha_of(lam, lam1, lam2)
    prod = lam * lam1 * lam2
    disc = alpha * alpha - 4.0 * prod
    if not disc > 0.0:
        raise DomainError(f"discriminant {disc!r} <= 0 for {params!r}")
    root = math.sqrt(disc)
    # a^2 = (alpha - root)/2 without the subtraction
    a2 = 2.0 * prod / (alpha + root)
    b2 = 0.5 * (alpha + root)

    # (lam1^2 - a^2)(lam1^2 - b^2) = g2(lam1)/2 and (1 - a^2)(1 - b^2) = g1(1)/2
    direct = 1.0 - a2
    lam1sq_minus_1 = (lam1 - 1.0) * (lam1 + 1.0)
    lam1sq_minus_a2 = lam1sq_minus_1 + direct
    b2_minus_lam1sq = lam1 * (lam1 + lam) * (lam1 - 1.0) * (lam2 - lam1) / lam1sq_minus_a2
    b2_minus_1 = b2_minus_lam1sq + lam1sq_minus_1
    if direct < b2_minus_1:
        one_minus_a2 = (1.0 - lam) * (lam1 - 1.0) * (1.0 + lam2) / b2_minus_1
        lam1sq_minus_a2 = lam1sq_minus_1 + one_minus_a2
        b2_minus_lam1sq = lam1 * (lam1 + lam) * (lam1 - 1.0) * (lam2 - lam1) / lam1sq_minus_a2
        b2_minus_1 = b2_minus_lam1sq + lam1sq_minus_1
    else:
        one_minus_a2 = direct
    return DerivedConstants(
        alpha=alpha,
        a=math.sqrt(a2),
        b=math.sqrt(b2),
        discriminant=disc,
        a2=a2,
        b2=b2,
        one_minus_a2=one_minus_a2,
        b2_minus_1=b2_minus_1,
        b2_minus_lam1sq=b2_minus_lam1sq,
    )


def eval_g(which, z, params: FamilyParams):
    """Evaluate ``g1`` or ``g2`` at ``z`` (scalar or array)."""
    lam, lam1, lam2 = params.as_tuple()
    if which == "g1":
        return (z - lam) * (z + 1.0) * (z - lam1) * (z + lam2)
    if which == "g2":
        return (z + lam) * (z - 1.0) * (z + lam1) * (z - lam2)
    raise ValueError(f"which must be 'g1' or 'g2', got {which!r}")


def g_sum_factored(z, consts: DerivedConstants):
    """Right-hand side ``2 (z^2 - a^2)(z^2 - b^2)``."""
    z2 = z * z
    return 2.0 * (z2 - consts.a2) * (z2 - consts.b2)


@dataclass
class CheckItem:
    name: str
    lhs: float
    rhs: float
    residual: float
    passed: bool


@dataclass
class IdentityReport:
    identities: list
    inequalities: list

    @property
    def max_residual(self):
        return max(item.residual for item in self.identities)

    @property
    def passed(self):
        return all(i.passed for i in self.identities) and all(i.passed for i in self.inequalities)

    def sign_pattern(self):
        return tuple("+" if item.rhs > 0 else "-" for item in self.identities)


def check_lemma_ab(params: FamilyParams, tol=1e-12) -> IdentityReport:
    """Evaluate both sides of the four discriminant identities and the ordering chain.

    Residuals are normalised by the size of the cancelling terms,
    ``max(1, alpha^2, (alpha - c)^2)``.
    """
    lam, lam1, lam2 = params.as_tuple()
    alpha = alpha_of(lam, lam1, lam2)
    disc = alpha * alpha - 4.0 * lam * lam1 * lam2
    rows = [
        ("alpha-2lam", 2.0 * lam, -4.0 * lam * (1.0 - lam) * (lam2 - lam1), -1),
        ("alpha-2", 2.0, 4.0 * (1.0 - lam) * (lam1 - 1.0) * (1.0 + lam2), +1),
        ("alpha-2lam1^2", 2.0 * lam1 * lam1,
         4.0 * lam1 * (lam1 - 1.0) * (lam + lam1) * (lam2 - lam1), +1),
        ("alpha-2lam2^2", 2.0 * lam2 * lam2,
         -4.0 * lam2 * (lam2 - lam) * (1.0 + lam2) * (lam2 - lam1), -1),
    ]
    identities = []
    for name, shift, rhs, sign in rows:
        lhs = disc - (alpha - shift) ** 2
        scale = max(1.0, alpha * alpha, (alpha - shift) ** 2)
        res = abs(lhs - rhs) / scale
        identities.append(CheckItem(name, lhs, rhs, res, res < tol and np.sign(rhs) == sign))

    c = derive_constants(params)
    chain = [
        ("0<lam", 0.0, lam),
        ("lam<sqrt(lam)", lam, math.sqrt(lam)),
        ("sqrt(lam)<a", math.sqrt(lam), c.a),
        ("a<1", c.a, 1.0),
        ("1<lam1", 1.0, lam1),
        ("lam1<b", lam1, c.b),
        ("b<lam2", c.b, lam2),
    ]
    inequalities = [CheckItem(n, lo, hi, hi - lo, lo < hi) for n, lo, hi in chain]
    return IdentityReport(identities, inequalities)
