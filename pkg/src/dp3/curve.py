"""The genus-3 double cover ``g2(z) w^2 = g1(z)`` and its Weierstrass data.

Sheet convention: the z-plane cut along ``[lam, 1]``, ``[lam1, lam2]``,
``[-1, -lam]`` and ``[-lam2, -lam1]`` carries the branch with ``w(inf) = +1``
(:func:`dp3.kernels.sheet_w`).  Points on a cut take the limit from the upper
half-plane.  Along paths that cross cuts, ``w`` is carried by continuation:
at each step the root of ``g1/g2`` closest to the previous value is chosen.

Homology loops are stadiums around ``[lam, 1]``, ``[1, lam1]`` and
``[lam1, lam2]``, traversed counterclockwise from their rightmost point and
lifted so that their upper half lies on the ``w(inf) = +1`` sheet.  With this
lift ``Re int_{gamma1} phi2 = -v2``, ``Re int_{gamma2} phi1 = -2 xi1`` and
``Re int_{gamma3} phi2 = -2 xi2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import FamilyParams, derive_constants, eval_g
from .errors import AmbiguousHint, BranchPointError, EndSingularity, GeometryError
from .kernels import forms_at, sheet_w

BRANCH_TOL = 1e-12
AMBIGUITY_TOL = 1e-14
#: continuation step rule: refine until |dw| < STEP_RATIO * |w|
STEP_RATIO = 0.1


@dataclass(frozen=True)
class CurvePoint:
    z: complex
    w: complex

    def residual(self, params: FamilyParams) -> float:
        """Scaled defect ``|g2 w^2 - g1| / (1 + |g1| + |g2|)``."""
        g1 = eval_g("g1", self.z, params)
        g2 = eval_g("g2", self.z, params)
        return abs(g2 * self.w * self.w - g1) / (1.0 + abs(g1) + abs(g2))

    def is_valid(self, params: FamilyParams, tol=1e-9) -> bool:
        return self.residual(params) <= tol


@dataclass(frozen=True)
class BranchData:
    branch_points: tuple  # ((value, "g1" | "g2"), ...)
    cuts: tuple  # ((lo, hi), ...)


def branch_data(params: FamilyParams) -> BranchData:
    lam, lam1, lam2 = params.as_tuple()
    points = (
        (-lam2, "g1"), (-lam1, "g2"), (-1.0, "g1"), (-lam, "g2"),
        (lam, "g1"), (1.0, "g2"), (lam1, "g1"), (lam2, "g2"),
    )
    cuts = ((-lam2, -lam1), (-1.0, -lam), (lam, 1.0), (lam1, lam2))
    return BranchData(points, cuts)


def branch_values(params: FamilyParams) -> np.ndarray:
    lam, lam1, lam2 = params.as_tuple()
    return np.array([-lam2, -lam1, -1.0, -lam, lam, 1.0, lam1, lam2])


def w_on_sheet(z, params: FamilyParams):
    """Vectorised ``w`` on the ``w(inf) = +1`` sheet."""
    return sheet_w(np.asarray(z, dtype=complex), *params.as_tuple())


def _pick_root(w0, hint):
    dp = abs(w0 - hint)
    dm = abs(w0 + hint)
    if abs(dp - dm) <= AMBIGUITY_TOL * (abs(w0) + abs(hint)):
        raise AmbiguousHint(f"roots {w0!r} and {-w0!r} equidistant from hint {hint!r}")
    return w0 if dp < dm else -w0


def lift_w(z, w_hint, params: FamilyParams) -> complex:
    """Root of ``g1(z)/g2(z)`` closest to ``w_hint``."""
    z = complex(z)
    if np.min(np.abs(branch_values(params) - z)) <= BRANCH_TOL:
        raise BranchPointError(f"z={z!r} is a branch point")
    return _pick_root(complex(sheet_w(z, *params.as_tuple())), complex(w_hint))


def continue_w(zs, w_start, params: FamilyParams, step_ratio=STEP_RATIO, min_step=1e-13):
    """Continue ``w`` from ``(zs[0], w_start)`` along the polyline ``zs``.

    Intermediate points are inserted until every step satisfies
    ``|dw| < step_ratio * |w|``.  Returns ``w`` at the given points.
    """
    zs = np.asarray(zs, dtype=complex)
    out = np.empty(zs.size, dtype=complex)
    out[0] = lift_w(zs[0], w_start, params)
    for k in range(1, zs.size):
        out[k] = _continue_segment(zs[k - 1], zs[k], out[k - 1], params, step_ratio, min_step)
    return out


def _continue_segment(z0, z1, w0, params, step_ratio, min_step):
    w1 = lift_w(z1, w0, params)
    if abs(w1 - w0) < step_ratio * abs(w1):
        return w1
    if abs(z1 - z0) < min_step:
        raise AmbiguousHint(f"continuation step below {min_step} near z={z0!r}")
    zm = 0.5 * (z0 + z1)
    wm = _continue_segment(z0, zm, w0, params, step_ratio, min_step)
    return _continue_segment(zm, z1, wm, params, step_ratio, min_step)


# --------------------------------------------------------------------------
# Weierstrass forms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FormValues:
    """Coefficients of ``dz`` in (phi1, phi2, phi3), plus ``G`` and ``dh``."""

    phi1: complex
    phi2: complex
    phi3: complex
    G: complex
    dh: complex


def eval_forms(p: CurvePoint, params: FamilyParams, end_radius=0.0) -> FormValues:
    consts = derive_constants(params)
    z = complex(p.z)
    if min(abs(z - consts.a), abs(z + consts.a)) <= end_radius or z * z == consts.a2:
        raise EndSingularity(f"z={z!r} within {end_radius} of an end")
    phi1, phi2, phi3, _ = forms_at(z, complex(p.w), consts.a2)
    return FormValues(complex(phi1), complex(phi2), complex(phi3), complex(p.w), complex(phi3))


def phi2_reduced(p: CurvePoint, params: FamilyParams) -> complex:
    """``i (z^2 - b^2) / (g2(z) w)``: phi2 with the end poles cancelled."""
    consts = derive_constants(params)
    return 1j * (p.z * p.z - consts.b2) / (eval_g("g2", p.z, params) * p.w)


# --------------------------------------------------------------------------
# automorphisms
# --------------------------------------------------------------------------

#: tau^*(phi_k) = sign_k * conj(phi_k)
PULLBACK_SIGNS = {
    "tau1": (-1, +1, +1),
    "tau2": (+1, -1, +1),
    "tau3": (+1, +1, -1),
}


def apply_automorphism(tau: str, p: CurvePoint) -> CurvePoint:
    z, w = complex(p.z), complex(p.w)
    if tau == "tau1":
        return CurvePoint(z.conjugate(), -w.conjugate())
    if tau == "tau2":
        return CurvePoint(z.conjugate(), w.conjugate())
    if tau == "tau3":
        if w == 0:
            raise ZeroDivisionError("tau3 undefined where w = 0")
        return CurvePoint(-z.conjugate(), 1.0 / w.conjugate())
    raise ValueError(f"unknown automorphism {tau!r}")


# --------------------------------------------------------------------------
# paths
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex

    def point(self, s):
        return self.z0 + (self.z1 - self.z0) * s

    def velocity(self, s):
        return np.full(np.shape(s), self.z1 - self.z0, dtype=complex)

    @property
    def length(self):
        return abs(self.z1 - self.z0)

    def reversed(self):
        return Line(self.z1, self.z0)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        return self.center + self.radius * np.exp(1j * th)

    def velocity(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    @property
    def length(self):
        return abs(self.theta1 - self.theta0) * self.radius

    def reversed(self):
        return Arc(self.center, self.radius, self.theta1, self.theta0)


def path_points(segments, n=64):
    """Dense polyline sampling of a segment list (for continuation oracles)."""
    s = np.linspace(0.0, 1.0, n + 1)
    pts = [segments[0].point(s[:1])]
    for seg in segments:
        pts.append(seg.point(s[1:]))
    return np.concatenate(pts)


def reverse_path(segments):
    return [seg.reversed() for seg in reversed(segments)]


@dataclass
class HomologyLoop:
    label: str
    interval: tuple
    clearance: float
    segments: list = field(repr=False)
    start: complex = 0j
    start_w: complex = 0j


LOOP_INTERVALS = {"gamma1": 0, "gamma2": 1, "gamma3": 2}
CLEARANCE_FACTOR = 0.5


def _stadium(lo, hi, c):
    return [
        Arc(complex(hi), c, 0.0, 0.5 * math.pi),
        Line(complex(hi, c), complex(lo, c)),
        Arc(complex(lo), c, 0.5 * math.pi, 1.5 * math.pi),
        Line(complex(lo, -c), complex(hi, -c)),
        Arc(complex(hi), c, 1.5 * math.pi, 2.0 * math.pi),
    ]


def homology_loop(label: str, params: FamilyParams) -> HomologyLoop:
    """Stadium loop winding once counterclockwise around its interval.

    The clearance is half the distance from the interval to the nearest
    branch point or end puncture it must not enclose.
    """
    if label not in LOOP_INTERVALS:
        raise ValueError(f"unknown loop {label!r}")
    lam, lam1, lam2 = params.as_tuple()
    lo, hi = [(lam, 1.0), (1.0, lam1), (lam1, lam2)][LOOP_INTERVALS[label]]
    a = derive_constants(params).a
    special = np.concatenate([branch_values(params), [-a, a]])
    outside = special[(special < lo) | (special > hi)]
    gap = np.min(np.maximum(lo - outside, outside - hi))
    c = CLEARANCE_FACTOR * float(gap)
    if c < 1e-8:
        raise GeometryError(f"clearance {c} too small for {label}")
    start = complex(hi + c, 0.0)
    return HomologyLoop(label, (lo, hi), c, _stadium(lo, hi, c), start, complex(w_on_sheet(start, params)))


def end_loop(z_end_sign: int, sheet_sign: int, params: FamilyParams, radius=None):
    """Counterclockwise circle around the end over ``z = z_end_sign * a``.

    Starts at the top of the circle with ``w = sheet_sign * w_sheet``.  The
    enclosed puncture is ``(±a, w_end)`` with ``w_end`` the limit of the
    continued ``w`` at the centre (``±i``).
    """
    c = derive_constants(params)
    lam = params.lam
    centre = z_end_sign * c.a
    if radius is None:
        radius = 0.5 * min(c.a - lam, 1.0 - c.a)
    start = complex(centre, radius)
    seg = Arc(complex(centre), radius, 0.5 * math.pi, 2.5 * math.pi)
    w0 = sheet_sign * complex(w_on_sheet(start, params))
    return [seg], start, w0
