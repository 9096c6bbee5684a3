"""Endpoint-singular real quadrature and contour integration of the forms.

Real integrals with inverse-square-root endpoint behaviour use a nested
tanh-sinh rule (step halved per level; error estimate = change between
levels).  Contour integrals use adaptive Gauss-Kronrod (7,15) with the
square root carried by continuation across cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .algebra import FamilyParams, derive_constants
from .curve import STEP_RATIO, _pick_root, w_on_sheet
from .errors import AmbiguousHint, NoConvergence, SheetJump

EPS = np.finfo(float).eps
MIN_LEVEL = 3


@dataclass(frozen=True)
class SingularIntegral:
    """``integrand(x, dlo, dhi)`` on ``[lo, hi]``; ``dlo = x - lo``, ``dhi = hi - x``
    are supplied exactly so vanishing factors can be formed without cancellation."""

    integrand: Callable
    lo: float
    hi: float
    endpoint_orders: tuple = (-0.5, -0.5)
    target_tol: float = 1e-12

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        for order in self.endpoint_orders:
            if order not in (-0.5, 0, 0.0):
                raise ValueError(f"unsupported endpoint order {order}")


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float
    error_estimate: float
    evaluations: int


def _converged(err, abs_sum, tol):
    # a level change at the roundoff floor of the sum is as good as it gets
    return (err <= tol) | (err <= 64.0 * EPS * abs_sum)


def integrate_endpoint_singular(spec: SingularIntegral, max_level=kernels.TS_MAX_LEVEL) -> QuadratureResult:
    """tanh-sinh quadrature of ``spec``; raises NoConvergence if levels run out."""
    lo, hi = float(spec.lo), float(spec.hi)
    half = 0.5 * (hi - lo)
    total = 0.0
    abs_total = 0.0
    prev = None
    nevals = 0
    for level in range(max_level + 1):
        comp, weight = kernels.TS_TABLE[level]
        d = half * comp
        d = d[d > 0.0]
        weight = weight[: d.size]
        far = 2.0 * half - d
        f_hi = np.asarray(spec.integrand(hi - d, far, d))
        f_lo = np.asarray(spec.integrand(lo + d, d, far))
        total = total + half * np.sum((f_hi + f_lo) * weight)
        abs_total += half * np.sum((np.abs(f_hi) + np.abs(f_lo)) * weight)
        nevals += 2 * d.size
        if level == 0:
            f0 = spec.integrand(np.array([lo + half]), np.array([half]), np.array([half]))[0]
            total = total + half * kernels._HALF_PI * f0
            abs_total += half * kernels._HALF_PI * abs(f0)
            nevals += 1
        value = total * 2.0 ** -level
        if not np.isfinite(value):
            raise NoConvergence(f"non-finite tanh-sinh sum on [{lo}, {hi}]")
        if prev is not None:
            err = abs(value - prev)
            if level >= MIN_LEVEL and _converged(err, abs_total * 2.0 ** -level, spec.target_tol):
                return QuadratureResult(value, float(err), nevals)
        prev = value
    raise NoConvergence(f"tanh-sinh did not reach {spec.target_tol} on [{lo}, {hi}]")


def period_rows(params_list):
    """Parameter rows for :func:`dp3.kernels.ts_level_sum`."""
    rows = np.empty((len(params_list), kernels.N_PARAM))
    for i, p in enumerate(params_list):
        c = derive_constants(p)
        rows[i] = (p.lam, p.lam1, p.lam2, c.one_minus_a2, c.b2_minus_lam1sq, c.b2_minus_1)
    return rows


def integrate_period_batch(kind, rows, tol=1e-12, backend=None, max_level=kernels.TS_MAX_LEVEL):
    """Batched tanh-sinh for the period integrands; rows refine independently.

    Returns ``(values, errors)``.  Raises NoConvergence listing the rows that
    did not converge.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    M = rows.shape[0]
    sums = np.zeros(M)
    abs_sums = np.zeros(M)
    values = np.full(M, np.nan)
    errors = np.full(M, np.nan)
    prev = np.full(M, np.nan)
    active = np.arange(M)
    for level in range(max_level + 1):
        if active.size == 0:
            break
        s, sa = kernels.ts_level_sum(kind, rows[active], level, backend)
        sums[active] += s
        abs_sums[active] += sa
        cur = sums[active] * 2.0 ** -level
        err = np.abs(cur - prev[active])
        if level >= MIN_LEVEL:
            done = _converged(err, abs_sums[active] * 2.0 ** -level, tol) & np.isfinite(cur)
            values[active[done]] = cur[done]
            errors[active[done]] = err[done]
            active = active[~done]
            cur = cur[~done]
        prev[active] = cur
    if active.size:
        raise NoConvergence(f"period quadrature unconverged for rows {active.tolist()}: {rows[active]}")
    return values, errors


# --------------------------------------------------------------------------
# contour integration with sheet tracking
# --------------------------------------------------------------------------

MIN_PIECE = 1e-13


@dataclass(frozen=True)
class ContourResult:
    values: np.ndarray  # (3,) complex: integrals of phi1, phi2, phi3
    error: float
    w_end: complex
    evaluations: int


def _track(w_raw, hint):
    """Continue through the sampled roots; returns signed values or None if a step is too large."""
    out = np.empty_like(w_raw)
    prev = hint
    for k in range(w_raw.size):
        try:
            cur = _pick_root(w_raw[k], prev)
        except AmbiguousHint:
            return None
        if abs(cur - prev) >= STEP_RATIO * abs(cur) + 1e-300:
            return None
        out[k] = cur
        prev = cur
    return out


def integrate_contour(segments, start_w, params: FamilyParams, tol=1e-10, min_piece=MIN_PIECE) -> ContourResult:
    """Integrate (phi1, phi2, phi3) along ``segments`` starting on ``start_w``.

    Pieces are bisected until the Kronrod/Gauss difference is below
    ``tol * (1 + |value|)`` and the continued ``w`` moves by less than 10 %
    between consecutive nodes.  Pieces are summed left to right.
    """
    lam, lam1, lam2 = params.as_tuple()
    a2 = derive_constants(params).a2
    total = np.zeros(3, dtype=complex)
    err_total = 0.0
    nevals = 0
    w = complex(start_w)
    for seg in segments:
        length = seg.length
        stack = [(0.0, 1.0)]
        while stack:
            s0, s1 = stack.pop()
            half = 0.5 * (s1 - s0)
            s = 0.5 * (s0 + s1) + half * kernels.GK_X
            z = seg.point(s)
            dz = seg.velocity(s) * half
            nevals += 15
            tracked = _track(kernels.sheet_w(z, lam, lam1, lam2), w)
            ok = tracked is not None
            if ok:
                p1, p2, p3, _ = kernels.forms_at(z, tracked, a2)
                f = np.stack([p1 * dz, p2 * dz, p3 * dz])
                val = f @ kernels.GK_W
                err = float(np.max(np.abs(val - f @ kernels.GK_WG15)))
                ok = err <= tol * (1.0 + float(np.max(np.abs(val))))
            if not ok and (s1 - s0) * length > min_piece:
                stack.append((0.5 * (s0 + s1), s1))
                stack.append((s0, 0.5 * (s0 + s1)))
                continue
            if tracked is None:
                raise SheetJump(f"sheet tracking failed near z={seg.point(s0)!r}")
            total += val
            err_total += err
            end = seg.point(np.array([s1]))[0]
            w = _pick_root(complex(w_on_sheet(end, params)), tracked[-1])
    return ContourResult(total, err_total, w, nevals)


# --------------------------------------------------------------------------
# batched straight edges on the sheet (mesh integration)
# --------------------------------------------------------------------------


@dataclass
class EdgeIntegrals:
    values: np.ndarray  # (n, 4): phi1, phi2, phi3, arclength
    errors: np.ndarray
    pieces: int


def integrate_edges(t0, t1, z0, z1, sing0, sing1, params: FamilyParams, tol=1e-12, max_depth=40,
                    backend=None):
    """Integrate the forms along edges that are straight in ``t = log((z - a)/(z + a))``.

    ``t0``/``t1`` are the end coordinates and ``z0``/``z1`` the matching
    points (``inf`` allowed at ``t = 0``).  Edges ending on a branch point
    (``sing0``/``sing1``) are integrated in ``s`` with
    ``t = t_branch + (t_other - t_branch) s^2``.  Pieces are bisected until
    ``err <= tol * (1 + |value|)``; piece sums are accumulated in piece
    order for determinism.
    """
    t0 = np.asarray(t0, dtype=complex)
    t1 = np.asarray(t1, dtype=complex)
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    sing0 = np.asarray(sing0, dtype=bool)
    sing1 = np.asarray(sing1, dtype=bool)
    n = t0.size
    lam, lam1, lam2 = params.as_tuple()
    a = derive_constants(params).a
    e0 = _exact_exp(t0, z0, a)
    e1 = _exact_exp(t1, z1, a)

    # anchor at the singular end, never at the point at infinity
    flip = (sing1 & ~sing0) | ~np.isfinite(z0)
    both = sing0 & sing1
    tm = 0.5 * (t0 + t1)
    owner = np.concatenate([np.arange(n), np.flatnonzero(both)])
    sign = np.concatenate([np.where(flip, -1.0, 1.0), -np.ones(int(both.sum()))])
    z_anchor = np.concatenate([np.where(flip, z1, z0), z1[both]])
    e_anchor = np.concatenate([np.where(flip, e1, e0), e1[both]])
    t_start = np.concatenate([np.where(flip, t1, t0), t1[both]])
    t_end = np.concatenate([np.where(flip, t0, np.where(both, tm, t1)), tm[both]])
    quad = np.concatenate([sing0 | sing1, np.ones(int(both.sum()), dtype=bool)])
    delta = t_end - t_start
    s_lo = np.zeros(owner.size)
    s_hi = np.ones(owner.size)

    values = np.zeros((n, 4), dtype=complex)
    errors = np.zeros(n)
    pieces = 0
    idx = np.arange(owner.size)
    for depth in range(max_depth + 1):
        vals, errs = kernels.gk_segments(z_anchor[idx], e_anchor[idx], delta[idx], quad[idx], s_lo[idx],
                                          s_hi[idx], lam, lam1, lam2, a, backend)
        pieces += idx.size
        width = s_hi[idx] - s_lo[idx]
        scale = 1.0 + np.max(np.abs(vals[:, :3]), axis=1)
        good = errs <= tol * scale * np.maximum(width, 1e-3)
        if depth == max_depth and not np.all(good):
            raise NoConvergence(f"{int((~good).sum())} edge pieces unconverged")
        acc = idx[good]
        np.add.at(values, owner[acc], sign[acc, None] * vals[good])
        np.add.at(errors, owner[acc], errs[good])
        bad = idx[~good]
        if bad.size == 0:
            break
        mid = 0.5 * (s_lo[bad] + s_hi[bad])
        new = np.arange(owner.size, owner.size + bad.size)
        owner = np.concatenate([owner, owner[bad]])
        sign = np.concatenate([sign, sign[bad]])
        z_anchor = np.concatenate([z_anchor, z_anchor[bad]])
        e_anchor = np.concatenate([e_anchor, e_anchor[bad]])
        delta = np.concatenate([delta, delta[bad]])
        quad = np.concatenate([quad, quad[bad]])
        s_lo = np.concatenate([s_lo, mid])
        s_hi = np.concatenate([s_hi, s_hi[bad]])
        s_hi[bad] = mid
        idx = np.concatenate([bad, new])
    # arclength is unsigned
    values[:, 3] = np.abs(values[:, 3].real)
    return EdgeIntegrals(values, errors, pieces)


def _exact_exp(t, z, a):
    """``exp(t)`` with exact real values on the real axis of ``z``."""
    e = np.exp(t)
    real = np.isfinite(z) & (z.imag == 0.0)
    zr = z.real[real]
    e[real] = ((zr - a) / (zr + a)) + 0j
    return e
