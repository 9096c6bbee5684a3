"""Hot numeric kernels, each with a numba driver and a numpy twin.

The integrand and form evaluators below are written with plain arithmetic
and ``np.sqrt`` so the same source runs elementwise on numpy arrays and,
after ``njit``, on scalars inside the compiled loops.  ``BACKEND`` reports
which driver family is active; both families are importable regardless so
tests can compare them.
"""

import math

import numpy as np

from ._accel import BACKEND, HAS_NUMBA, njit, prange

# --------------------------------------------------------------------------
# tanh-sinh node tables
# --------------------------------------------------------------------------

TS_MAX_LEVEL = 10
_WEIGHT_FLOOR = 1e-300
_HALF_PI = 0.5 * math.pi


def _ts_nodes_at(t):
    """Abscissa complement ``1 - tanh(pi/2 sinh t)`` and weight for t >= 0."""
    x = _HALF_PI * np.sinh(t)
    e = np.exp(-2.0 * x)
    comp = 2.0 * e / (1.0 + e)
    # sech^2(x) = 4 e / (1 + e)^2
    weight = _HALF_PI * np.cosh(t) * 4.0 * e / (1.0 + e) ** 2
    return comp, weight


def _build_ts_table(max_level):
    t_hi = 1.0
    while _ts_nodes_at(np.array([t_hi]))[1][0] >= _WEIGHT_FLOOR:
        t_hi += 0.25
    levels = []
    for lev in range(max_level + 1):
        h = 2.0 ** -lev
        if lev == 0:
            t = np.arange(1, int(t_hi) + 2, dtype=float)
        else:
            t = h * (2 * np.arange(0, int(t_hi / h) + 2) + 1)
        comp, weight = _ts_nodes_at(t)
        keep = weight >= _WEIGHT_FLOOR
        levels.append((np.ascontiguousarray(comp[keep]), np.ascontiguousarray(weight[keep])))
    return levels


TS_TABLE = _build_ts_table(TS_MAX_LEVEL)

# --------------------------------------------------------------------------
# period integrands
#
# Parameter rows: (lam, lam1, lam2, one_minus_a2, b2_minus_lam1sq, b2_minus_1).
# Each integrand receives the abscissa t and its exact distances to the
# interval ends, so square-root factors vanishing at the ends never cancel.
# --------------------------------------------------------------------------

KIND_XI1 = 0
KIND_XI2 = 1
KIND_V2 = 2
N_PARAM = 6


def xi1_integrand(t, dlo, dhi, lam, lam1, lam2, one_minus_a2):
    """Integrand of xi1 on [1, lam1]."""
    tt1 = dlo * (t + 1.0)
    c3 = 1.0 - lam - lam1 + lam2
    num = t * (c3 * tt1 - (1.0 - lam) * (1.0 + lam2) * (lam1 - 1.0))
    rad = (t - lam) * (t + lam) * tt1 * (dhi * (lam1 + t)) * ((lam2 - lam1 + dhi) * (lam2 + t))
    return num / ((tt1 + one_minus_a2) * np.sqrt(rad))


def xi2_integrand(t, dlo, dhi, lam, lam1, lam2, b2_minus_lam1sq):
    """Integrand of xi2 on [lam1, lam2]."""
    tl1 = dlo * (t + lam1)
    rad = (t - lam) * (t + lam) * ((lam1 - 1.0 + dlo) * (t + 1.0)) * tl1 * (dhi * (lam2 + t))
    return (tl1 - b2_minus_lam1sq) / np.sqrt(rad)


def v2_integrand(t, dlo, dhi, lam, lam1, lam2, b2_minus_1):
    """Integrand of the horizontal period v2 on [lam, 1] (factor 2 included)."""
    one_t = dhi * (1.0 + t)
    rad = (dlo * (t + lam)) * one_t * ((lam1 - 1.0) * (lam1 + 1.0) + one_t) \
        * ((lam2 - 1.0) * (lam2 + 1.0) + one_t)
    return 2.0 * (b2_minus_1 + one_t) / np.sqrt(rad)


def period_interval(kind, lam, lam1, lam2):
    if kind == KIND_XI1:
        return 1.0, lam1
    if kind == KIND_XI2:
        return lam1, lam2
    return lam, 1.0


def _period_f(kind, t, dlo, dhi, row):
    lam, lam1, lam2 = row[0], row[1], row[2]
    if kind == KIND_XI1:
        return xi1_integrand(t, dlo, dhi, lam, lam1, lam2, row[3])
    if kind == KIND_XI2:
        return xi2_integrand(t, dlo, dhi, lam, lam1, lam2, row[4])
    return v2_integrand(t, dlo, dhi, lam, lam1, lam2, row[5])


def _ts_level_np(kind, P, comp, weight, with_center):
    """numpy twin: raw level sums (without the step factor h) and |f| sums."""
    lo, hi = period_interval(kind, P[:, 0], P[:, 1], P[:, 2])
    lo = np.broadcast_to(lo, P[:, 0].shape)[:, None]
    hi = np.broadcast_to(hi, P[:, 0].shape)[:, None]
    half = 0.5 * (hi - lo)
    rows = [P[:, j][:, None] for j in range(N_PARAM)]
    d = half * comp[None, :]
    far = 2.0 * half - d
    with np.errstate(divide="ignore", invalid="ignore"):
        f_hi = _period_f(kind, hi - d, far, d, rows)
        f_lo = _period_f(kind, lo + d, d, far, rows)
    ok = d > 0.0
    f_hi = np.where(ok, f_hi, 0.0)
    f_lo = np.where(ok, f_lo, 0.0)
    s = ((f_hi + f_lo) * weight[None, :]).sum(axis=1)
    sa = ((np.abs(f_hi) + np.abs(f_lo)) * weight[None, :]).sum(axis=1)
    if with_center:
        mid = 0.5 * (lo + hi)
        f0 = _period_f(kind, mid, half, half, rows)[:, 0]
        s = s + _HALF_PI * f0
        sa = sa + _HALF_PI * np.abs(f0)
    return s * half[:, 0], sa * half[:, 0]


if HAS_NUMBA:
    _xi1_nb = njit(cache=True)(xi1_integrand)
    _xi2_nb = njit(cache=True)(xi2_integrand)
    _v2_nb = njit(cache=True)(v2_integrand)

    @njit(cache=True)
    def _period_f_nb(kind, t, dlo, dhi, P, m):
        if kind == 0:
            return _xi1_nb(t, dlo, dhi, P[m, 0], P[m, 1], P[m, 2], P[m, 3])
        if kind == 1:
            return _xi2_nb(t, dlo, dhi, P[m, 0], P[m, 1], P[m, 2], P[m, 4])
        return _v2_nb(t, dlo, dhi, P[m, 0], P[m, 1], P[m, 2], P[m, 5])

    @njit(cache=True, parallel=True)
    def _ts_level_nb(kind, P, comp, weight, with_center):
        M = P.shape[0]
        out = np.empty(M)
        out_abs = np.empty(M)
        for m in prange(M):
            if kind == 0:
                lo, hi = 1.0, P[m, 1]
            elif kind == 1:
                lo, hi = P[m, 1], P[m, 2]
            else:
                lo, hi = P[m, 0], 1.0
            half = 0.5 * (hi - lo)
            s = 0.0
            sa = 0.0
            for k in range(comp.size):
                d = half * comp[k]
                if d <= 0.0:
                    continue
                far = 2.0 * half - d
                fh = _period_f_nb(kind, hi - d, far, d, P, m)
                fl = _period_f_nb(kind, lo + d, d, far, P, m)
                s += (fh + fl) * weight[k]
                sa += (abs(fh) + abs(fl)) * weight[k]
            if with_center:
                f0 = _period_f_nb(kind, 0.5 * (lo + hi), half, half, P, m)
                s += _HALF_PI * f0
                sa += _HALF_PI * abs(f0)
            out[m] = s * half
            out_abs[m] = sa * half
        return out, out_abs
else:
    _ts_level_nb = None


def ts_level_sum(kind, P, level, backend=None):
    """Sum of new tanh-sinh nodes at ``level`` for every parameter row in ``P``.

    Returns ``(sum, abs_sum)`` already scaled by the half-length but not by
    the step ``2**-level``.
    """
    comp, weight = TS_TABLE[level]
    P = np.ascontiguousarray(P, dtype=float)
    if (backend or BACKEND) == "numba":
        return _ts_level_nb(kind, P, comp, weight, level == 0)
    return _ts_level_np(kind, P, comp, weight, level == 0)


# --------------------------------------------------------------------------
# Weierstrass forms on the w(inf)=+1 sheet
# --------------------------------------------------------------------------


def sheet_w(z, lam, lam1, lam2):
    """Branch of ``sqrt(g1/g2)`` on the plane cut along the four real cuts.

    Each cut ``[p, q]`` contributes ``sqrt(z - p)/sqrt(z - q)`` with principal
    roots, so ``w -> +1`` at infinity.  Points exactly on a cut take the
    limit from the upper half-plane (imaginary part ``+0.0``).
    """
    z = z + 0j
    return (np.sqrt(z - lam) / np.sqrt(z - 1.0)) \
        * (np.sqrt(z - lam1) / np.sqrt(z - lam2)) \
        * (np.sqrt(z + 1.0) / np.sqrt(z + lam)) \
        * (np.sqrt(z + lam2) / np.sqrt(z + lam1))


def sheet_w_offset(base, dz, lam, lam1, lam2):
    """:func:`sheet_w` at ``base + dz`` with every factor formed as ``(base - p) + dz``.

    Keeps full relative accuracy when ``base`` is a branch point and ``dz`` is tiny.
    """
    base = base + 0j
    return (np.sqrt((base - lam) + dz) / np.sqrt((base - 1.0) + dz)) \
        * (np.sqrt((base - lam1) + dz) / np.sqrt((base - lam2) + dz)) \
        * (np.sqrt((base + 1.0) + dz) / np.sqrt((base + lam) + dz)) \
        * (np.sqrt((base + lam2) + dz) / np.sqrt((base + lam1) + dz))


GK_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
GK_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
GK_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
# full 15-point rule on [-1, 1]; Gauss weights live on the odd Kronrod slots
GK_X = np.concatenate([-GK_XK[:-1], GK_XK[::-1]])
GK_W = np.concatenate([GK_WK[:-1], GK_WK[::-1]])
GK_WG15 = np.zeros(15)
GK_WG15[1::2] = np.concatenate([GK_WG[:-1], GK_WG[::-1]])


def forms_at(z, w, a2):
    """(phi1, phi2, phi3) coefficients of dz and the metric density |ds/dz|."""
    dh = 1.0 / (z * z - a2)
    inv = 1.0 / w
    phi1 = 0.5 * (inv - w) * dh
    phi2 = 0.5j * (inv + w) * dh
    dens = 0.5 * (np.abs(inv) + np.abs(w)) * np.abs(dh)
    return phi1, phi2, dh, dens


def cexpm1(x):
    """``exp(x) - 1`` for complex ``x`` without cancellation near 0."""
    em = np.expm1(x.real)
    half_sin = np.sin(0.5 * x.imag)
    re = em * np.cos(x.imag) - 2.0 * half_sin * half_sin
    im = (em + 1.0) * np.sin(x.imag)
    return re + 1j * im


def strip_offset(z_anchor, e_anchor, dt, a):
    """``(z, z - z_anchor)`` at ``t_anchor + dt`` for ``z = a (1 + e^t) / (1 - e^t)``.

    ``e_anchor = exp(t_anchor)`` is passed exactly so that points on the real
    axis keep a zero imaginary part.
    """
    em = cexpm1(dt)
    et = e_anchor * (1.0 + em)
    dz = 2.0 * a * e_anchor * em / ((1.0 - et) * (1.0 - e_anchor))
    return z_anchor + dz, dz


def _gk_np(z_anchor, e_anchor, delta, quad, s_lo, s_hi, lam, lam1, lam2, a):
    half = 0.5 * (s_hi - s_lo)[:, None]
    s = 0.5 * (s_hi + s_lo)[:, None] + half * GK_X[None, :]
    quad_b = quad[:, None]
    dt = delta[:, None] * np.where(quad_b, s * s, s)
    jac = delta[:, None] * np.where(quad_b, 2.0 * s, 1.0) * half
    za = z_anchor[:, None]
    z, dz = strip_offset(za, e_anchor[:, None], dt, a)
    w = sheet_w_offset(za, dz, lam, lam1, lam2)
    inv = 1.0 / w
    c = jac / (2.0 * a)
    cols = (0.5 * (inv - w) * c, 0.5j * (inv + w) * c, c, 0.5 * (np.abs(inv) + np.abs(w)) * np.abs(c))
    vals = np.empty((z_anchor.size, 4), dtype=complex)
    errs = np.zeros(z_anchor.size)
    for j, g in enumerate(cols):
        k = g @ GK_W
        vals[:, j] = k
        errs = np.maximum(errs, np.abs(k - g @ GK_WG15))
    return vals, errs


if HAS_NUMBA:
    _sheet_w_nb = njit(cache=True)(sheet_w_offset)

    @njit(cache=True)
    def _cexpm1_nb(x):
        em = math.expm1(x.real)
        hs = math.sin(0.5 * x.imag)
        return complex(em * math.cos(x.imag) - 2.0 * hs * hs, (em + 1.0) * math.sin(x.imag))

    @njit(cache=True, parallel=True)
    def _gk_nb(z_anchor, e_anchor, delta, quad, s_lo, s_hi, lam, lam1, lam2, a, gx, gw, gwg):
        M = z_anchor.size
        vals = np.zeros((M, 4), dtype=np.complex128)
        errs = np.zeros(M)
        for m in prange(M):
            half = 0.5 * (s_hi[m] - s_lo[m])
            mid = 0.5 * (s_hi[m] + s_lo[m])
            za = z_anchor[m]
            ea = e_anchor[m]
            k1 = 0j
            k2 = 0j
            k3 = 0j
            k4 = 0.0
            q1 = 0j
            q2 = 0j
            q3 = 0j
            q4 = 0.0
            for i in range(15):
                s = mid + half * gx[i]
                if quad[m]:
                    dt = delta[m] * (s * s)
                    jac = delta[m] * (2.0 * s) * half
                else:
                    dt = delta[m] * s
                    jac = delta[m] * half
                em = _cexpm1_nb(dt)
                et = ea * (1.0 + em)
                dz = 2.0 * a * ea * em / ((1.0 - et) * (1.0 - ea))
                w = _sheet_w_nb(za, dz, lam, lam1, lam2)
                inv = 1.0 / w
                c = jac / (2.0 * a)
                f1 = 0.5 * (inv - w) * c
                f2 = 0.5j * (inv + w) * c
                f3 = c
                f4 = 0.5 * (abs(inv) + abs(w)) * abs(c)
                k1 += gw[i] * f1
                k2 += gw[i] * f2
                k3 += gw[i] * f3
                k4 += gw[i] * f4
                q1 += gwg[i] * f1
                q2 += gwg[i] * f2
                q3 += gwg[i] * f3
                q4 += gwg[i] * f4
            vals[m, 0] = k1
            vals[m, 1] = k2
            vals[m, 2] = k3
            vals[m, 3] = k4
            errs[m] = max(abs(k1 - q1), abs(k2 - q2), abs(k3 - q3), abs(k4 - q4))
        return vals, errs
else:
    _gk_nb = None


def gk_segments(z_anchor, e_anchor, delta, quad, s_lo, s_hi, lam, lam1, lam2, a, backend=None):
    """Gauss-Kronrod (7,15) on pieces that are straight in ``t = log((z - a)/(z + a))``.

    A piece is ``t(s) = t_anchor + delta * m(s)`` for ``s`` in ``[s_lo, s_hi]``
    with ``m(s) = s`` or, when ``quad`` is set, ``m(s) = s**2`` (this removes
    an inverse square root at a branch point sitting at the anchor).  Since
    ``dh = dt / (2a)`` the integrands are smooth away from branch points.
    Returns ``(vals, errs)`` with columns (phi1, phi2, phi3, arclength).
    """
    z_anchor = np.ascontiguousarray(z_anchor, dtype=complex)
    e_anchor = np.ascontiguousarray(e_anchor, dtype=complex)
    delta = np.ascontiguousarray(delta, dtype=complex)
    quad = np.ascontiguousarray(quad, dtype=np.bool_)
    s_lo = np.ascontiguousarray(s_lo, dtype=float)
    s_hi = np.ascontiguousarray(s_hi, dtype=float)
    a = float(a)
    if (backend or BACKEND) == "numba":
        return _gk_nb(z_anchor, e_anchor, delta, quad, s_lo, s_hi, lam, lam1, lam2, a, GK_X, GK_W, GK_WG15)
    return _gk_np(z_anchor, e_anchor, delta, quad, s_lo, s_hi, lam, lam1, lam2, a)


# --------------------------------------------------------------------------
# cotangent mean-curvature accumulation
# --------------------------------------------------------------------------


def _cot_np(V, F):
    nv = V.shape[0]
    lap = np.zeros((nv, 3))
    area = np.zeros(nv)
    for k in range(3):
        i, j, o = F[:, k], F[:, (k + 1) % 3], F[:, (k + 2) % 3]
        u = V[i] - V[o]
        v = V[j] - V[o]
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        cot = np.einsum("ij,ij->i", u, v) / cross
        e = V[j] - V[i]
        np.add.at(lap, i, 0.5 * cot[:, None] * e)
        np.add.at(lap, j, -0.5 * cot[:, None] * e)
    fa = 0.5 * np.linalg.norm(np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]]), axis=1)
    for k in range(3):
        np.add.at(area, F[:, k], fa / 3.0)
    return lap, area


if HAS_NUMBA:

    @njit(cache=True)
    def _cot_nb(V, F):
        nv = V.shape[0]
        lap = np.zeros((nv, 3))
        area = np.zeros(nv)
        for f in range(F.shape[0]):
            a, b, c = F[f, 0], F[f, 1], F[f, 2]
            ux, uy, uz = V[b, 0] - V[a, 0], V[b, 1] - V[a, 1], V[b, 2] - V[a, 2]
            vx, vy, vz = V[c, 0] - V[a, 0], V[c, 1] - V[a, 1], V[c, 2] - V[a, 2]
            cx, cy, cz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
            fa = 0.5 * math.sqrt(cx * cx + cy * cy + cz * cz)
            area[a] += fa / 3.0
            area[b] += fa / 3.0
            area[c] += fa / 3.0
            for k in range(3):
                i = F[f, k]
                j = F[f, (k + 1) % 3]
                o = F[f, (k + 2) % 3]
                px, py, pz = V[i, 0] - V[o, 0], V[i, 1] - V[o, 1], V[i, 2] - V[o, 2]
                qx, qy, qz = V[j, 0] - V[o, 0], V[j, 1] - V[o, 1], V[j, 2] - V[o, 2]
                dot = px * qx + py * qy + pz * qz
                rx, ry, rz = py * qz - pz * qy, pz * qx - px * qz, px * qy - py * qx
                cot = dot / math.sqrt(rx * rx + ry * ry + rz * rz)
                ex, ey, ez = V[j, 0] - V[i, 0], V[j, 1] - V[i, 1], V[j, 2] - V[i, 2]
                lap[i, 0] += 0.5 * cot * ex
                lap[i, 1] += 0.5 * cot * ey
                lap[i, 2] += 0.5 * cot * ez
                lap[j, 0] -= 0.5 * cot * ex
                lap[j, 1] -= 0.5 * cot * ey
                lap[j, 2] -= 0.5 * cot * ez
        return lap, area
else:
    _cot_nb = None


def cotan_laplacian(V, F, backend=None):
    """Cotangent Laplacian of the embedding ``sum (cot a + cot b)(x_j - x_i) / 2``
    and barycentric vertex areas."""
    V = np.ascontiguousarray(V, dtype=float)
    F = np.ascontiguousarray(F, dtype=np.int64)
    if (backend or BACKEND) == "numba":
        return _cot_nb(V, F)
    return _cot_np(V, F)
