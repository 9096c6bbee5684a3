"""Period integrals xi1, xi2, v2 and the two-parameter root solve.

For fixed ``lam`` the surface closes when both real periods

    xi1(lam1, lam2) = int_1^lam1 phi1(t) dt,   xi2(lam1, lam2) = int_lam1^lam2 phi2(t) dt

vanish.  ``solve_period_problem`` follows the zero set of xi2 (smallest root
in lam2 for each lam1) and searches along it for a sign change of xi1.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .algebra import DerivedConstants, FamilyParams, derive_constants
from .errors import BracketFailure, NoConvergence, NonPositive, NoSignChange
from .quadrature import QuadratureResult, integrate_period_batch, period_rows

QUAD_TOL = 1e-12
SOLVE_TOL = 1e-10
C2_DELTA = 1e-6
C2_MAX_RATIO = 1e6
SCAN_POINTS = 64
SCAN_LO = 1e-4
SCAN_HI = 1e3


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def _rows(lam, lam1, lam2):
    lam1, lam2 = np.broadcast_arrays(np.asarray(lam1, float), np.asarray(lam2, float))
    return period_rows([FamilyParams(lam, float(x), float(y)) for x, y in zip(lam1.ravel(), lam2.ravel())]), lam1.shape


def eval_batch(kind, lam, lam1, lam2, tol=QUAD_TOL, backend=None):
    """Vectorised period values over broadcast ``lam1``, ``lam2`` arrays.

    ``kind`` is one of :data:`dp3.kernels.KIND_XI1`, ``KIND_XI2``, ``KIND_V2``.
    Returns ``(values, errors)`` with the broadcast shape.
    """
    rows, shape = _rows(lam, lam1, lam2)
    vals, errs = integrate_period_batch(kind, rows, tol=tol, backend=backend)
    return vals.reshape(shape), errs.reshape(shape)


def _single(kind, lam, lam1, lam2, tol, backend):
    rows = period_rows([FamilyParams(lam, lam1, lam2)])
    vals, errs = integrate_period_batch(kind, rows, tol=tol, backend=backend)
    return QuadratureResult(float(vals[0]), float(errs[0]), 0)


def eval_xi1(lam, lam1, lam2, tol=QUAD_TOL, backend=None) -> QuadratureResult:
    """``int_1^lam1`` of the xi1 integrand."""
    return _single(kernels.KIND_XI1, lam, lam1, lam2, tol, backend)


def eval_xi2(lam, lam1, lam2, tol=QUAD_TOL, backend=None) -> QuadratureResult:
    """``int_lam1^lam2`` of the xi2 integrand."""
    return _single(kernels.KIND_XI2, lam, lam1, lam2, tol, backend)


def eval_v2(lam, lam1, lam2, tol=QUAD_TOL, backend=None) -> QuadratureResult:
    """Horizontal period ``2 int_lam^1 (b^2 - t^2) / sqrt(...) dt``; always positive."""
    r = _single(kernels.KIND_V2, lam, lam1, lam2, tol, backend)
    if not r.value > 0.0:
        raise NonPositive(f"v2 = {r.value} at {(lam, lam1, lam2)}")
    return r


# --------------------------------------------------------------------------
# result types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodResiduals:
    xi1: float
    xi2: float
    err1: float
    err2: float


@dataclass(frozen=True)
class Lattice:
    v1: np.ndarray
    v2: np.ndarray

    @classmethod
    def from_params(cls, params: FamilyParams, v2=None):
        a = derive_constants(params).a
        if v2 is None:
            v2 = eval_v2(*params.as_tuple()).value
        return cls(np.array([math.pi / a, 0.0, 0.0]), np.array([0.0, float(v2), 0.0]))

    def translation(self, n1, n2):
        return n1 * self.v1 + n2 * self.v2


@dataclass(frozen=True)
class SolveResult:
    params: FamilyParams
    constants: DerivedConstants
    residuals: PeriodResiduals
    lattice: Lattice
    tol: float
    scan: tuple = field(default=(), repr=False)

    def as_dict(self):
        p, c, r = self.params, self.constants, self.residuals
        return {
            "lambda": p.lam, "lambda1": p.lam1, "lambda2": p.lam2,
            "alpha": c.alpha, "a": c.a, "b": c.b,
            "xi1": r.xi1, "xi2": r.xi2,
            "v1x": float(self.lattice.v1[0]), "v2y": float(self.lattice.v2[1]),
            "tol": self.tol,
        }

    def to_json(self) -> str:
        return format_json(self.as_dict())


def _json_value(x, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}" for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(x, (list, tuple)):
        if not x:
            return "[]"
        items = [pad + _json_value(v, indent, level + 1) for v in x]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x if math.isfinite(x) else "null"
    if x is None:
        return "null"
    return json.dumps(x)


def format_json(obj, indent=2) -> str:
    """Deterministic JSON with floats printed to 17 significant digits."""
    return _json_value(obj, indent, 0) + "\n"


# --------------------------------------------------------------------------
# solving
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class C2Root:
    lam2: float
    xi2: float
    brackets: tuple  # every sign-change bracket seen in the scan

    @property
    def multiple(self):
        return len(self.brackets) > 1


def c2_scan_points(lam1, delta=C2_DELTA, max_ratio=C2_MAX_RATIO):
    """lam2 samples ``lam1 * (1 + delta * 2**k)`` up to ``max_ratio * lam1``."""
    kmax = int(math.ceil(math.log2(max_ratio / delta))) + 1
    rel = delta * 2.0 ** np.arange(kmax)
    rel = rel[lam1 * (1.0 + rel) <= max_ratio * lam1 * (1.0 + 1e-12)]
    return lam1 * (1.0 + rel)


def solve_lambda2_on_c2(lam, lam1, tol=SOLVE_TOL, quad_tol=QUAD_TOL, delta=C2_DELTA, backend=None) -> C2Root:
    """Smallest ``lam2 > lam1`` with ``xi2(lam1, lam2) = 0``."""
    FamilyParams(lam, lam1, lam1 * (1.0 + delta))  # validates lam, lam1
    grid = c2_scan_points(lam1, delta)
    vals, _ = eval_batch(kernels.KIND_XI2, lam, lam1, grid, quad_tol, backend)
    sgn = np.sign(vals)
    idx = np.flatnonzero((sgn[:-1] > 0) & (sgn[1:] <= 0))
    if idx.size == 0:
        raise BracketFailure(f"no sign change of xi2 for lam={lam}, lam1={lam1} up to lam2={grid[-1]:.6g}")
    brackets = tuple((float(grid[i]), float(grid[i + 1])) for i in idx)
    lo, hi = brackets[0]
    if vals[idx[0] + 1] == 0.0:
        root = hi
    else:
        f = lambda x: eval_xi2(lam, lam1, x, quad_tol, backend).value
        root = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    xi2 = eval_xi2(lam, lam1, root, quad_tol, backend).value
    if not abs(xi2) < tol:
        raise NoConvergence(f"xi2 = {xi2:.3g} at the refined root lam2 = {root!r} (lam1 = {lam1!r})")
    return C2Root(float(root), float(xi2), brackets)


def lam1_scan_points(n=SCAN_POINTS, lo=SCAN_LO, hi=SCAN_HI):
    """lam1 samples ``1 + d`` with ``d`` geometric in ``[lo, hi]``."""
    return 1.0 + np.geomspace(lo, hi, n)


def _f_on_c2(lam, lam1, quad_tol, backend):
    root = solve_lambda2_on_c2(lam, lam1, quad_tol=quad_tol, backend=backend)
    return eval_xi1(lam, lam1, root.lam2, quad_tol, backend).value, root


def solve_period_problem(lam, tol=SOLVE_TOL, quad_tol=QUAD_TOL, backend=None, scan=None) -> SolveResult:
    """Solve ``xi1 = xi2 = 0`` for fixed ``lam``.

    ``F(lam1) = xi1(lam1, lam2*(lam1))`` is sampled on ``scan`` (default
    :func:`lam1_scan_points`) and the first sign change is refined with
    Brent's method.  Raises NoSignChange with the scanned values attached.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    grid = lam1_scan_points() if scan is None else np.asarray(scan, float)
    fvals = []
    hit = None
    for k, lam1 in enumerate(grid):
        try:
            fv, _ = _f_on_c2(lam, float(lam1), quad_tol, backend)
        except BracketFailure:
            fv = float("nan")
        fvals.append(fv)
        if k and np.isfinite(fv) and np.isfinite(fvals[k - 1]) and np.sign(fv) != np.sign(fvals[k - 1]):
            hit = k
            break
    scanned = tuple(zip(map(float, grid[: len(fvals)]), fvals))
    if hit is None:
        raise NoSignChange(f"no sign change of xi1 along the xi2 = 0 curve for lam={lam}", scanned=scanned)
    f = lambda x: _f_on_c2(lam, x, quad_tol, backend)[0]
    lam1 = brentq(f, float(grid[hit - 1]), float(grid[hit]), xtol=1e-300, rtol=4 * np.finfo(float).eps,
                  maxiter=200)
    root = solve_lambda2_on_c2(lam, lam1, tol, quad_tol, backend=backend)
    params = FamilyParams(lam, lam1, root.lam2)
    r1 = eval_xi1(lam, lam1, root.lam2, quad_tol, backend)
    r2 = eval_xi2(lam, lam1, root.lam2, quad_tol, backend)
    v2 = eval_v2(lam, lam1, root.lam2, quad_tol, backend).value
    return SolveResult(
        params=params,
        constants=derive_constants(params),
        residuals=PeriodResiduals(r1.value, r2.value, r1.error_estimate, r2.error_estimate),
        lattice=Lattice.from_params(params, v2),
        tol=tol,
        scan=scanned,
    )


# --------------------------------------------------------------------------
# sign field over the parallelogram
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SignField:
    lam: float
    lam1: np.ndarray  # (n_t, n_s); rows run from the A-B edge (t = 0) to the D-C edge (t = 1)
    lam2: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    eps: float
    N: float

    @property
    def sign_xi1(self):
        return np.sign(self.xi1).astype(int)

    @property
    def sign_xi2(self):
        return np.sign(self.xi2).astype(int)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("lambda1,lambda2,sign_xi1,sign_xi2\n")
        s1, s2 = self.sign_xi1.ravel(), self.sign_xi2.ravel()
        for x, y, a, b in zip(self.lam1.ravel(), self.lam2.ravel(), s1, s2):
            buf.write("%.12g,%.12g,%d,%d\n" % (x, y, a, b))
        return buf.getvalue()

    def crossing_cells(self):
        """Indices of grid cells whose corners show sign changes of both xi1 and xi2."""
        def changes(s):
            c = np.stack([s[:-1, :-1], s[1:, :-1], s[:-1, 1:], s[1:, 1:]])
            return c.max(axis=0) != c.min(axis=0)

        both = changes(self.sign_xi1) & changes(self.sign_xi2)
        return np.argwhere(both)


def parallelogram_vertices(eps, N):
    A = np.array([1.0 + eps, 1.0 + 2.0 * eps])
    B = np.array([N, N + eps])
    C = np.array([N, 2.0 * N])
    D = np.array([1.0 + eps, 1.0 + N + eps])
    return A, B, C, D


def sign_field(lam, n=64, eps=1e-3, N=40.0, tol=1e-10, backend=None) -> SignField:
    """Signs of xi1 and xi2 on an ``n x n`` grid of the parallelogram ``ABCD``.

    ``A = (1+eps, 1+2eps)``, ``B = (N, N+eps)``, ``C = (N, 2N)``,
    ``D = (1+eps, 1+N+eps)``; sample ``(i, j)`` sits at ``A + s_j (B-A) + t_i (D-A)``.
    """
    if not 0.0 < eps < 0.5 or N <= 2.0:
        raise ValueError("need 0 < eps < 0.5 and N > 2")
    A, B, _, D = parallelogram_vertices(eps, N)
    s = np.linspace(0.0, 1.0, n)
    t = np.linspace(0.0, 1.0, n)
    S, T = np.meshgrid(s, t)
    lam1 = A[0] + S * (B[0] - A[0]) + T * (D[0] - A[0])
    lam2 = A[1] + S * (B[1] - A[1]) + T * (D[1] - A[1])
    xi1, _ = eval_batch(kernels.KIND_XI1, lam, lam1, lam2, tol * 1e-2, backend)
    xi2, _ = eval_batch(kernels.KIND_XI2, lam, lam1, lam2, tol * 1e-2, backend)
    return SignField(lam, lam1, lam2, xi1, xi2, eps, N)


# --------------------------------------------------------------------------
# asymptotic regression
# --------------------------------------------------------------------------


def xi1_limit_near_one(lam, lam2):
    """Limit of xi1 as lam1 -> 1 (valid when lam * lam2 > 1)."""
    return 0.5 * math.pi * ((lam2 - lam) / math.sqrt((1.0 - lam * lam) * (lam2 * lam2 - 1.0)) - 1.0)


def xi2_slope_at_diagonal(lam, lam1):
    """``d xi2 / d lam2`` at ``lam2 = lam1``."""
    return (1.0 - lam) * lam1 * math.pi / (
        2.0 * (lam1 * lam1 - lam) * math.sqrt((lam1 * lam1 - lam * lam) * (lam1 * lam1 - 1.0)))


def xi2_limit_near_one(lam, lam2):
    """Limit of xi2 as lam1 -> 1 (valid when lam * lam2 <= 1), by direct quadrature."""
    from .quadrature import SingularIntegral, integrate_endpoint_singular

    # integrand (lam2 - 1) / sqrt((t^2 - lam^2)(lam2^2 - t^2)) with t = 1 + (lam2 - 1) s
    def f(s, dlo, dhi):
        t = 1.0 + (lam2 - 1.0) * s
        return (lam2 - 1.0) / np.sqrt((t - lam) * (t + lam) * ((lam2 - 1.0) * dhi) * (lam2 + t))

    return integrate_endpoint_singular(SingularIntegral(f, 0.0, 1.0, (0, -0.5), 1e-13)).value


@dataclass
class AsymptoticCheck:
    name: str
    target: float
    samples: list  # (h, value, |value - target|)
    passed: bool


def asymptotic_checks(lam, lam2_for_xi1=3.0, lam1_for_xi2=2.0, lam2_for_xi2_limit=None, backend=None):
    """Regression of the small-parameter limits of xi1 and xi2.

    Returns a list of :class:`AsymptoticCheck`.  Checks that need
    ``lam * lam2 > 1`` (or ``<= 1``) are skipped when the given values do not
    satisfy the hypothesis.
    """
    hs = (1e-2, 1e-3, 1e-4)
    out = []
    if lam * lam2_for_xi1 > 1.0:
        target = xi1_limit_near_one(lam, lam2_for_xi1)
        samples = []
        for h in hs:
            v = eval_xi1(lam, 1.0 + h, lam2_for_xi1, backend=backend).value
            samples.append((h, v, abs(v - target)))
        errs = [e for _, _, e in samples]
        ok = all(e2 < e1 for e1, e2 in zip(errs, errs[1:])) and errs[-1] < 0.05 * abs(target)
        out.append(AsymptoticCheck("xi1_near_lam1_one", target, samples, ok))

    slope = xi2_slope_at_diagonal(lam, lam1_for_xi2)
    samples = []
    for h in hs:
        v = eval_xi2(lam, lam1_for_xi2, lam1_for_xi2 + h, backend=backend).value
        samples.append((h, v / h, abs(v / h - slope)))
    errs = [e for _, _, e in samples]
    ok = all(e2 < e1 for e1, e2 in zip(errs, errs[1:])) and errs[-1] < 0.01 * slope
    out.append(AsymptoticCheck("xi2_slope_at_diagonal", slope, samples, ok))

    v = eval_xi2(lam, lam1_for_xi2, lam1_for_xi2 + 1e-6, backend=backend).value
    out.append(AsymptoticCheck("xi2_vanishes_at_diagonal", 0.0, [(1e-6, v, abs(v))], 0.0 < v < 1e-4))

    lam2 = lam2_for_xi2_limit if lam2_for_xi2_limit is not None else 0.5 * (1.0 + 1.0 / lam)
    if lam * lam2 <= 1.0 and lam2 > 1.0:
        target = xi2_limit_near_one(lam, lam2)
        samples = []
        for h in hs:
            v = eval_xi2(lam, 1.0 + h, lam2, backend=backend).value
            samples.append((h, v, abs(v - target)))
        errs = [e for _, _, e in samples]
        ok = all(e2 < e1 for e1, e2 in zip(errs, errs[1:])) and errs[-1] < 0.05 * abs(target)
        out.append(AsymptoticCheck("xi2_near_lam1_one", target, samples, ok))
    return out
