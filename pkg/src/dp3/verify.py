"""Machine-checkable audit of a solved member of the family and its meshes.

Each check records a target, the measured value, a tolerance and a pass
flag; a report serialises to a JSON array of
``{name, anchor, target, measured, tol, pass}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .algebra import FamilyParams, derive_constants, eval_g
from .curve import end_loop, homology_loop
from .periods import SolveResult, eval_v2, format_json
from .quadrature import integrate_contour
from .surface import CURVES, SurfaceMesh

LOOPS = ("gamma1", "gamma2", "gamma3")
#: S_i lies in a plane x_k = const (non-conjugate piece)
PLANE_AXIS = {"s1": 0, "s2": 1, "s3": 2, "s4": 1, "s5": 0, "s6": 1, "s7": 0}
#: S_i* is a line parallel to the x_k axis (conjugate piece)
LINE_AXIS = {"s1": 0, "s2": 1, "s3": 2, "s4": 1, "s5": 0, "s6": 1, "s7": 0}
CONTOUR_TOL = 1e-12
MEAN_CURVATURE_TOL = 0.01
#: accepted band for the coarse/fine mean-curvature ratio of a first-order method
RATIO_BAND = (1.4, 2.6)


@dataclass
class Check:
    name: str
    anchor: str
    target: object
    measured: object
    tol: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "anchor": self.anchor, "target": _plain(self.target),
                "measured": _plain(self.measured), "tol": float(self.tol), "pass": bool(self.passed)}


def _plain(x):
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    return float(x)


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    def add(self, name, anchor, target, measured, tol, passed=None):
        if passed is None:
            passed = abs(float(measured) - float(target)) <= tol
        self.checks.append(Check(name, anchor, target, measured, float(tol), bool(passed)))

    def extend(self, other: "VerificationReport"):
        self.checks.extend(other.checks)
        return self

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> str:
        return format_json([c.as_dict() for c in self.checks])


# --------------------------------------------------------------------------
# periods and residues
# --------------------------------------------------------------------------


def loop_integrals(params: FamilyParams, tol=CONTOUR_TOL):
    """``{label: (int phi1, int phi2, int phi3)}`` over the three homology loops."""
    out = {}
    for label in LOOPS:
        loop = homology_loop(label, params)
        out[label] = integrate_contour(loop.segments, loop.start_w, params, tol=tol).values
    return out


def end_integrals(params: FamilyParams, tol=CONTOUR_TOL):
    """``{(z_sign, sheet_sign): (oint phi1, oint phi2, oint phi3)}`` around the four ends."""
    out = {}
    for zs in (1, -1):
        for ws in (1, -1):
            segs, _, w0 = end_loop(zs, ws, params)
            out[(zs, ws)] = integrate_contour(segs, w0, params, tol=tol).values
    return out


def verify_periods(result: SolveResult, tol=1e-9, closure_tol=1e-8) -> VerificationReport:
    """Real periods over the homology loops and the ends.

    ``tol`` applies to the periods that vanish for every parameter triple,
    ``closure_tol`` to those that vanish only at the solved point and to the
    comparison with the interval formula for ``v2``.
    """
    params = result.params
    a = result.constants.a
    I = loop_integrals(params)
    rep = VerificationReport()
    sym = "reflection symmetry: vanishes for all parameters"
    rep.add("Re_gamma1_phi1", sym, 0.0, I["gamma1"][0].real, tol)
    rep.add("Re_gamma2_phi2", sym, 0.0, I["gamma2"][1].real, tol)
    rep.add("Re_gamma3_phi1", sym, 0.0, I["gamma3"][0].real, tol)
    closed = "period problem: vanishes at the solved point"
    rep.add("Re_gamma2_phi1", closed, 0.0, I["gamma2"][0].real, closure_tol)
    rep.add("Re_gamma3_phi2", closed, 0.0, I["gamma3"][1].real, closure_tol)
    # loop orientation gives Re int_gamma1 phi2 = -v2
    v2 = eval_v2(*params.as_tuple()).value
    rep.add("Re_gamma1_phi2", "vertical period equals minus the interval formula v2", -v2,
            I["gamma1"][1].real, closure_tol)
    for label in LOOPS:
        rep.add(f"Re_{label}_phi3", "height differential is exact", 0.0, I[label][2].real, tol)
    unit = math.pi / a
    for (zs, ws), vals in end_integrals(params).items():
        q = vals[0].real / unit
        n = round(q)
        rep.add(f"Re_end{'+' if zs > 0 else '-'}a_sheet{'+' if ws > 0 else '-'}_phi1_over_v1",
                "end periods are integer multiples of pi/a", float(n), q, tol)
    return rep


def verify_residues(params: FamilyParams, tol=1e-9) -> VerificationReport:
    """Residues of the forms at the four ends (contour integral / 2 pi i)."""
    c = derive_constants(params)
    target = 1.0 / (2.0 * c.a)
    rep = VerificationReport()
    for (zs, ws), vals in end_integrals(params).items():
        res = vals / (2j * math.pi)
        tag = f"end{'+' if zs > 0 else '-'}a_sheet{'+' if ws > 0 else '-'}"
        r1 = res[0]
        rep.add(f"abs_Res_phi1_{tag}", "|Res phi1| = 1/(2a)", target, abs(r1), tol)
        rep.add(f"Re_Res_phi1_{tag}", "Res phi1 is purely imaginary", 0.0, r1.real, tol)
        rep.add(f"abs_Res_phi2_{tag}", "phi2 has no residues at the ends", 0.0, abs(res[1]), tol)
        rep.add(f"Res_phi3_{tag}", "Res dh = +-1/(2a) from the log primitive", zs * target, res[2].real, tol,
                abs(res[2] - zs * target) <= tol)
    return rep


# --------------------------------------------------------------------------
# symmetries
# --------------------------------------------------------------------------


def _polyline_length(P):
    return float(np.linalg.norm(np.diff(P, axis=0), axis=1).sum())


def verify_symmetries(piece: SurfaceMesh, conjugate: SurfaceMesh, planar_tol=1e-7, line_tol=1e-6,
                      length_tol=1e-6) -> VerificationReport:
    """Planar symmetry curves of the piece and straight lines of the conjugate piece.

    Planarity is the spread of the constant coordinate over the curve,
    straightness the larger spread of the two off-axis coordinates, both
    relative to the mesh diameter.  Lengths compare the integrated arclength
    of ``s_i`` with the length of the straight image ``S_i*``.
    """
    rep = VerificationReport()
    D, Dc = piece.diameter(), conjugate.diameter()
    V, Vc, L = piece.vertices, conjugate.vertices, piece.labels
    for s in CURVES:
        k = PLANE_AXIS[s]
        rep.add(f"planar_{s.upper()}_x{k + 1}", f"{s.upper()} lies in a plane normal to x{k + 1}", 0.0,
                float(np.ptp(V[L[s], k])) / D, planar_tol)
    lv = {s: float(V[L[s], PLANE_AXIS[s]].mean()) for s in CURVES}
    rep.add("coplanar_S6_S4", "S6 lies in the plane containing S4", 0.0, abs(lv["s6"] - lv["s4"]) / D, planar_tol)
    rep.add("coplanar_S7_S5", "S7 lies in the plane containing S5", 0.0, abs(lv["s7"] - lv["s5"]) / D, planar_tol)
    rep.add("distinct_S5_S1", "S5 plane differs from the S1 plane", 0.0, abs(lv["s5"] - lv["s1"]) / D, 1e-3,
            abs(lv["s5"] - lv["s1"]) / D > 1e-3)
    rep.add("distinct_S4_S2", "S4 plane differs from the S2 plane", 0.0, abs(lv["s4"] - lv["s2"]) / D, 1e-3,
            abs(lv["s4"] - lv["s2"]) / D > 1e-3)
    lengths = piece.meta.get("curve_lengths", {})
    for s in CURVES:
        k = LINE_AXIS[s]
        P = Vc[L[s]]
        off = max(float(np.ptp(P[:, i])) for i in range(3) if i != k) / Dc
        rep.add(f"straight_{s.upper()}*_x{k + 1}", f"{s.upper()}* is a straight line parallel to x{k + 1}", 0.0,
                off, line_tol)
        if s in lengths:
            ref = lengths[s]
            rel = abs(_polyline_length(P) - ref) / ref
            rep.add(f"length_{s.upper()}_eq_{s.upper()}*", "a planar geodesic and its conjugate line have equal length",
                    0.0, rel, length_tol)
    x2_1, x2_7 = float(Vc[L["s1"], 1].mean()), float(Vc[L["s7"], 1].mean())
    rep.add("coplanar_S1*_S7*_x2", "S1* and S7* lie in a plane normal to x2 since G(a) = i", 0.0,
            abs(x2_1 - x2_7) / Dc, line_tol)
    return rep


# --------------------------------------------------------------------------
# minimality and graph
# --------------------------------------------------------------------------


def mean_curvature_metric(mesh: SurfaceMesh, backend=None):
    """``|H| * (mean incident edge length)`` per vertex; boundary vertices get NaN."""
    lap, area = kernels.cotan_laplacian(mesh.vertices, mesh.faces, backend)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = np.linalg.norm(lap, axis=1) / (2.0 * area)
    E = mesh.edges()
    lengths = np.linalg.norm(mesh.vertices[E[:, 0]] - mesh.vertices[E[:, 1]], axis=1)
    n = mesh.n_vertices
    total = np.bincount(E[:, 0], lengths, n) + np.bincount(E[:, 1], lengths, n)
    count = np.bincount(E[:, 0], minlength=n) + np.bincount(E[:, 1], minlength=n)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = H * total / count
    out[mesh.boundary_vertices()] = np.nan
    return out


def max_mean_curvature(mesh: SurfaceMesh, backend=None) -> float:
    return float(np.nanmax(mean_curvature_metric(mesh, backend)))


def projected_orientation(mesh: SurfaceMesh, axes=(1, 2), rel_tol=1e-12):
    """Signed projected area of every face; faces below ``rel_tol * scale**2`` count as 0."""
    P = mesh.vertices[:, list(axes)]
    F = mesh.faces
    d1, d2 = P[F[:, 1]] - P[F[:, 0]], P[F[:, 2]] - P[F[:, 0]]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    scale = float(np.ptp(P, axis=0).max())
    return np.where(np.abs(area) <= rel_tol * scale * scale, 0.0, np.sign(area))


def metric_factor(params: FamilyParams, z, w):
    """``(1/|G| + |G|)^2 |dh|^2`` in a local coordinate at each node.

    Regular nodes use ``z``; branch points (``w`` = 0 or inf) use
    ``u = sqrt(z - p)`` and the point at infinity uses ``1/z``.
    """
    c = derive_constants(params)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    out = np.empty(z.size)
    fin = np.isfinite(z)
    zero = fin & (w == 0)
    pole = fin & ~np.isfinite(w)
    reg = fin & ~zero & ~pole
    with np.errstate(divide="ignore", invalid="ignore"):
        dh = np.abs(1.0 / (z[reg] ** 2 - c.a2))
        aw = np.abs(w[reg])
        out[reg] = (1.0 / aw + aw) ** 2 * dh ** 2
    lam, lam1, lam2 = params.as_tuple()
    roots = {"g1": (lam, -1.0, lam1, -lam2), "g2": (-lam, 1.0, -lam1, lam2)}
    for mask, top, bottom in ((zero, "g2", "g1"), (pole, "g1", "g2")):
        for k in np.flatnonzero(mask):
            p = z[k].real
            # derivative at a simple root: product of the other linear factors
            slope = np.prod([p - r for r in roots[bottom] if abs(p - r) > 1e-12])
            out[k] = 4.0 * abs(eval_g(top, p, params) / slope) / abs(p * p - c.a2) ** 2
    out[~fin] = 4.0
    return out


def verify_minimality_and_graph(mesh: SurfaceMesh, conjugate_piece: SurfaceMesh, coarse_mesh: SurfaceMesh = None,
                                doubled_conjugate: SurfaceMesh = None, params: FamilyParams = None,
                                tol=MEAN_CURVATURE_TOL, backend=None) -> VerificationReport:
    """Discrete mean curvature, the projection graph test and regularity of the metric.

    ``coarse_mesh`` (same piece at half the resolution) adds the first-order
    refinement check.  ``doubled_conjugate`` defaults to the conjugate piece
    plus its rotation about the S3* line.
    """
    from .surface import double_conjugate_piece

    rep = VerificationReport()
    fine = max_mean_curvature(mesh, backend)
    rep.add("mean_curvature_x_edge", "the surface is minimal: cotangent |H| * edge length", 0.0, fine, tol,
            fine < tol)
    if coarse_mesh is not None:
        coarse = max_mean_curvature(coarse_mesh, backend)
        ratio = coarse / fine
        lo, hi = RATIO_BAND
        rep.add("mean_curvature_refinement_ratio", "first-order decay of discrete mean curvature", 2.0, ratio,
                0.6, lo <= ratio <= hi)
    dbl = doubled_conjugate if doubled_conjugate is not None else double_conjugate_piece(conjugate_piece)
    sign = projected_orientation(dbl)
    npos, nneg = int((sign > 0).sum()), int((sign < 0).sum())
    flipped = min(npos, nneg) / max(npos + nneg, 1)
    rep.add("graph_x2x3_projection", "doubled conjugate piece is a graph over a domain of the (x2,x3)-plane",
            0.0, flipped, 0.0, flipped == 0.0)
    if params is None:
        params = FamilyParams(*mesh.meta["params"])
    mf = metric_factor(params, mesh.z, mesh.w)
    ok = bool(np.all(np.isfinite(mf)) and np.all(mf > 0))
    rep.add("metric_factor_min", "conformal factor is nonzero at every node", 0.0, float(np.min(mf)), 0.0, ok)
    rep.add("metric_factor_max", "conformal factor is finite at every node", 0.0, float(np.max(mf)), 0.0, ok)
    return rep
