"""Fundamental piece, its conjugate, and the assembled surface.

The first quadrant of the ``w(inf) = +1`` sheet is sampled in the end
coordinate

    t = log((z - a) / (z + a)),   Re t in [t_end, 0],   Im t in [0, pi]

which maps the quadrant onto a half-strip: ``Im t = 0`` is the real axis
beyond ``a`` (``z = inf`` at ``t = 0``), ``Im t = pi`` is ``[0, a)`` and
``Re t = 0`` is the positive imaginary axis.  The end over ``z = a`` sits at
``Re t = -inf`` and ``dh = dt / (2a)``, so a uniform lattice in ``t`` is a
uniform lattice in the height and the logarithmic angle around the end.
Branch points and ``z = i`` are lattice nodes, and the lattice is pulled
towards each branch point so that the square-root behaviour of the surface
there is resolved.

Edges are straight in ``t``.  Positions come from accumulating edge
integrals over a spanning tree rooted at ``z = i``; every grid quad is
audited for a vanishing cycle sum.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .algebra import FamilyParams, derive_constants
from .errors import CycleResidual, GeometryError, ParameterError, WeldFailure
from .kernels import sheet_w
from .quadrature import integrate_edges

CURVES = ("s1", "s2", "s3", "s4", "s5", "s6", "s7")
CYCLE_TOL = 1e-9
WELD_TOL = 1e-6


# --------------------------------------------------------------------------
# grid
# --------------------------------------------------------------------------


@dataclass
class DomainGrid:
    params: FamilyParams
    resolution: int
    eps_end: float
    R_max: float
    x: np.ndarray  # (n_r,) lattice values of Re t
    theta: np.ndarray  # (n_t,) lattice values of Im t
    t: np.ndarray  # (n_r * n_t,) node t after warping, index = i * n_t + j
    z: np.ndarray  # node z (inf at t = 0)
    w: np.ndarray  # node w (0 or inf at branch points, 1 at z = inf)
    labels: dict  # curve name -> node indices ordered along the curve
    branch_nodes: np.ndarray  # node indices sitting on branch points
    base: int  # node index of z = i
    infinity: int  # node index of z = inf

    @property
    def shape(self):
        return self.x.size, self.theta.size

    @property
    def n_nodes(self):
        return self.z.size

    def index(self, i, j):
        return i * self.theta.size + j


def default_eps_end(params: FamilyParams) -> float:
    return (1.0 - derive_constants(params).a) / 16.0


def default_r_max(params: FamilyParams) -> float:
    return 4.0 * params.lam2


def end_coordinate(z, a):
    """``t = log((z - a)/(z + a))``, the principal branch on the first quadrant."""
    z = np.asarray(z, dtype=complex)
    return np.log((z - a) / (z + a))


#: local refinement factor of the lattice at branch points
REFINE = 8.0


def _lattice(breaks, step, bumps=(), min_cells=2):
    """Nodes through every breakpoint with spacing about ``step / density``.

    ``density = 1 + (REFINE - 1) * max(b((x - c) / width))`` over ``bumps``
    with the smooth bump ``b(s) = (1 - s**2)**3`` on ``|s| < 1``.
    """
    lo, hi = breaks[0], breaks[-1]
    xs = np.linspace(lo, hi, 20001)
    bump = np.zeros_like(xs)
    for c, width in bumps:
        s = np.clip((xs - c) / width, -1.0, 1.0)
        bump = np.maximum(bump, (1.0 - s * s) ** 3)
    dens = 1.0 + (REFINE - 1.0) * bump
    N = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
    out = [lo]
    for b0, b1 in zip(breaks[:-1], breaks[1:]):
        n0, n1 = np.interp([b0, b1], xs, N)
        n = max(min_cells, int(math.ceil((n1 - n0) / step - 1e-9)))
        inner = np.interp(np.linspace(n0, n1, n + 1)[1:-1], N, xs)
        out.extend(inner.tolist())
        out.append(b1)
    return np.array(out)


def branch_centres(params: FamilyParams, x_end):
    """``(t, radius)`` of z = 1, lam1, lam2 (``Im t = 0``) and z = lam (``Im t = pi``).

    Each radius is half the distance to the nearest other centre, the end
    line, the imaginary axis ``Re t = 0`` or the opposite boundary line.
    """
    a = derive_constants(params).a
    lam, lam1, lam2 = params.as_tuple()
    pts = [complex(math.log((p - a) / (p + a)), 0.0) for p in (1.0, lam1, lam2)]
    pts.append(complex(math.log((a - lam) / (a + lam)), math.pi))
    out = []
    for k, p in enumerate(pts):
        r = min([0.5 * abs(p - q) for m, q in enumerate(pts) if m != k]
                + [0.5 * (p.real - x_end), -0.5 * p.real, 0.5 * math.pi])
        out.append((p, r))
    return out


def _warp_profile(s):
    # s^2 at 0; value 1, slope 1, curvature 0 at 1
    return s * s * (1.0 + s * (3.0 + s * (-5.0 + s * 2.0)))


def warp_lattice(t, centres):
    """Pull lattice points radially towards each ``(centre, radius)``.

    Inside a disc the distance ``r`` to the centre becomes ``R g(r / R)`` with
    ``g(s) ~ s**2`` at 0, so a uniform lattice becomes uniform in
    ``sqrt(t - centre)``.  Lines through a centre, in particular the boundary
    lines, are preserved.
    """
    t = np.array(t, dtype=complex)
    for centre, R in centres:
        d = t - centre
        r = np.abs(d)
        m = (r < R) & (r > 0.0)
        if np.any(m):
            scale = R * _warp_profile(r[m] / R) / r[m]
            t[m] = centre + (d[m].real * scale + 1j * (d[m].imag * scale))
    return t


def build_domain_grid(params: FamilyParams, resolution=64, eps_end=None, R_max=None, warp=True,
                      refine=True) -> DomainGrid:
    """Graded lattice in the end coordinate; see the module docstring.

    Nodes are spaced by about ``pi / resolution`` in ``t``: a polar grid around
    the end with ring ratio ``exp(pi / resolution)`` that closes up to the
    imaginary axis and the point at infinity.  The innermost ring passes
    through ``z = a - eps_end``.  ``R_max`` is validated and recorded; the
    grid reaches ``z = inf`` itself so nothing is cut off there.
    """
    if resolution < 8:
        raise ParameterError(f"resolution must be >= 8, got {resolution}")
    c = derive_constants(params)
    lam, lam1, lam2 = params.as_tuple()
    a = c.a
    if eps_end is None:
        eps_end = default_eps_end(params)
    if R_max is None:
        R_max = default_r_max(params)
    limit = min(a - lam, 1.0 - a) / 4.0
    if not 0.0 < eps_end < limit:
        raise ParameterError(f"eps_end must lie in (0, {limit:.6g}), got {eps_end}")
    if not R_max > 2.0 * lam2:
        raise ParameterError(f"R_max must exceed 2*lambda2 = {2 * lam2:.6g}, got {R_max}")

    x_end = math.log(eps_end / (2.0 * a - eps_end))
    bottom = {math.log((p - a) / (p + a)): p for p in (1.0, lam1, lam2)}
    x_lam = math.log((a - lam) / (a + lam))
    breaks = sorted({x_end, 0.0, x_lam, *bottom})
    step = math.pi / resolution
    centres = branch_centres(params, x_end)
    if refine:
        x_bumps = [(p.real, R) for p, R in centres]
        th_bumps = [(p.imag, min(R, 0.25 * math.pi)) for p, R in centres]
    else:
        x_bumps = th_bumps = []
    x = _lattice(breaks, step, x_bumps)
    th_base = math.pi - 2.0 * math.atan(1.0 / a)
    theta = _lattice([0.0, th_base, math.pi], step, th_bumps)
    n_r, n_t = x.size, theta.size

    X, T = np.meshgrid(x, theta, indexing="ij")
    t = X + 1j * T
    if warp:
        t = warp_lattice(t, centres)
    # the boundary lines stay exact: warping moves line nodes along their line
    t[:, 0] = t[:, 0].real + 0j
    t[:, -1] = t[:, -1].real + 1j * math.pi
    t[-1, :] = 1j * theta
    with np.errstate(divide="ignore", invalid="ignore"):
        et = np.exp(t)
        z = a * (1.0 + et) / (1.0 - et)
        z[:, 0] = -a / np.tanh(0.5 * t[:, 0].real) + 0j
        z[:, -1] = -a * np.tanh(0.5 * t[:, -1].real) + 0j
        z[-1, :] = 1j * a / np.tan(0.5 * theta)
    z[-1, 0] = complex(np.inf, 0.0)
    z[-1, -1] = 0j
    i_of = {float(v): k for k, v in enumerate(x)}
    for xv, p in bottom.items():
        z[i_of[xv], 0] = complex(p, 0.0)
    z[i_of[x_lam], -1] = complex(lam, 0.0)
    j_base = int(np.argmin(np.abs(theta - th_base)))
    z[-1, j_base] = 1j
    # rounding must not leave a node below a cut
    z = np.where(z.imag < 0.0, z.real + 0j, z)

    idx = np.arange(n_r * n_t).reshape(n_r, n_t)
    z = z.ravel()
    t = t.ravel()
    ray0 = idx[:, 0]
    x0 = z[ray0].real
    top = idx[:, -1]
    xt = z[top].real
    labels = {
        "s7": ray0[x0 <= 1.0],
        "s6": ray0[(x0 >= 1.0) & (x0 <= lam1)],
        "s5": ray0[(x0 >= lam1) & (x0 <= lam2)],
        "s4": ray0[x0 >= lam2],
        # along increasing z
        "s1": top[xt >= lam][::-1],
        "s2": top[xt <= lam][::-1],
        "s3": idx[-1, ::-1],
        "end": idx[0, :],
    }
    branch = np.array([ray0[i_of[xv]] for xv in bottom] + [idx[i_of[x_lam], -1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        w = sheet_w(z, lam, lam1, lam2)
    w[branch[0]] = complex(np.inf, 0.0)  # z = 1, zero of g2
    w[branch[1]] = 0j  # z = lam1, zero of g1
    w[branch[2]] = complex(np.inf, 0.0)  # z = lam2, zero of g2
    w[branch[3]] = 0j  # z = lam, zero of g1
    inf_node = int(idx[-1, 0])
    w[inf_node] = 1.0 + 0j
    base = int(idx[-1, j_base])
    return DomainGrid(params, int(resolution), float(eps_end), float(R_max), x, theta, t, z, w, labels,
                      branch, base, inf_node)


# --------------------------------------------------------------------------
# integration over the grid
# --------------------------------------------------------------------------


@dataclass
class GridEdges:
    """Radial edges ``(i, j) -> (i+1, j)`` and angular edges ``(i, j) -> (i, j+1)``."""

    u: np.ndarray
    v: np.ndarray
    integrals: np.ndarray  # (n_edges, 3) complex integrals of phi1, phi2, phi3 from u to v
    arclength: np.ndarray  # surface length of each edge image
    n_radial: int


def grid_edges(grid: DomainGrid):
    n_r, n_t = grid.shape
    idx = np.arange(n_r * n_t).reshape(n_r, n_t)
    ru, rv = idx[:-1, :].ravel(), idx[1:, :].ravel()
    au, av = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    return np.concatenate([ru, au]), np.concatenate([rv, av]), ru.size


def integrate_grid_edges(grid: DomainGrid, tol=1e-12, backend=None) -> GridEdges:
    u, v, n_rad = grid_edges(grid)
    sing = np.zeros(grid.n_nodes, dtype=bool)
    sing[grid.branch_nodes] = True
    res = integrate_edges(grid.t[u], grid.t[v], grid.z[u], grid.z[v], sing[u], sing[v], grid.params, tol=tol,
                          backend=backend)
    return GridEdges(u, v, res.values[:, :3], res.values[:, 3].real, n_rad)


def quad_cycle_residuals(grid: DomainGrid, edges: GridEdges) -> np.ndarray:
    """``|sum of the four edge integrals|`` around each grid cell (max over the three forms)."""
    n_r, n_t = grid.shape
    rad = edges.integrals[: edges.n_radial].reshape(n_r - 1, n_t, 3)
    ang = edges.integrals[edges.n_radial:].reshape(n_r, n_t - 1, 3)
    # (i,j) -> (i+1,j) -> (i+1,j+1) -> (i,j+1) -> (i,j)
    cyc = rad[:, :-1] + ang[1:, :] - rad[:, 1:] - ang[:-1, :]
    return np.max(np.abs(cyc), axis=2)


def spanning_tree(grid: DomainGrid, order="bfs", seed=0):
    """Parent edges of a spanning tree rooted at ``grid.base``.

    Returns ``(order, parent, edge_id, sign)`` where ``sign`` is +1 when the
    edge is traversed from ``u`` to ``v``.  ``order`` is ``"bfs"`` (radial
    neighbours first), ``"angular"`` (angular neighbours first) or
    ``"random"`` (randomised BFS with the given seed).
    """
    n_r, n_t = grid.shape
    n = grid.n_nodes
    u, v, n_rad = grid_edges(grid)
    adj = [[] for _ in range(n)]
    for e in range(u.size):
        adj[u[e]].append((v[e], e, 1.0))
        adj[v[e]].append((u[e], e, -1.0))
    if order == "angular":
        for lst in adj:
            lst.sort(key=lambda t: t[1] < n_rad)
    elif order == "random":
        rng = np.random.default_rng(seed)
        for lst in adj:
            rng.shuffle(lst)
    elif order != "bfs":
        raise ValueError(f"unknown tree order {order!r}")
    parent = np.full(n, -1)
    pedge = np.full(n, -1)
    psign = np.zeros(n)
    seen = np.zeros(n, dtype=bool)
    seen[grid.base] = True
    visit = [grid.base]
    q = deque([grid.base])
    while q:
        k = q.popleft()
        for m, e, s in adj[k]:
            if not seen[m]:
                seen[m] = True
                parent[m], pedge[m], psign[m] = k, e, s
                visit.append(m)
                q.append(m)
    if not seen.all():
        raise GeometryError("grid graph is not connected")
    return np.array(visit), parent, pedge, psign


@dataclass
class SurfaceMesh:
    vertices: np.ndarray  # (n, 3)
    faces: np.ndarray  # (m, 3) int
    z: np.ndarray  # provenance per vertex
    w: np.ndarray
    labels: dict  # curve name -> vertex indices
    is_conjugate: bool = False
    copy_index: np.ndarray = None  # per-vertex copy id for assembled meshes
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    def diameter(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def face_areas(self):
        V, F = self.vertices, self.faces
        return 0.5 * np.linalg.norm(np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]]), axis=1)

    def _edge_keys(self):
        F = self.faces.astype(np.int64)
        a = np.concatenate([F[:, 0], F[:, 1], F[:, 2]])
        b = np.concatenate([F[:, 1], F[:, 2], F[:, 0]])
        return np.minimum(a, b) * self.n_vertices + np.maximum(a, b)

    def edges(self):
        keys = np.unique(self._edge_keys())
        return np.stack(np.divmod(keys, self.n_vertices), axis=1)

    def boundary_vertices(self):
        keys, cnt = np.unique(self._edge_keys(), return_counts=True)
        return np.unique(np.concatenate(np.divmod(keys[cnt == 1], self.n_vertices)))

    def is_manifold(self):
        """Every edge has one or two faces and every vertex fan is a single disc or half-disc."""
        _, cnt = np.unique(self._edge_keys(), return_counts=True)
        if cnt.size and cnt.max() > 2:
            return False
        # the link of vertex v has a node per incident edge and an arc per incident face
        n = np.int64(self.n_vertices)
        F = self.faces.astype(np.int64)
        v = F.ravel()
        nb1 = F[:, [1, 2, 0]].ravel()
        nb2 = F[:, [2, 0, 1]].ravel()
        keys, inv = np.unique(np.concatenate([v * n + nb1, v * n + nb2]), return_inverse=True)
        m = v.size
        graph = coo_matrix((np.ones(m), (inv[:m], inv[m:])), shape=(keys.size, keys.size))
        _, comp = connected_components(graph, directed=False)
        owner = keys // n
        pairs = np.unique(owner * keys.size + comp)
        return bool(np.all(np.bincount(pairs // keys.size) <= 1))


def grid_faces(grid: DomainGrid):
    """Two counterclockwise triangles per cell, diagonal ``(i, j) - (i+1, j+1)``."""
    n_r, n_t = grid.shape
    idx = np.arange(n_r * n_t).reshape(n_r, n_t)
    p00, p10 = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    p11, p01 = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    return np.concatenate([np.stack([p00, p10, p11], 1), np.stack([p00, p11, p01], 1)])


def integrate_piece(grid: DomainGrid, conjugate=False, edges: GridEdges = None, tree="bfs", seed=0,
                    cycle_tol=CYCLE_TOL, backend=None) -> SurfaceMesh:
    """Vertex positions ``Re int_{z=i}^z phi`` (``-Im`` for the conjugate piece)."""
    if edges is None:
        edges = integrate_grid_edges(grid, backend=backend)
    resid = quad_cycle_residuals(grid, edges)
    worst = float(resid.max())
    if worst > cycle_tol:
        i, j = np.unravel_index(int(resid.argmax()), resid.shape)
        raise CycleResidual(f"cycle residual {worst:.3g} at cell ({i}, {j}), z={grid.z[grid.index(i, j)]!r}")
    visit, parent, pedge, psign = spanning_tree(grid, tree, seed)
    acc = np.zeros((grid.n_nodes, 3), dtype=complex)
    for k in visit[1:]:
        acc[k] = acc[parent[k]] + psign[k] * edges.integrals[pedge[k]]
    X = -acc.imag if conjugate else acc.real
    faces = grid_faces(grid)
    mesh = SurfaceMesh(X.copy(), faces, grid.z.copy(), grid.w.copy(), {k: v.copy() for k, v in grid.labels.items()},
                       is_conjugate=bool(conjugate), copy_index=np.zeros(grid.n_nodes, dtype=int),
                       meta={"cycle_residual": worst, "resolution": grid.resolution, "eps_end": grid.eps_end,
                             "R_max": grid.R_max, "params": grid.params.as_tuple(), "tree": tree,
                             "curve_lengths": {s: float(curve_edge_lengths(grid, edges, s).sum()) for s in CURVES}})
    scale = max(mesh.diameter(), 1e-300)
    if mesh.face_areas().min() <= 1e-14 * scale * scale:
        raise GeometryError("degenerate face in the fundamental piece")
    return mesh


def curve_edge_lengths(grid: DomainGrid, edges: GridEdges, label):
    """Surface arclength of consecutive-node edges along a labelled curve."""
    nodes = np.asarray(grid.labels[label], dtype=np.int64)
    n = np.int64(grid.n_nodes)
    keys = np.minimum(edges.u, edges.v).astype(np.int64) * n + np.maximum(edges.u, edges.v)
    order = np.argsort(keys)
    want = np.minimum(nodes[:-1], nodes[1:]) * n + np.maximum(nodes[:-1], nodes[1:])
    pos = np.minimum(np.searchsorted(keys, want, sorter=order), keys.size - 1)
    found = keys[order[pos]] == want
    if not np.all(found):
        k = int(np.argmin(found))
        raise GeometryError(f"{label} nodes {nodes[k]}, {nodes[k + 1]} are not grid neighbours")
    return edges.arclength[order[pos]]


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


def symmetry_levels(piece: SurfaceMesh):
    """Plane offsets ``(c1, c2, c3)`` of S1 (x1), S2 (x2), S3 (x3) and ``(c4, c5)`` of S4 (x2), S5 (x1)."""
    V, L = piece.vertices, piece.labels
    return {
        "c1": float(V[L["s1"], 0].mean()), "c2": float(V[L["s2"], 1].mean()), "c3": float(V[L["s3"], 2].mean()),
        "c4": float(V[L["s4"], 1].mean()), "c5": float(V[L["s5"], 0].mean()),
    }


def _reflect(V, mask, c):
    out = V.copy()
    for bit, axis, key in ((1, 0, "c1"), (2, 1, "c2"), (4, 2, "c3")):
        if mask & bit:
            out[:, axis] = 2.0 * c[key] - out[:, axis]
    return out


class _UnionFind:
    def __init__(self, n):
        self.p = np.arange(n)

    def find(self, x):
        root = x
        while self.p[root] != root:
            root = self.p[root]
        while self.p[x] != root:
            self.p[x], x = root, self.p[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller index wins so the first occurrence is kept
            if ra < rb:
                self.p[rb] = ra
            else:
                self.p[ra] = rb


def assemble_surface(piece: SurfaceMesh, copies=(1, 1), lattice=None, weld_tol=WELD_TOL) -> SurfaceMesh:
    """Eight reflected copies of ``piece`` translated over ``copies`` lattice cells, welded.

    Copy ``(n1, n2, m)`` is ``R^m(piece) + n1 v1 + n2 v2`` where bit 0/1/2 of
    ``m`` reflects across the S1/S2/S3 plane.  Shared curves are matched by
    construction (same grid node in the neighbouring copy) and welded when
    they agree to ``weld_tol``; otherwise WeldFailure is raised.
    """
    if piece.is_conjugate:
        raise ValueError("assemble the non-conjugate piece")
    n1c, n2c = copies
    if n1c < 1 or n2c < 1:
        raise ValueError("copies must be >= (1, 1)")
    c = symmetry_levels(piece)
    if lattice is None:
        v1 = np.array([2.0 * (c["c5"] - c["c1"]), 0.0, 0.0])
        v2 = np.array([0.0, 2.0 * (c["c4"] - c["c2"]), 0.0])
    else:
        v1, v2 = np.asarray(lattice.v1, float), np.asarray(lattice.v2, float)
    nv = piece.n_vertices
    keys = [(i1, i2, m) for i1 in range(n1c) for i2 in range(n2c) for m in range(8)]
    slot = {k: s for s, k in enumerate(keys)}
    blocks = []
    face_blocks = []
    for s, (i1, i2, m) in enumerate(keys):
        blocks.append(_reflect(piece.vertices, m, c) + i1 * v1 + i2 * v2)
        F = piece.faces + s * nv
        if bin(m).count("1") % 2:
            F = F[:, ::-1]
        face_blocks.append(F)
    V = np.concatenate(blocks)
    F = np.concatenate(face_blocks)
    uf = _UnionFind(V.shape[0])
    worst = 0.0
    L = piece.labels

    def weld(s, t, nodes):
        nonlocal worst
        a, b = s * nv + nodes, t * nv + nodes
        gap = np.linalg.norm(V[a] - V[b], axis=1)
        worst = max(worst, float(gap.max()))
        if gap.max() > weld_tol:
            raise WeldFailure(f"copies {keys[s]} and {keys[t]} disagree by {gap.max():.3g} on a shared curve")
        for p, q in zip(a, b):
            uf.union(p, q)

    for s, (i1, i2, m) in enumerate(keys):
        for bit, curve_set in ((1, ("s1",)), (2, ("s2",)), (4, ("s3",))):
            t = slot[(i1, i2, m ^ bit)]
            if t > s:
                for name in curve_set:
                    weld(s, t, L[name])
        s1 = 1 if not m & 1 else -1
        k = (i1 + s1, i2, m ^ 1)
        if k in slot and slot[k] > s:
            weld(s, slot[k], np.unique(np.concatenate([L["s5"], L["s7"]])))
        s2 = 1 if not m & 2 else -1
        k = (i1, i2 + s2, m ^ 2)
        if k in slot and slot[k] > s:
            weld(s, slot[k], np.unique(np.concatenate([L["s4"], L["s6"]])))

    roots = np.array([uf.find(x) for x in range(V.shape[0])])
    keep = np.flatnonzero(roots == np.arange(V.shape[0]))
    new_index = np.full(V.shape[0], -1)
    new_index[keep] = np.arange(keep.size)
    remap = new_index[roots]
    Fw = remap[F]
    copy_of = np.repeat(np.arange(len(keys)), nv)
    labels = {}
    for name, nodes in piece.labels.items():
        labels[name] = np.unique(np.concatenate([remap[s * nv + nodes] for s in range(len(keys))]))
    return SurfaceMesh(V[keep], Fw, np.tile(piece.z, len(keys))[keep], np.tile(piece.w, len(keys))[keep], labels,
                       is_conjugate=False, copy_index=copy_of[keep],
                       meta={**piece.meta, "copies": (n1c, n2c), "weld_gap": worst, "v1": v1.tolist(),
                             "v2": v2.tolist(), "levels": c})


def rotate_about_vertical_line(piece: SurfaceMesh, point):
    """180 degree rotation about the vertical line through ``point``; winding reversed so the
    union with ``piece`` is consistently oriented."""
    V = piece.vertices.copy()
    V[:, 0] = 2.0 * point[0] - V[:, 0]
    V[:, 1] = 2.0 * point[1] - V[:, 1]
    return SurfaceMesh(V, piece.faces[:, ::-1].copy(), piece.z.copy(), piece.w.copy(),
                       {k: v.copy() for k, v in piece.labels.items()}, is_conjugate=piece.is_conjugate,
                       copy_index=np.ones(piece.n_vertices, dtype=int), meta=dict(piece.meta))


def double_conjugate_piece(conj: SurfaceMesh) -> SurfaceMesh:
    """Conjugate piece together with its rotation about the S3* line (shared S3* welded)."""
    if not conj.is_conjugate:
        raise ValueError("expected the conjugate piece")
    s3 = conj.labels["s3"]
    point = conj.vertices[s3, :2].mean(axis=0)
    rot = rotate_about_vertical_line(conj, point)
    n = conj.n_vertices
    V = np.concatenate([conj.vertices, rot.vertices])
    F = np.concatenate([conj.faces, rot.faces + n])
    remap = np.arange(2 * n)
    remap[n + s3] = s3
    keep = np.flatnonzero(remap == np.arange(2 * n))
    new_index = np.full(2 * n, -1)
    new_index[keep] = np.arange(keep.size)
    remap = new_index[remap]
    labels = {k: np.unique(remap[np.concatenate([v, v + n])]) for k, v in conj.labels.items()}
    return SurfaceMesh(V[keep], remap[F], np.tile(conj.z, 2)[keep], np.tile(conj.w, 2)[keep], labels,
                       is_conjugate=True, copy_index=np.repeat([0, 1], n)[keep],
                       meta={**conj.meta, "axis_point": point.tolist()})
