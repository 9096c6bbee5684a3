import math

import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from dp3.algebra import FamilyParams, derive_constants
from dp3.errors import ParameterError
from dp3.surface import (
    CURVES, assemble_surface, build_domain_grid, double_conjugate_piece, integrate_grid_edges, integrate_piece,
    quad_cycle_residuals,
)


def _n_components(mesh):
    F = mesh.faces
    rows = np.concatenate([F[:, 0], F[:, 1], F[:, 2]])
    cols = np.concatenate([F[:, 1], F[:, 2], F[:, 0]])
    g = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(mesh.n_vertices,) * 2)
    return connected_components(g, directed=False)[0]


@pytest.fixture(scope="module")
def grid32(solved05):
    return build_domain_grid(solved05.params, 32)


def test_curve_labels_match_segments(grid32):
    p = grid32.params
    lam, lam1, lam2 = p.as_tuple()
    a = derive_constants(p).a
    z = grid32.z
    spans = {"s1": (lam, a), "s2": (0.0, lam), "s4": (lam2, math.inf), "s5": (lam1, lam2), "s6": (1.0, lam1),
             "s7": (a, 1.0)}
    for name, (lo, hi) in spans.items():
        zz = z[grid32.labels[name]]
        assert np.all(zz.imag == 0.0), name
        assert np.all((zz.real >= lo - 1e-12) & (zz.real <= hi + 1e-12)), name
        assert not np.any(np.isclose(zz.real, a, rtol=0, atol=grid32.eps_end * 0.999)), name
    s3 = z[grid32.labels["s3"]]
    fin = np.isfinite(s3)
    assert np.all(s3[fin].real == 0.0) and np.all(s3[fin].imag >= 0)
    assert z[grid32.base] == pytest.approx(1j, abs=1e-15)
    assert not np.isfinite(z[grid32.infinity])


def test_no_node_inside_end_disc(grid32):
    a = derive_constants(grid32.params).a
    d = np.abs(grid32.z - a)
    assert d.min() == pytest.approx(grid32.eps_end, rel=1e-9)


def test_branch_nodes_carry_zero_or_pole(grid32):
    w = grid32.w[grid32.branch_nodes]
    assert len(w) == 4
    assert np.all((w == 0) | ~np.isfinite(w))


def test_parameter_validation(solved05):
    p = solved05.params
    with pytest.raises(ParameterError):
        build_domain_grid(p, 4)
    with pytest.raises(ParameterError):
        build_domain_grid(p, 32, eps_end=1.0)
    with pytest.raises(ParameterError):
        build_domain_grid(p, 32, R_max=p.lam2)


def test_cycle_residuals_and_backends(grid32):
    e_nb = integrate_grid_edges(grid32, backend="numba")
    e_np = integrate_grid_edges(grid32, backend="numpy")
    assert quad_cycle_residuals(grid32, e_nb).max() < 1e-9
    assert np.max(np.abs(e_nb.integrals - e_np.integrals)) < 1e-12


def test_spanning_tree_independence(grid32):
    edges = integrate_grid_edges(grid32)
    ref = integrate_piece(grid32, edges=edges).vertices
    for tree, seed in (("angular", 0), ("random", 1), ("random", 7)):
        other = integrate_piece(grid32, edges=edges, tree=tree, seed=seed).vertices
        assert np.max(np.abs(other - ref)) < 1e-8, tree


def test_piece_structure(pieces05):
    piece, grid = pieces05["piece"], pieces05["grid"]
    assert piece.n_vertices == grid.n_nodes
    assert piece.is_manifold()
    assert piece.face_areas().min() > 1e-14 * piece.diameter() ** 2
    assert set(piece.meta["curve_lengths"]) == set(CURVES)
    x3 = piece.vertices[piece.labels["s3"], 2]
    assert np.ptp(x3) < 1e-12 * piece.diameter()


def test_conjugate_s2_is_a_segment_along_x2(pieces05):
    conj = pieces05["conj"]
    P = conj.vertices[conj.labels["s2"]]
    dev = max(np.ptp(P[:, 0]), np.ptp(P[:, 2]))
    assert dev < 1e-7 * conj.diameter()
    assert np.ptp(P[:, 1]) > 0.1


def test_end_growth_is_logarithmic(solved05):
    p = solved05.params
    a = derive_constants(p).a
    g = build_domain_grid(p, 32)
    g2 = build_domain_grid(p, 32, eps_end=0.5 * g.eps_end)
    top = np.abs(integrate_piece(g).vertices[:, 2]).max()
    top2 = np.abs(integrate_piece(g2).vertices[:, 2]).max()
    assert top2 - top == pytest.approx(math.log(2) / (2 * a), rel=0.02)


def test_assembly(pieces05, solved05):
    piece = pieces05["piece"]
    m = assemble_surface(piece, (1, 1), solved05.lattice)
    assert 7 * piece.n_vertices < m.n_vertices < 8 * piece.n_vertices
    assert m.faces.shape[0] == 8 * piece.faces.shape[0]
    assert m.meta["weld_gap"] < 1e-6
    assert _n_components(m) == 1
    assert m.is_manifold()
    m2 = assemble_surface(piece, (2, 1), solved05.lattice)
    assert m2.meta["weld_gap"] < 1e-6
    assert _n_components(m2) == 1 and m2.is_manifold()
    shift = m2.vertices[:, 0].max() - m.vertices[:, 0].max()
    assert shift == pytest.approx(solved05.lattice.v1[0], rel=1e-9)


def test_assembly_rejects_conjugate(pieces05):
    with pytest.raises(ValueError):
        assemble_surface(pieces05["conj"])
    with pytest.raises(ValueError):
        double_conjugate_piece(pieces05["piece"])


def test_doubled_conjugate_is_manifold(pieces05):
    d = double_conjugate_piece(pieces05["conj"])
    assert d.n_vertices == 2 * pieces05["conj"].n_vertices - len(pieces05["conj"].labels["s3"])
    assert d.is_manifold() and _n_components(d) == 1


def test_manifold_detector_rejects_bowtie():
    from dp3.surface import SurfaceMesh

    V = np.zeros((5, 3))
    F = np.array([[0, 1, 2], [0, 3, 4]])
    m = SurfaceMesh(V, F, np.zeros(5), np.zeros(5), {})
    assert not m.is_manifold()
    F3 = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    assert not SurfaceMesh(V, F3, np.zeros(5), np.zeros(5), {}).is_manifold()
