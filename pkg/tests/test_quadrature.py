import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dp3 import kernels
from dp3.algebra import FamilyParams, derive_constants
from dp3.curve import Arc, Line, end_loop, homology_loop, reverse_path, w_on_sheet
from dp3.errors import NoConvergence
from dp3.quadrature import (
    SingularIntegral, integrate_contour, integrate_edges, integrate_endpoint_singular, integrate_period_batch,
    period_rows,
)

P = FamilyParams(0.5, 2.0, 3.0)


def test_arcsine_integral():
    r = integrate_endpoint_singular(SingularIntegral(lambda x, dlo, dhi: 1.0 / np.sqrt(dlo * dhi), 0.0, 1.0))
    assert r.value == pytest.approx(math.pi, abs=1e-10)
    assert 0.0 <= r.error_estimate <= 1e-12


def test_thin_elliptic_interval():
    lam1, lam2 = 2.0, 2.0001
    f = lambda t, dlo, dhi: 1.0 / np.sqrt(dlo * (t + lam1) * dhi * (lam2 + t))
    r = integrate_endpoint_singular(SingularIntegral(f, lam1, lam2))
    assert r.value == pytest.approx(math.pi / (lam1 + lam2), rel=1e-9)
    assert r.value == pytest.approx(math.pi / 4, rel=1e-4)


def test_limit_integrand_near_lam1_one():
    lam, lam2 = 0.5, 3.0
    pre = (lam * lam2 - 1) / (2 * math.sqrt((1 - lam * lam) * (lam2 * lam2 - 1)))
    c = (1 - lam) * (1 + lam2)

    def f(s, dlo, dhi):
        return pre * (2 * (lam2 - lam) * s - c) / (2 * (lam * lam2 - 1) * s + c) / np.sqrt(dlo * dhi)

    r = integrate_endpoint_singular(SingularIntegral(f, 0.0, 1.0))
    assert r.value == pytest.approx(0.5 * math.pi * (2.5 / math.sqrt(6) - 1), abs=1e-12)
    assert r.value == pytest.approx(0.0323907, abs=5e-7)


@given(st.floats(-3, 3), st.floats(0.01, 4), st.integers(0, 3))
def test_error_estimate_bounds_actual_error(lo, width, k):
    hi = lo + width
    # int x^k / sqrt((x-lo)(hi-x)) has closed form pi * E[x^k] for the arcsine law
    mid, half = 0.5 * (lo + hi), 0.5 * width
    moments = [1.0, mid, mid ** 2 + half ** 2 / 2, mid ** 3 + 1.5 * mid * half ** 2]
    exact = math.pi * moments[k]
    r = integrate_endpoint_singular(SingularIntegral(lambda x, a, b: x ** k / np.sqrt(a * b), lo, hi,
                                                     target_tol=1e-11))
    assert abs(r.value - exact) <= max(r.error_estimate, 1e-14 * (1 + abs(exact))) * 10


def test_exhausted_levels_raise():
    f = lambda x, a, b: 1.0 / np.abs(x - 0.3141) ** 0.9
    with pytest.raises(NoConvergence):
        integrate_endpoint_singular(SingularIntegral(f, 0.0, 1.0, (0, 0), 1e-15), max_level=4)


def test_spec_validation():
    with pytest.raises(ValueError):
        SingularIntegral(lambda *a: 0, 1.0, 0.0)
    with pytest.raises(ValueError):
        SingularIntegral(lambda *a: 0, 0.0, 1.0, (-0.7, 0))


def test_exact_form_around_gamma1():
    loop = homology_loop("gamma1", P)
    r = integrate_contour(loop.segments, loop.start_w, P, tol=1e-12)
    a = derive_constants(P).a
    # gamma1 surrounds the end at z = a, so only the real part vanishes
    assert abs(r.values[2].real) < 1e-10
    assert r.values[2].imag == pytest.approx(math.pi / a, abs=1e-10)


def test_residue_circle_at_end():
    a = derive_constants(P).a
    segs, _, w0 = end_loop(1, 1, P)
    r = integrate_contour(segs, w0, P, tol=1e-12)
    assert r.values[2] == pytest.approx(1j * math.pi / a, abs=1e-10)
    assert abs(abs(r.values[0].real) - math.pi / a) < 1e-9
    assert math.pi / a == pytest.approx(4.2341565, abs=5e-6)


def test_reversal_negates():
    segs = [Line(3.0 + 0.5j, 0.2 + 2.0j), Arc(0j, abs(0.2 + 2.0j), math.atan2(2.0, 0.2), 2.5)]
    fwd = integrate_contour(segs, w_on_sheet(3.0 + 0.5j, P), P)
    back = integrate_contour(reverse_path(segs), fwd.w_end, P)
    assert np.max(np.abs(fwd.values + back.values)) < 1e-13 * (1 + np.max(np.abs(fwd.values)))


def test_path_deformation():
    z0, z1 = 3.5 + 0.1j, -2.5 + 0.3j
    w0 = w_on_sheet(z0, P)
    direct = integrate_contour([Line(z0, z1)], w0, P)
    detour = integrate_contour([Line(z0, 3.5 + 4j), Line(3.5 + 4j, -2.5 + 4j), Line(-2.5 + 4j, z1)], w0, P)
    assert np.max(np.abs(direct.values - detour.values)) < 1e-9
    assert direct.w_end == pytest.approx(detour.w_end, rel=1e-12)


class _TSegment:
    """Straight segment in t = log((z - a)/(z + a)), as a contour segment."""

    def __init__(self, t0, t1, a):
        self.t0, self.t1, self.a = t0, t1, a

    def point(self, s):
        e = np.exp(self.t0 + (self.t1 - self.t0) * np.asarray(s))
        return self.a * (1 + e) / (1 - e)

    def velocity(self, s):
        e = np.exp(self.t0 + (self.t1 - self.t0) * np.asarray(s))
        return self.a * 2 * e / (1 - e) ** 2 * (self.t1 - self.t0)

    @property
    def length(self):
        z = self.point(np.linspace(0, 1, 65))
        return float(np.sum(np.abs(np.diff(z))))


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_edges_match_contour_integration(backend):
    a = derive_constants(P).a
    t0 = np.array([-1.0 + 1.0j, -0.3 + 2.0j, -2.0 + 0.4j])
    t1 = np.array([-0.7 + 1.3j, -0.3 + 2.6j, -1.6 + 0.4j])
    z0 = a * (1 + np.exp(t0)) / (1 - np.exp(t0))
    z1 = a * (1 + np.exp(t1)) / (1 - np.exp(t1))
    no = np.zeros(3, dtype=bool)
    r = integrate_edges(t0, t1, z0, z1, no, no, P, backend=backend)
    for k in range(3):
        ref = integrate_contour([_TSegment(t0[k], t1[k], a)], w_on_sheet(z0[k], P), P, tol=1e-13).values
        assert np.max(np.abs(r.values[k, :3] - ref)) < 1e-11
        assert r.values[k, 2] == pytest.approx((t1[k] - t0[k]) / (2 * a), abs=1e-14)


def test_period_batch_backends_agree():
    rows = period_rows([P, FamilyParams(0.3, 1.01, 1.02), FamilyParams(0.9, 5.0, 40.0)])
    for kind in (kernels.KIND_XI1, kernels.KIND_XI2, kernels.KIND_V2):
        v_np, _ = integrate_period_batch(kind, rows, backend="numpy")
        v_nb, _ = integrate_period_batch(kind, rows, backend="numba")
        assert np.allclose(v_np, v_nb, rtol=1e-13, atol=1e-15)
