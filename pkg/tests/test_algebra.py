import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dp3.algebra import FamilyParams, check_lemma_ab, derive_constants, eval_g, g_sum_factored
from dp3.errors import DomainError

import mp_oracle


@st.composite
def triples(draw, max_gap=50.0):
    lam = draw(st.floats(1e-3, 1 - 1e-3))
    d1 = draw(st.floats(1e-6, max_gap))
    d2 = draw(st.floats(1e-6, max_gap))
    return FamilyParams(lam, 1.0 + d1, 1.0 + d1 + d2)


def random_triples(n, seed=0):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.01, 0.99, n)
    lam1 = 1.0 + 10.0 ** rng.uniform(-4, 1.5, n)
    lam2 = lam1 + 10.0 ** rng.uniform(-4, 1.5, n)
    return [FamilyParams(*t) for t in zip(lam, lam1, lam2)]


def test_identities_and_chain_on_random_triples():
    for p in random_triples(1000):
        rep = check_lemma_ab(p)
        assert rep.passed, (p, rep)
        assert rep.max_residual < 1e-12
        c = derive_constants(p)
        prod = p.lam * p.lam1 * p.lam2
        assert abs(c.a2 * c.b2 - prod) <= 1e-10 * max(1.0, prod)
        assert abs(c.a2 + c.b2 - c.alpha) <= 1e-10 * max(1.0, c.alpha)


def test_sign_pattern_of_identities():
    rep = check_lemma_ab(FamilyParams(0.5, 2.0, 3.0))
    assert rep.sign_pattern() == ("-", "+", "+", "-")


def test_constants_against_high_precision():
    p = FamilyParams(0.5, 2.0, 3.0)
    alpha, a, b = mp_oracle.derived(*p.as_tuple())
    c = derive_constants(p)
    assert c.alpha == pytest.approx(float(alpha), rel=1e-15)
    assert c.a == pytest.approx(float(a), rel=1e-15)
    assert c.b == pytest.approx(float(b), rel=1e-15)
    assert c.a == pytest.approx(0.7419637, abs=1e-7)


@given(triples())
def test_polynomial_sum_factors(p):
    c = derive_constants(p)
    z = np.array([0.3 + 0.2j, -1.7 + 0.4j, 2.5j, 5.0])
    lhs = eval_g("g1", z, p) + eval_g("g2", z, p)
    rhs = g_sum_factored(z, c)
    scale = np.abs(eval_g("g1", z, p)) + np.abs(eval_g("g2", z, p)) + 1.0
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale)


@given(triples())
def test_end_punctures_have_w_squared_minus_one(p):
    c = derive_constants(p)
    roots = np.array([p.lam, -1.0, p.lam1, -p.lam2, -p.lam, 1.0, -p.lam1, p.lam2])
    # a is rounded to the nearest double; near a root of g1 or g2 that rounding alone moves the ratio
    ulp_effect = 8 * np.finfo(float).eps * c.a * np.sum(1.0 / np.abs(c.a - roots))
    for z in (c.a, -c.a):
        r = eval_g("g1", z, p) / eval_g("g2", z, p)
        assert r == pytest.approx(-1.0, abs=1e-12 + ulp_effect)


@given(triples(max_gap=1e-3))
def test_small_gaps_keep_relative_accuracy(p):
    c = derive_constants(p)
    with mp.workdps(50):
        _, a, b = mp_oracle.derived(*p.as_tuple(), dps=50)
        lam1 = mp.mpf(p.lam1)
        exact = {
            "one_minus_a2": 1 - a * a,
            "b2_minus_1": b * b - 1,
            "b2_minus_lam1sq": b * b - lam1 * lam1,
        }
    for name, ref in exact.items():
        assert getattr(c, name) == pytest.approx(float(ref), rel=1e-9), name


@pytest.mark.parametrize("bad", [(0.0, 2, 3), (1.0, 2, 3), (0.5, 1.0, 3), (0.5, 3, 2), (0.5, 2, math.nan)])
def test_invalid_params_rejected(bad):
    with pytest.raises(DomainError):
        FamilyParams(*bad)


def test_eval_g_rejects_unknown_name():
    with pytest.raises(ValueError):
        eval_g("g3", 0.0, FamilyParams(0.5, 2, 3))
