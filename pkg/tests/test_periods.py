import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dp3.algebra import FamilyParams, check_lemma_ab
from dp3.errors import BracketFailure, NoSignChange
from dp3.periods import (
    asymptotic_checks, eval_v2, eval_xi1, eval_xi2, sign_field, solve_lambda2_on_c2, solve_period_problem,
    xi1_limit_near_one, xi2_slope_at_diagonal,
)

import mp_oracle
from reference_values import (
    LAM2_STAR_05_2, SOLVED, V2_05_2_3, XI1_05_1p1em4_3, XI1_05_2_3, XI2_05_2_3,
)


def test_frozen_values_at_reference_triple():
    assert eval_xi1(0.5, 2, 3).value == pytest.approx(XI1_05_2_3, rel=1e-12)
    assert eval_xi2(0.5, 2, 3).value == pytest.approx(XI2_05_2_3, rel=1e-12)
    assert eval_v2(0.5, 2, 3).value == pytest.approx(V2_05_2_3, rel=1e-12)
    assert eval_xi1(0.5, 1 + 1e-4, 3).value == pytest.approx(XI1_05_1p1em4_3, rel=1e-10)


@pytest.mark.parametrize("triple", [(0.2, 1.3, 7.0), (0.8, 1.05, 1.06), (0.5, 12.0, 30.0)])
def test_live_oracle(triple):
    assert eval_xi1(*triple).value == pytest.approx(float(mp_oracle.xi1(*triple)), rel=1e-11, abs=1e-13)
    assert eval_xi2(*triple).value == pytest.approx(float(mp_oracle.xi2(*triple)), rel=1e-11, abs=1e-13)
    assert eval_v2(*triple).value == pytest.approx(float(mp_oracle.v2(*triple)), rel=1e-11)


@pytest.mark.parametrize("triple,sign", [
    ((0.5, 1 + 1e-6, 3), 1), ((0.5, 40, 41), -1),
])
def test_xi1_signs(triple, sign):
    assert np.sign(eval_xi1(*triple).value) == sign


@pytest.mark.parametrize("triple,sign", [
    ((0.5, 2, 2.001), 1), ((0.5, 2, 500), -1), ((0.5, 1 + 1e-5, 1.9), 1),
])
def test_xi2_signs(triple, sign):
    assert np.sign(eval_xi2(*triple).value) == sign


@st.composite
def triples(draw):
    lam = draw(st.floats(0.01, 0.99))
    lam1 = 1.0 + 10 ** draw(st.floats(-5, 2))
    return lam, lam1, lam1 * (1 + 10 ** draw(st.floats(-5, 2)))


@given(triples())
def test_v2_positive_and_errors_small(t):
    r = eval_v2(*t)
    assert r.value > 0
    for res in (r, eval_xi1(*t), eval_xi2(*t)):
        assert 0.0 <= res.error_estimate and math.isfinite(res.value)


def test_c2_root():
    r = solve_lambda2_on_c2(0.5, 2.0)
    assert r.lam2 == pytest.approx(LAM2_STAR_05_2, rel=1e-12)
    assert abs(r.xi2) < 1e-10
    assert not r.multiple
    assert eval_xi2(0.5, 2.0, r.lam2 * (1 - 1e-6)).value > 0


def test_c2_root_tolerance_monotone():
    r1 = solve_lambda2_on_c2(0.5, 2.0, tol=1e-8)
    r2 = solve_lambda2_on_c2(0.5, 2.0, tol=0.5e-8)
    assert abs(r1.lam2 - r2.lam2) < 1e-8


def test_c2_bracket_failure():
    # starting far from the diagonal, xi2 is already negative: no bracket
    with pytest.raises(BracketFailure):
        solve_lambda2_on_c2(0.5, 2.0, delta=1e3)


@pytest.mark.parametrize("lam", sorted(SOLVED))
def test_solved_parameters_match_oracle(lam):
    lam1, lam2, v2 = SOLVED[lam]
    r = solve_period_problem(lam)
    assert r.params.lam1 == pytest.approx(lam1, rel=1e-10)
    assert r.params.lam2 == pytest.approx(lam2, rel=1e-10)
    assert r.lattice.v2[1] == pytest.approx(v2, rel=1e-10)
    assert abs(r.residuals.xi1) < 1e-9 and abs(r.residuals.xi2) < 1e-9
    assert check_lemma_ab(r.params).passed
    assert r.lattice.v1[0] > 0 and r.lattice.v2[1] > 0
    assert r.lattice.v1[1:].tolist() == [0.0, 0.0] and r.lattice.v2[[0, 2]].tolist() == [0.0, 0.0]
    # independent two-dimensional check with the high-precision integrands
    assert abs(float(mp_oracle.xi1(lam, r.params.lam1, r.params.lam2))) < 1e-10


def test_root_consistency_at_tighter_quadrature(solved05):
    p = solved05.params
    assert abs(eval_xi1(*p.as_tuple(), tol=1e-13).value) < 10 * solved05.tol
    assert abs(eval_xi2(*p.as_tuple(), tol=1e-13).value) < 10 * solved05.tol


def test_no_sign_change_reports_scan():
    with pytest.raises(NoSignChange) as info:
        solve_period_problem(0.5, scan=[1.0001, 1.0002, 1.0004])
    assert len(info.value.scanned) == 3


def test_solve_rejects_bad_lambda():
    with pytest.raises(ValueError):
        solve_period_problem(1.0)


def test_json_keys(solved05):
    d = json.loads(solved05.to_json())
    assert list(d) == ["lambda", "lambda1", "lambda2", "alpha", "a", "b", "xi1", "xi2", "v1x", "v2y", "tol"]
    assert d["lambda1"] == solved05.params.lam1


def test_asymptotics():
    checks = {c.name: c for c in asymptotic_checks(0.5)}
    assert set(checks) == {"xi1_near_lam1_one", "xi2_slope_at_diagonal", "xi2_vanishes_at_diagonal",
                           "xi2_near_lam1_one"}
    assert all(c.passed for c in checks.values()), checks
    assert checks["xi1_near_lam1_one"].target == pytest.approx(0.5 * math.pi * (2.5 / math.sqrt(6) - 1), rel=1e-15)
    assert checks["xi2_slope_at_diagonal"].target == pytest.approx(math.pi / (7 * math.sqrt(11.25)), rel=1e-14)


def test_closed_form_limits():
    assert xi1_limit_near_one(0.5, 3.0) == pytest.approx(0.0323907, abs=5e-7)
    assert xi2_slope_at_diagonal(0.5, 2.0) == pytest.approx(0.1338059, abs=1e-7)


def test_sign_field_structure():
    f = sign_field(0.5, n=24)
    assert np.all(f.lam1 > 1) and np.all(f.lam2 > f.lam1)
    assert np.all(f.sign_xi2[0] > 0)
    assert np.all(f.sign_xi2[-1] < 0)
    assert np.all(f.sign_xi1[:, -1] < 0) and np.any(f.sign_xi1 > 0)
    assert len(f.crossing_cells()) > 0
    lines = f.to_csv().splitlines()
    assert lines[0] == "lambda1,lambda2,sign_xi1,sign_xi2" and len(lines) == 24 * 24 + 1


def test_sign_field_rejects_bad_grid():
    with pytest.raises(ValueError):
        sign_field(0.5, eps=0.7)
