import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from scalewave.exponents import (
    CoefficientPair,
    DecayForecast,
    ExponentPair,
    RegimeKind,
    SystemCoefficients,
    alpha,
    boundary_q_of_p,
    classify,
    conjectured_strauss_region,
    critical_diagonal,
    delta,
    derive,
    f_shift,
    gn_admissible,
    gn_theta,
    p_fujita,
    symmetric_max_form,
)

C57 = SystemCoefficients.from_values(5, 0, 7, 0, 1)


# --- derive ----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 7])
def test_mu_one_gives_alpha_one(n):
    d = derive(SystemCoefficients.from_values(1, 0, 1, 0, n))
    assert d.delta1 == 0 and d.alpha1 == 1


def test_derive_acceptance_coefficients():
    d = derive(C57)
    assert (d.delta1, d.delta2) == (16, 36)
    assert (d.alpha1, d.alpha2) == (1, 1)
    assert (d.p_tilde, d.q_tilde) == (3, 3)
    assert d.parabolic_like == (True, True)


def test_derive_n3_mu2():
    d = derive(SystemCoefficients.from_values(2, 0, 2, 0, 3))
    assert d.delta1 == 1 and d.alpha1 == 1
    assert d.parabolic_like == (False, False)


def test_derive_reports_negative_delta():
    d = derive(SystemCoefficients.from_values(1, 1, 5, 0, 1))
    assert d.alpha1 is None
    assert any("alpha undefined" in s for s in d.issues)


def test_derive_reports_undefined_threshold():
    # n = 1, alpha2 = 0 makes n + alpha2 - 1 = 0
    d = derive(SystemCoefficients.from_values(5, 0, 0, 0, 1))
    assert d.alpha2 == 0
    assert d.p_tilde is None
    assert any("threshold undefined" in s for s in d.issues)


def test_coefficients_validate():
    with pytest.raises(ValueError):
        CoefficientPair(-1, 0)
    with pytest.raises(ValueError):
        CoefficientPair(1, -0.5)
    with pytest.raises(ValueError):
        SystemCoefficients.from_values(1, 0, 1, 0, 0)
    with pytest.raises(ValueError):
        ExponentPair(1, 2)


# --- f_shift, gn_theta -----------------------------------------------------


def test_f_shift_examples():
    assert f_shift(2, 2, 1, 1) == pytest.approx(0.5, abs=1e-15)
    assert f_shift(8, 2.5, 1, 1) == pytest.approx(-1 / 38, abs=1e-15)
    assert f_shift(8, Fraction(5, 2), 1, 1, exact=True) == Fraction(-1, 38)


@pytest.mark.parametrize("n,a", [(1, 1), (2, 0.5), (3, 2), (4, 1)])
def test_f_shift_zero_at_fujita(n, a):
    p = 1 + 2 / (n + a - 1)
    assert f_shift(p, p, n, a) == pytest.approx(0, abs=1e-14)


def test_f_shift_rejects_small_product():
    with pytest.raises(ValueError):
        f_shift(0.5, 2, 1, 1)


def test_gn_theta():
    assert gn_theta(2, 5) == 0
    assert gn_theta(4, 1) == 0.25
    assert gn_admissible(2 * 3, 3) and not gn_admissible(2 * 3.01, 3)


# --- classify examples -----------------------------------------------------


def test_classify_blowup_example():
    v = classify(C57, ExponentPair(2, 2))
    assert v.kind is RegimeKind.BLOW_UP
    assert v.f1 == pytest.approx(0.5) and v.f2 == pytest.approx(0.5)
    assert v.forecast is None
    assert v.blowup_branch == "both"


def test_classify_supercritical_example():
    v = classify(C57, ExponentPair(4, 4))
    assert v.kind is RegimeKind.GLOBAL_SUPERCRITICAL_BOTH
    assert v.gamma is None and v.gamma_bar is None
    assert v.forecast.rate_u_energy == pytest.approx(-1.5)
    assert v.forecast.rate_u_l2 == pytest.approx(-0.5)
    assert v.forecast.rate_v_energy == pytest.approx(-1.5)
    assert v.forecast.rate_v_l2 == pytest.approx(-0.5)
    assert v.blowup_branch is None


def test_classify_loss_example():
    v = classify(C57, ExponentPair(2.5, 8))
    assert v.kind is RegimeKind.GLOBAL_LOSS_ON_U
    assert v.gamma == pytest.approx(0.5)
    assert v.f2 == pytest.approx(-1 / 38)
    assert v.forecast.rate_u_l2 == pytest.approx(0.0, abs=1e-15)
    assert v.forecast.rate_v_l2 == pytest.approx(-0.5)


def test_classify_exact_matches_float():
    for pq in [(2, 2), (4, 4), (2.5, 8), (8, 2.5)]:
        a = classify(C57, ExponentPair(*pq))
        b = classify(C57, ExponentPair(*pq), exact=True)
        assert a.kind is b.kind
        assert a.f1 == pytest.approx(b.f1, abs=1e-15)
        assert b.exact_values["f1"] is not None


def test_classify_limit_case_uses_epsilon():
    v = classify(C57, ExponentPair(3, 8), epsilon=0.01)
    assert v.kind is RegimeKind.GLOBAL_LOSS_ON_U
    assert v.gamma == pytest.approx(0.01)


def test_classify_exact_boundary_tie():
    # p exactly p~ = 3 decided as loss-of-decay even with exact arithmetic
    v = classify(C57, ExponentPair(Fraction(3), 8), exact=True)
    assert v.kind is RegimeKind.GLOBAL_LOSS_ON_U


def test_classify_rejects_negative_delta():
    with pytest.raises(ValueError, match="delta"):
        classify(SystemCoefficients.from_values(1, 1, 5, 0, 1), ExponentPair(2, 2))


def test_classify_undetermined_lists_notes():
    # mu = 2: delta = 1 < (n+1)^2 so the global hypotheses fail
    c = SystemCoefficients.from_values(2, 0, 2, 0, 3)
    v = classify(c, ExponentPair(5, 5))
    assert v.kind is RegimeKind.UNDETERMINED
    assert v.admissibility_notes


def test_admissibility_notes_individual():
    # n = 3: p = 4 exceeds n/(n-2) = 3 and q = 1.9 is below 2, reported separately
    c = SystemCoefficients.from_values(30, 0, 30, 0, 3)
    v = classify(c, ExponentPair(4, 1.9))
    assert v.kind is RegimeKind.UNDETERMINED
    assert len(v.admissibility_notes) >= 2


def test_surd_alpha_exact_path():
    c = SystemCoefficients.from_values(6, 1, 5, 0, 1)  # delta1 = 21, not a square
    v = classify(c, ExponentPair(3, 3), exact=True)
    w = classify(c, ExponentPair(3, 3))
    assert v.kind is w.kind
    assert "sqrt" in v.exact_values["alpha1"]


# --- conjecture overlay ----------------------------------------------------


def test_conjecture_examples():
    assert conjectured_strauss_region(SystemCoefficients.from_values(0, 0, 0, 0, 1), ExponentPair(2, 2))
    assert not conjectured_strauss_region(SystemCoefficients.from_values(10, 0, 10, 0, 1), ExponentPair(2, 2))


def test_symmetric_alternative_form_is_not_canonical():
    # the two forms differ by 1/(pq-1) at p = q
    p = 2.0
    assert symmetric_max_form(ExponentPair(p, p), 1, 1) == pytest.approx(f_shift(p, p, 1, 1) - 1 / (p * p - 1))


# --- properties ------------------------------------------------------------

reals = st.floats(min_value=0, max_value=20, allow_nan=False)
exps = st.floats(min_value=1.01, max_value=12, allow_nan=False)
dims = st.integers(min_value=1, max_value=6)


@given(mu=reals, frac=st.floats(0, 1))
def test_alpha_range(mu, frac):
    nu_sq = frac * (mu - 1) ** 2 / 4
    a = alpha(CoefficientPair(mu, nu_sq))
    assert -1e-12 <= a <= (mu + 1) / 2 + 1e-12


@given(mu=reals, f1=st.floats(0, 1), f2=st.floats(0, 1))
def test_alpha_monotone_in_mass(mu, f1, f2):
    # a larger mass shrinks delta, so alpha = (mu + 1 - sqrt(delta))/2 can only grow
    lo, hi = sorted((f1, f2))
    top = (mu - 1) ** 2 / 4
    assert alpha(CoefficientPair(mu, lo * top)) <= alpha(CoefficientPair(mu, hi * top)) + 1e-12


@given(mu=reals, frac=st.floats(0, 1))
def test_delta_formula(mu, frac):
    nu_sq = frac * 3
    assert delta(CoefficientPair(mu, nu_sq)) == pytest.approx((mu - 1) ** 2 - 4 * nu_sq, abs=1e-9)


def _rat(draw, lo, hi, den=97):
    return Fraction(draw(st.integers(int(lo * den), int(hi * den))), den)


@st.composite
def rational_tuples(draw):
    n = draw(dims)
    a1 = _rat(draw, 0, 5)
    a2 = _rat(draw, 0, 5)
    p = _rat(draw, 1.02, 10)
    q = _rat(draw, 1.02, 10)
    return n, a1, a2, p, q


@given(rational_tuples())
def test_equivalence_of_blowup_conditions(t):
    n, a1, a2, p, q = t
    direct = max((p + 1) / (p * q - 1) - a1 / 2, (q + 1) / (p * q - 1) - a2 / 2) >= Fraction(n - 1, 2)
    via_f = f_shift(p, q, n, a1, exact=True) >= 0 or f_shift(q, p, n, a2, exact=True) >= 0
    assert direct == via_f


@st.composite
def screened_tuples(draw):
    n = draw(dims)
    a1 = _rat(draw, 0, 5)
    a2 = _rat(draw, 0, 5)
    assume(n + a1 - 1 > 0 and n + a2 - 1 > 0)
    pt = (n + a1 + 1) / (n + a2 - 1)
    qt = (n + a2 + 1) / (n + a1 - 1)
    assume(pt > 1 and qt > 1)
    u = Fraction(draw(st.integers(1, 1000)), 1000)
    w = Fraction(draw(st.integers(1, 1000)), 1000)
    return n, a1, a2, 1 + u * (pt - 1), 1 + w * (qt - 1)


@given(screened_tuples())
def test_screening_implication(t):
    n, a1, a2, p, q = t
    assert f_shift(p, q, n, a1, exact=True) >= 0
    assert f_shift(q, p, n, a2, exact=True) >= 0


@given(rational_tuples())
def test_supercritical_implies_negative_f(t):
    n, a1, a2, p, q = t
    assume(n + a1 - 1 > 0 and n + a2 - 1 > 0)
    if p > (n + a1 + 1) / (n + a2 - 1) and q > (n + a2 + 1) / (n + a1 - 1):
        assert f_shift(p, q, n, a1, exact=True) < 0
        assert f_shift(q, p, n, a2, exact=True) < 0


swap_kind = {
    RegimeKind.BLOW_UP: RegimeKind.BLOW_UP,
    RegimeKind.GLOBAL_SUPERCRITICAL_BOTH: RegimeKind.GLOBAL_SUPERCRITICAL_BOTH,
    RegimeKind.GLOBAL_LOSS_ON_U: RegimeKind.GLOBAL_LOSS_ON_V,
    RegimeKind.GLOBAL_LOSS_ON_V: RegimeKind.GLOBAL_LOSS_ON_U,
    RegimeKind.UNDETERMINED: RegimeKind.UNDETERMINED,
}


@settings(max_examples=200)
@given(mu1=st.floats(0, 20), mu2=st.floats(0, 20), f1=st.floats(0, 1), f2=st.floats(0, 1), n=dims, p=exps, q=exps)
def test_swap_symmetry(mu1, mu2, f1, f2, n, p, q):
    c = SystemCoefficients.from_values(mu1, f1 * (mu1 - 1) ** 2 / 4, mu2, f2 * (mu2 - 1) ** 2 / 4, n)
    a = classify(c, ExponentPair(p, q))
    b = classify(c.swapped(), ExponentPair(q, p))
    assert b.kind is swap_kind[a.kind]
    assert (a.f1, a.f2) == pytest.approx((b.f2, b.f1))
    if a.forecast is not None:
        s = a.forecast.swapped()
        assert b.forecast.as_dict() == pytest.approx(s.as_dict())


@given(mu1=st.floats(0, 20), mu2=st.floats(0, 20), n=dims, p=exps, q=exps)
def test_forecast_l2_loses_one_power(mu1, mu2, n, p, q):
    v = classify(SystemCoefficients.from_values(mu1, 0, mu2, 0, n), ExponentPair(p, q))
    if v.forecast is not None:
        fc: DecayForecast = v.forecast
        assert fc.rate_u_l2 == pytest.approx(fc.rate_u_energy + 1)
        assert fc.rate_v_l2 == pytest.approx(fc.rate_v_energy + 1)


@given(mu=st.floats(1.5, 30), n=dims)
def test_symmetric_boundary_at_fujita(mu, n):
    c = SystemCoefficients.from_values(mu, 0, mu, 0, n)
    a = alpha(c.eq1)
    assume(n + a - 1 > 0.05)
    pf = p_fujita(n + a - 1)
    assert critical_diagonal(c) == pytest.approx(pf)
    assert classify(c, ExponentPair(pf * (1 - 1e-6), pf * (1 - 1e-6))).max_f > 0
    assert classify(c, ExponentPair(pf * (1 + 1e-6), pf * (1 + 1e-6))).max_f < 0


@given(p=st.floats(1.05, 10), n=dims, a=st.floats(0.1, 4))
def test_boundary_curve_zero(p, n, a):
    q = boundary_q_of_p(p, n, a)
    assume(q is not None and p * q > 1.01)
    assert f_shift(p, q, n, a) == pytest.approx(0, abs=1e-9)


@settings(max_examples=150)
@given(rational_tuples())
def test_exact_and_float_agree_off_boundary(t):
    n, a1, a2, p, q = t
    fe = f_shift(p, q, n, a1, exact=True)
    ff = f_shift(float(p), float(q), n, float(a1))
    if abs(fe) > 1e-12:
        assert (fe >= 0) == (ff >= 0)
    assert math.isclose(float(fe), ff, abs_tol=1e-12)
