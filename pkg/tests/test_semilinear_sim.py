import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scalewave.diagnostics import sign_conditions
from scalewave.exponents import DecayForecast, ExponentPair, SystemCoefficients, classify
from scalewave.semilinear_sim import (
    FIELDS,
    DataProfile,
    FieldPair,
    RadialGrid,
    SimulationTrace,
    check_forecast,
    dalembert_mu2,
    initial_state,
    run,
    solve_linear,
    step,
    three_grid_order,
)

MU2 = SystemCoefficients.from_values(2, 0, 2, 0, 1)


def synthetic_trace(rate_l2=-1.5, rate_e=-2.5, t_max=300.0):
    t = np.linspace(0, t_max, 601)
    l2 = (1 + t) ** rate_l2
    e = (1 + t) ** (2 * rate_e)  # stored squared
    grid = RadialGrid(1, 400.0, 4001)
    return SimulationTrace(t, l2, l2, l2, l2, e, e, None, t_max, grid, 0.05)


# --- grid and data ---------------------------------------------------------


@pytest.mark.parametrize("args", [(1, 10.0, 63), (0, 10.0, 100), (1, 0.0, 100), (1, -1.0, 100)])
def test_grid_validation(args):
    with pytest.raises(ValueError):
        RadialGrid(*args)


def test_grid_uniform():
    g = RadialGrid(2, 10.0, 101)
    assert g.h == pytest.approx(0.1)
    assert np.allclose(np.diff(g.r), g.h) and g.r[-1] == pytest.approx(10.0)


def test_grid_l2_of_bump():
    g = RadialGrid(3, 10.0, 4001)
    w = np.exp(-g.r**2)
    assert g.l2(w) == pytest.approx(math.sqrt(4 * math.pi * math.sqrt(math.pi / 2) / 8), rel=1e-6)


def test_profile_validation():
    with pytest.raises(ValueError):
        DataProfile("Bump", 1.0, 0.0)
    with pytest.raises(ValueError):
        DataProfile("Bump", 1.0, 1.0, ("w0",))
    with pytest.raises(ValueError):
        DataProfile("Bump", 1.0, 1.0, ())
    with pytest.raises(ValueError):
        DataProfile("Ring", 1.0, 1.0)
    with pytest.raises(ValueError):
        initial_state(RadialGrid(1, 4.0, 100), [DataProfile("Bump", 1.0, 4.0)])


@pytest.mark.parametrize("family", ["Bump", "Gaussian-truncated"])
def test_profile_support(family):
    d = DataProfile(family, 2.0, 3.0)
    r = np.linspace(0, 6, 601)
    vals = d.evaluate(r)
    assert vals[0] == pytest.approx(2.0)
    assert np.all(vals[r >= 3.0] == 0) and np.all(vals >= 0)
    assert np.all(np.diff(vals) <= 1e-15)


def test_initial_state_assignment():
    g = RadialGrid(1, 10.0, 101)
    s = initial_state(g, [DataProfile("Bump", 1.0, 2.0, ("u1", "v0"))])
    assert np.all(s.u == 0) and np.all(s.vt == 0)
    assert s.ut[0] == pytest.approx(1.0) and s.v[0] == pytest.approx(1.0)


# --- step ------------------------------------------------------------------


def test_zero_data_stays_zero():
    g = RadialGrid(1, 50.0, 501)
    tr = run(g, SystemCoefficients.from_values(5, 1, 7, 2, 1), ExponentPair(2, 3), [], 40.0, keep_final=True)
    assert not tr.diverged
    for a in (tr.l2_u, tr.l2_v, tr.linf_u, tr.energy_v):
        assert np.all(a == 0)
    assert all(np.all(f == 0) for f in (tr.final_state.u, tr.final_state.ut, tr.final_state.v, tr.final_state.vt))


def test_step_checks():
    g = RadialGrid(1, 10.0, 101)
    c = SystemCoefficients.from_values(2, 0, 2, 0, 1)
    s = FieldPair.zeros(g)
    with pytest.raises(ValueError):
        step(s, c, ExponentPair(2, 2), 0.06, g)
    bad = FieldPair.zeros(g)
    bad.u[3] = np.nan
    with pytest.raises(ValueError):
        step(bad, c, ExponentPair(2, 2), 0.05, g)
    out = step(s, c, ExponentPair(2, 2), 0.05, g)
    assert out.t == pytest.approx(0.05) and np.all(out.stack() == 0)


def test_step_flags_threshold():
    g = RadialGrid(1, 10.0, 101)
    s = initial_state(g, [DataProfile("Bump", 1.0, 2.0)])
    with pytest.raises(FloatingPointError):
        step(s, SystemCoefficients.from_values(0, 0, 0, 0, 1), ExponentPair(2, 2), 0.05, g, threshold=0.5)


def test_step_matches_run():
    g = RadialGrid(1, 20.0, 201)
    c = SystemCoefficients.from_values(3, 0.5, 4, 0, 1)
    data = [DataProfile("Bump", 0.5, 3.0)]
    s = initial_state(g, data)
    for _ in range(10):
        s = step(s, c, ExponentPair(2, 3), 0.05, g)
    tr = run(g, c, ExponentPair(2, 3), data, 0.5, keep_final=True)
    # step() accumulates t by addition, run() uses k*dt: equal up to rounding
    np.testing.assert_allclose(s.u, tr.final_state.u, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(s.vt, tr.final_state.vt, rtol=1e-12, atol=1e-15)


# --- references ------------------------------------------------------------


def test_dalembert_oracle():
    g = RadialGrid(1, 20.0, 2049)
    b0 = DataProfile("Bump", 1.0, 4.0, ("u0",))
    b1 = DataProfile("Bump", 0.5, 3.0, ("u1",))
    state = solve_linear(g, MU2, [b0, b1], 5.0)
    idx = np.arange(0, g.N, 8)
    ref = dalembert_mu2(lambda r: b0.evaluate(np.array([r]))[0], lambda r: b1.evaluate(np.array([r]))[0],
                        g.r[idx], 5.0)
    assert np.max(np.abs(state.u[idx] - ref)) / np.max(np.abs(ref)) < 1e-3


def test_spatial_order_two():
    order = three_grid_order(MU2, [DataProfile("Gaussian-truncated", 1.0, 4.0)], 40.0, 401, 2.0)
    assert order == pytest.approx(2.0, abs=0.2)


def test_temporal_order_at_least_two():
    g = RadialGrid(1, 40.0, 401)
    data = [DataProfile("Gaussian-truncated", 1.0, 4.0)]
    c = SystemCoefficients.from_values(3, 1, 5, 0, 1)
    sols = [solve_linear(g, c, data, 2.0, dt=g.h * f).u for f in (0.4, 0.2, 0.1)]
    e1 = np.max(np.abs(sols[0] - sols[1]))
    e2 = np.max(np.abs(sols[1] - sols[2]))
    assert math.log2(e1 / e2) >= 2.0


def test_finite_speed_leak():
    g = RadialGrid(1, 60.0, 1201)
    c = SystemCoefficients.from_values(5, 0, 7, 0, 1)
    data = [DataProfile("Gaussian-truncated", 1.0, 4.0)]
    for t in (5.0, 20.0):
        s = solve_linear(g, c, data, t)
        outside = g.r > 4.0 + t + g.h
        assert max(np.max(np.abs(s.u[outside])), np.max(np.abs(s.v[outside]))) < 1e-12


# --- run -------------------------------------------------------------------


def test_lightcone_guard(coeffs_57):
    g = RadialGrid(1, 100.0, 1001)
    data = [DataProfile("Bump", 1.0, 4.0)]
    lc = g.lightcone_t_max(4.0)
    assert lc == pytest.approx(100.0 - 4.0 - 0.4)
    with pytest.raises(ValueError, match="light-cone"):
        run(g, coeffs_57, ExponentPair(2, 2), data, lc + 0.1)
    tr = run(g, coeffs_57, ExponentPair(2, 2), data, lc)
    assert tr.times[-1] <= tr.lightcone_t_max + 1e-9


def test_run_rejects_dimension_mismatch(coeffs_57):
    with pytest.raises(ValueError):
        run(RadialGrid(2, 50.0, 501), coeffs_57, ExponentPair(2, 2), [], 10.0)


def test_run_deterministic(coeffs_57):
    g = RadialGrid(1, 60.0, 601)
    data = [DataProfile("Bump", 0.3, 4.0)]
    a = run(g, coeffs_57, ExponentPair(2, 3), data, 40.0)
    b = run(g, coeffs_57, ExponentPair(2, 3), data, 40.0)
    assert all(np.array_equal(x, y) for x, y in zip(a.rows(), b.rows()))


def test_supercritical_small_data(trace_supercritical, coeffs_57):
    assert not trace_supercritical.diverged
    v = classify(coeffs_57, ExponentPair(4, 4))
    rep = check_forecast(trace_supercritical, v, (40, 300))
    assert abs(rep.check("l2_u").measured + 0.5) <= 0.25
    assert rep.passed


def test_subcritical_large_data_blows_up(coeffs_57, grid_400):
    data = [DataProfile("Bump", 50.0, 4.0, ("u1", "v1"))]
    tr = run(grid_400, coeffs_57, ExponentPair(1.5, 1.5), data, 300.0)
    assert tr.diverged and tr.blowup.t_detect < tr.lightcone_t_max


def test_blowup_amplitude_ladder(coeffs_57):
    g = RadialGrid(1, 200.0, 2001)
    t_detect = []
    for A in (6.25, 12.5, 25.0, 50.0):
        tr = run(g, coeffs_57, ExponentPair(1.5, 1.5), [DataProfile("Bump", A, 4.0, ("u1", "v1"))], 150.0)
        t_detect.append(tr.blowup.t_detect if tr.diverged else math.inf)
    assert all(b <= a for a, b in zip(t_detect[:-1], t_detect[1:]))
    assert math.isfinite(t_detect[-1])


def test_loss_of_decay(trace_loss, coeffs_57):
    v = classify(coeffs_57, ExponentPair(2.5, 8))
    rep = check_forecast(trace_loss, v, (40, 300), slope_tol=0.3)
    assert abs(rep.check("l2_u").measured - 0.0) <= 0.3
    assert abs(rep.check("l2_v").measured + 0.5) <= 0.3


def test_sign_condition_positive_bump(coeffs_57):
    g = RadialGrid(1, 20.0, 401)
    s = initial_state(g, [DataProfile("Bump", 1.0, 4.0, ("u1", "v1"))])
    assert sign_conditions(g.r, s.u, s.ut, s.v, s.vt, coeffs_57) == (True, True)


@settings(max_examples=8, deadline=None)
@given(
    mu1=st.floats(0, 8), mu2=st.floats(0, 8), nu1=st.floats(0, 2), nu2=st.floats(0, 2),
    p=st.floats(1.1, 5), q=st.floats(1.1, 5),
    fields=st.lists(st.sampled_from(FIELDS), min_size=1, max_size=4, unique=True),
)
def test_coupling_swap_bitwise(mu1, mu2, nu1, nu2, p, q, fields):
    g = RadialGrid(1, 40.0, 401)
    c = SystemCoefficients.from_values(mu1, nu1, mu2, nu2, 1)
    data = [DataProfile("Bump", 0.4, 4.0, tuple(fields)), DataProfile("Gaussian-truncated", 0.2, 3.0, ("u1",))]
    a = run(g, c, ExponentPair(p, q), data, 20.0, keep_final=True)
    b = run(g, c.swapped(), ExponentPair(q, p), [d.swapped() for d in data], 20.0, keep_final=True)
    for x, y in (("l2_u", "l2_v"), ("linf_u", "linf_v"), ("energy_u", "energy_v")):
        assert np.array_equal(a.series(x), b.series(y))
        assert np.array_equal(a.series(y), b.series(x))
    assert np.array_equal(a.final_state.u, b.final_state.v)


# --- check_forecast --------------------------------------------------------


def test_check_forecast_synthetic_exact():
    tr = synthetic_trace()
    rep = check_forecast(tr, DecayForecast(-2.5, -1.5, -2.5, -1.5), (10, 300))
    for c in rep.checks:
        assert c.deviation < 1e-10
    assert rep.passed and rep.as_dict()["passed"]


def test_check_forecast_flags_mismatch():
    rep = check_forecast(synthetic_trace(), DecayForecast(-2.5, -1.0, -2.5, -1.5), (10, 300))
    assert not rep.passed
    assert rep.check("l2_u").deviation == pytest.approx(0.5)


def test_check_forecast_rejections(coeffs_57):
    tr = synthetic_trace()
    fc = DecayForecast(-2.5, -1.5, -2.5, -1.5)
    with pytest.raises(ValueError):
        check_forecast(tr, fc, (2, 100))
    with pytest.raises(ValueError):
        check_forecast(tr, fc, (10, 500))
    with pytest.raises(ValueError):
        check_forecast(tr, classify(coeffs_57, ExponentPair(1.5, 1.5)), (10, 100))
    g = RadialGrid(1, 200.0, 2001)
    blown = run(g, coeffs_57, ExponentPair(1.5, 1.5), [DataProfile("Bump", 50.0, 4.0, ("u1", "v1"))], 150.0)
    with pytest.raises(ValueError):
        check_forecast(blown, fc, (10, 100))
