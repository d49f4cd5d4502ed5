import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from odeinfer.core import eval_rhs
from odeinfer.errors import DomainError
from odeinfer.models.hydro import (HydroForcing, HydroParams, hydro_flux, hydro_fluxes,
                                   hydro_system, streamflow)
from odeinfer.models.oscillator import (ForcingSpec, OscillatorParams, oscillator_system,
                                        smooth_forcing_value, underdamped_solution)
from odeinfer.models.sir import (SirChangepointParams, sir_lambda, sir_r0, sir_simulate,
                                 weekly_factor)
from odeinfer.problems import SolverConfig, solve

# ------------------------------------------------------------- oscillator


def test_oscillator_steady_state():
    system = oscillator_system(ForcingSpec.constant(1.0))
    np.testing.assert_array_equal(eval_rhs(system, 3.0, [1.0, 0.0], [1.0, 0.2, 1.0]), [0.0, 0.0])


def test_step_forcing_boundary():
    f = ForcingSpec.step(-1.0, 2.5)
    assert f(2.4999) == 1.0 and f(2.5) == -1.0


def test_tanh_forcing_limits():
    f = ForcingSpec.tanh_smooth(-1.0, 2.5, 0.1)
    assert f(2.5) == pytest.approx(0.0, abs=1e-15)
    assert f(-100.0) == pytest.approx(1.0) and f(100.0) == pytest.approx(-1.0)
    assert abs(f(2.5 - 5 * 0.1) - 1.0) < 1e-4 and abs(f(2.5 + 5 * 0.1) + 1.0) < 1e-4


def test_smooth_forcing_values():
    assert smooth_forcing_value(-1.0, 2.5, 0.1, 2.5) == 0.0
    assert smooth_forcing_value(-1.0, 0.0, 1.0, 3.0) == pytest.approx(-0.9950547537, abs=1e-10)
    for t in (-5.0, 0.0, 7.0):
        assert smooth_forcing_value(1.0, 2.0, 0.3, t) == 1.0


@given(st.floats(-10, 10), st.floats(0.01, 2), st.floats(-20, 20))
def test_smooth_forcing_matches_compiled_path(f1, a, t):
    assert ForcingSpec.tanh_smooth(f1, 2.5, a)(t) == pytest.approx(
        smooth_forcing_value(f1, 2.5, a, t), abs=1e-12)


def test_zero_smoothing_is_step():
    assert ForcingSpec.tanh_smooth(-1.0, 2.5, 0.0) == ForcingSpec.step(-1.0, 2.5)


@pytest.mark.parametrize("force", [1.0, -0.5, 2.0])
def test_oscillator_closed_form(force):
    params = OscillatorParams(1.0, 0.2, 1.0)
    times = np.linspace(0, 50, 75)
    traj = solve(oscillator_system(ForcingSpec.constant(force)), params.as_array(),
                 SolverConfig.rk54(1e-10), 50.0)
    exact = underdamped_solution(params, force, times)
    assert np.max(np.abs(traj.sample(times) - exact)) < 1e-7


def test_closed_form_rejects_overdamped():
    with pytest.raises(DomainError):
        underdamped_solution(OscillatorParams(1.0, 3.0, 1.0), 1.0, [0.0])


# -------------------------------------------------------------------- SIR

P = SirChangepointParams()


def test_lambda_branches():
    assert sir_lambda(P.t1 - 1, P) == P.lambda0
    assert sir_lambda(P.t1 + P.d1 / 2, P) == pytest.approx((P.lambda0 + P.lambda1) / 2)
    assert sir_lambda(P.t3 + P.d3, P) == P.lambda3
    assert sir_lambda(P.t3 + P.d3 + 100, P) == P.lambda3


@pytest.mark.parametrize("t", [P.t1, P.t1 + P.d1, P.t2, P.t2 + P.d2, P.t3, P.t3 + P.d3])
def test_lambda_continuous_at_breakpoints(t):
    eps = 1e-9
    assert abs(sir_lambda(t + eps, P) - sir_lambda(t - eps, P)) < 1e-8


def test_r0_values():
    assert sir_r0(0.4, 0.125) == pytest.approx(3.2)
    assert sir_r0(0.125, 0.125) == 1.0
    assert sir_r0(0.0, 0.125) == 0.0
    with pytest.raises(DomainError):
        sir_r0(0.4, 0.0)


def zero_lambda(**kw):
    base = dict(lambda0=0.0, lambda1=0.0, lambda2=0.0, lambda3=0.0, I0=1000.0)
    base.update(kw)
    return SirChangepointParams(**base)


@pytest.mark.parametrize("dt", [1.0, 0.5, 0.1])
def test_no_transmission_decays_geometrically(dt):
    p = zero_lambda()
    res = sir_simulate(p, dt, 20)
    assert np.all(res.S == res.S[0])
    n_sub = round(1 / dt)
    expected = p.I0 * (1 - p.mu * dt) ** (n_sub * res.days)
    np.testing.assert_allclose(res.I, expected, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 0.5), st.floats(1, 1000), st.sampled_from([1.0, 0.5, 0.1]))
def test_sir_conservation(lam, mu, i0, dt):
    p = SirChangepointParams(lambda0=lam, lambda1=lam / 2, mu=mu, I0=i0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = sir_simulate(p, dt, 60)
    total = res.S + res.I + res.R
    np.testing.assert_allclose(total, p.N_pop, rtol=1e-9)


def test_no_weekly_modulation_means_delayed_new_infections():
    p = SirChangepointParams(f_w=1.0, D=8.0)
    res = sir_simulate(p, 1.0, 40)
    days = np.arange(9, 41)
    np.testing.assert_array_equal(res.cases[days], res.new_infections[days - 8])
    assert np.all(res.cases[:9] == 0) and np.all(res.leading_edge[:9])


@pytest.mark.parametrize("lam, growing", [(0.4, True), (0.1, False)])
def test_r0_controls_early_direction(lam, growing):
    p = SirChangepointParams(lambda0=lam, lambda1=lam, lambda2=lam, lambda3=lam, mu=0.125)
    steps = np.diff(sir_simulate(p, 1.0, 10).I)
    assert np.all(steps > 0) if growing else np.all(steps < 0)


def test_daily_step_underestimates_growth():
    p = SirChangepointParams(lambda0=0.4, lambda1=0.4, lambda2=0.4, lambda3=0.4, mu=0.125,
                             f_w=1.0, I0=20.0)
    coarse = np.cumsum(sir_simulate(p, 1.0, 30).cases)
    fine = np.cumsum(sir_simulate(p, 0.1, 30).cases)
    assert coarse[20] < fine[20]


@given(st.floats(-100, 100), st.floats(0, 1), st.floats(-math.pi, math.pi))
def test_weekly_factor_period(t, f_w, phi):
    assert weekly_factor(t + 7, f_w, phi) == pytest.approx(weekly_factor(t, f_w, phi), abs=1e-9)


def test_bad_dt_rejected():
    with pytest.raises(DomainError):
        sir_simulate(P, 0.3, 10)


# ------------------------------------------------------------------ hydro


@given(st.floats(-10, 10))
def test_flux_endpoints(a):
    assert hydro_flux(0.0, a) == 0.0
    if abs(a) > 1e-6:
        assert hydro_flux(1.0, a) == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0, 1))
def test_flux_linear_limit(s):
    assert hydro_flux(s, 1e-8) == pytest.approx(s, abs=1e-6)
    assert hydro_flux(s, 0.0) == s


@pytest.mark.parametrize("a", [-50.0, -4.0, 0.0, 2.0, 20.0])
def test_flux_increasing_in_storage(a):
    vals = np.array([hydro_flux(s, a) for s in np.linspace(0, 1, 201)])
    assert np.all(np.diff(vals) > 0)


REF = HydroParams(3.0, 250.0, 4.0, 4.0, 2.0, 60.0, 3.0)


def test_zero_forcing_zero_storage_is_rest():
    system = hydro_system(HydroForcing(np.zeros(5), np.zeros(5)))
    np.testing.assert_array_equal(eval_rhs(system, 1.5, np.zeros(5), REF.as_array()), np.zeros(5))


def test_full_slow_store_gives_unit_flow():
    system = hydro_system(HydroForcing(np.zeros(5), np.zeros(5)))
    x = np.array([0.0, 0.0, REF.K_s, 0.0, 0.0])
    assert eval_rhs(system, 2.0, x, REF.as_array())[4] == pytest.approx(1.0)
    assert streamflow(x[None, :], REF.as_array())[0] == pytest.approx(1.0)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 20), min_size=5, max_size=5), st.floats(0, 30), st.floats(0, 5),
       st.floats(0, 4.99))
def test_mass_balance(storages, precip, evap, t):
    forcing = HydroForcing(np.full(5, precip), np.full(5, evap))
    system = hydro_system(forcing)
    x = np.array(storages)
    theta = REF.as_array()
    d = eval_rhs(system, t, x, theta)
    fl = hydro_fluxes(t, x, theta, system.aux)
    lhs = d[:4].sum() + d[4]
    # overfull stores make individual fluxes huge, so compare relative to their size
    tol = 1e-12 * (1.0 + precip + np.abs(fl).sum())
    assert lhs == pytest.approx(precip - fl[0] - fl[2], abs=tol)


def test_forcing_piecewise_constant_per_day():
    forcing = HydroForcing(np.array([0.0, 10.0, 0.0]), np.zeros(3))
    system = hydro_system(forcing)
    x = np.zeros(5)
    theta = REF.as_array()
    assert eval_rhs(system, 0.99, x, theta)[0] == 0.0
    assert eval_rhs(system, 1.0, x, theta)[0] > 0
    assert eval_rhs(system, 1.99, x, theta)[0] == eval_rhs(system, 1.0, x, theta)[0]


def test_hydro_param_validation():
    with pytest.raises(DomainError):
        HydroParams(3.0, 250.0, 4.0, 4.0, 2.0, 0.0, 3.0)
    with pytest.raises(DomainError):
        HydroForcing(np.array([-1.0]), np.array([0.0]))
