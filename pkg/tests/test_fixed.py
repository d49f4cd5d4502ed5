import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numba import njit

from odeinfer.core import OdeSystem
from odeinfer.errors import DivergenceError, DomainError
from odeinfer.fixed import FixedStepConfig, euler_global_error, euler_grid, solve_euler
from odeinfer.models.oscillator import ForcingSpec, oscillator_system


@njit
def decay_rhs(t, x, theta, aux):
    return -x


@njit
def unit_rhs(t, x, theta, aux):
    return np.ones_like(x)


@njit
def blowup_rhs(t, x, theta, aux):
    return x * x


DECAY = OdeSystem(1, decay_rhs, np.array([1.0]))


def exact_decay(t):
    return math.exp(-t)


def test_single_step_decay():
    traj = solve_euler(DECAY, [], FixedStepConfig(0.1, 0.1))
    assert traj.states[-1, 0] == pytest.approx(0.9, abs=1e-15)


def test_oscillator_two_hand_steps():
    system = oscillator_system(ForcingSpec.constant(1.0))
    traj = solve_euler(system, [1.0, 0.2, 1.0], FixedStepConfig(0.5, 1.0))
    np.testing.assert_allclose(traj.states[1], [0.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(traj.states[2], [0.25, 0.95], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([0.5, 0.25, 0.125, 0.0625, 0.03125]))
def test_constant_rhs_is_exact(dt):
    system = OdeSystem(1, unit_rhs, np.array([0.0]))
    traj = solve_euler(system, [], FixedStepConfig(dt, 4.0))
    np.testing.assert_array_equal(traj.states[:, 0], traj.times)


def test_global_error_zero_for_linear_solution():
    system = OdeSystem(1, unit_rhs, np.array([0.0]))
    assert euler_global_error(system, [], FixedStepConfig(0.01, 1.0), lambda t: t) < 1e-12


@pytest.mark.parametrize("dt", [1e-2, 1e-3])
def test_first_order_convergence(dt):
    e1 = euler_global_error(DECAY, [], FixedStepConfig(dt, 1.0), exact_decay)
    e2 = euler_global_error(DECAY, [], FixedStepConfig(dt / 2, 1.0), exact_decay)
    assert 1.8 <= e1 / e2 <= 2.2


def test_error_decreases_along_ladder():
    errs = [euler_global_error(DECAY, [], FixedStepConfig(dt, 1.0), exact_decay)
            for dt in (0.1, 0.05, 0.01, 0.005)]
    assert all(a > b for a, b in zip(errs, errs[1:]))


@given(st.floats(0.01, 1.0), st.floats(0.5, 20.0))
def test_grid_ends_exactly_at_t_end(dt, t_end):
    grid = euler_grid(0.0, t_end, dt)
    assert grid[-1] == t_end
    assert np.all(np.diff(grid) > 0)
    assert np.all(np.diff(grid) <= dt * (1 + 1e-9))


def test_partial_final_step():
    grid = euler_grid(0.0, 1.0, 0.3)
    np.testing.assert_allclose(grid, [0.0, 0.3, 0.6, 0.9, 1.0])


def test_deterministic_bitwise():
    system = oscillator_system(ForcingSpec.step(-1.0, 2.5))
    a = solve_euler(system, [1.0, 0.2, 1.0], FixedStepConfig(0.01, 5.0))
    b = solve_euler(system, [1.0, 0.2, 1.0], FixedStepConfig(0.01, 5.0))
    assert np.array_equal(a.states, b.states)


def test_piecewise_linear_between_nodes():
    traj = solve_euler(DECAY, [], FixedStepConfig(0.5, 1.0))
    mid = traj.sample([0.25])[0, 0]
    assert mid == pytest.approx(0.5 * (traj.states[0, 0] + traj.states[1, 0]))


def test_invalid_dt():
    with pytest.raises(DomainError):
        FixedStepConfig(0.0, 1.0)
    with pytest.raises(DomainError):
        FixedStepConfig(-0.1, 1.0)


def test_divergence_reported():
    system = OdeSystem(1, blowup_rhs, np.array([10.0]))
    with pytest.raises(DivergenceError):
        solve_euler(system, [], FixedStepConfig(0.5, 100.0))
