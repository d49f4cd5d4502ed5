import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numba import njit

from odeinfer.core import Dataset, OdeSystem
from odeinfer.errors import DomainError, ScanError
from odeinfer.experiments import EULER_STUDY, SURFACE_COMPARISON, TRUE_THETA
from odeinfer.problems import OdeProblem, SolverConfig
from odeinfer.surface import (LikelihoodSurface, count_local_maxima, jaggedness, linear_grid,
                              moving_average, scan_likelihood, step_count_jump_correlation,
                              step_size_sensitivity)


@njit
def zero_rhs(t, x, theta, aux):
    return np.zeros_like(x)


@njit
def drift_rhs(t, x, theta, aux):
    out = np.empty(1)
    out[0] = theta[0]
    return out


@njit
def exploding_rhs(t, x, theta, aux):
    out = np.empty(1)
    out[0] = np.inf
    return out


TIMES = np.linspace(0.0, 4.0, 9)
Y = 0.7 * TIMES + 0.05 * np.sin(7 * TIMES)


def flat_problem():
    return OdeProblem(OdeSystem(1, zero_rhs, np.array([1.0])), Dataset(TIMES, np.ones(9) * 1.1),
                      sigma=0.2)


def drift_problem():
    return OdeProblem(OdeSystem(1, drift_rhs, np.array([0.0])), Dataset(TIMES, Y), sigma=0.1)


@given(st.floats(-10, 10), st.floats(0.1, 10), st.integers(2, 300))
def test_grid_inclusive_with_exact_count(lo, width, n):
    g = linear_grid(lo, lo + width, n)
    assert g.size == n and g[0] == lo and g[-1] == pytest.approx(lo + width)


def test_grid_validation():
    with pytest.raises(DomainError):
        linear_grid(1.0, 0.0, 10)
    with pytest.raises(DomainError):
        linear_grid(0.0, 1.0, 1)


def test_parameter_outside_rhs_leaves_surface_flat():
    surf = scan_likelihood(flat_problem(), [0.3], 0, linear_grid(-5, 5, 21), SolverConfig.rk54(1e-6))
    assert np.all(surf.ll == surf.ll[0])


@pytest.mark.parametrize("solver", [SolverConfig.euler(0.1), SolverConfig.rk54(1e-8)])
def test_linear_model_surface_is_concave(solver):
    surf = scan_likelihood(drift_problem(), [0.0], 0, linear_grid(0.0, 1.5, 61), solver)
    assert np.all(np.diff(surf.ll, 2) <= 1e-9)
    assert jaggedness(surf).n_local_maxima == 1


def test_reference_surface_peaks_at_truth():
    grid = linear_grid(0.8, 1.2, 500)
    surf = scan_likelihood(SURFACE_COMPARISON.problem(), TRUE_THETA, 2, grid,
                           SolverConfig.rk54(1e-8))
    rep = jaggedness(surf)
    assert rep.n_local_maxima == 1
    # seed-1 noise moves the optimum slightly; it stays within two grid cells of k = 1
    assert abs(surf.argmax - 1.0) <= 2 * (grid[1] - grid[0])


@pytest.mark.parametrize("dt", [0.1, 0.05, 0.01, 0.005])
def test_euler_surfaces_stay_unimodal(dt):
    surf = scan_likelihood(EULER_STUDY.problem(), TRUE_THETA, 2, linear_grid(0.5, 1.5, 201),
                           SolverConfig.euler(dt))
    assert jaggedness(surf).n_local_maxima == 1


def test_threaded_scan_matches_serial():
    grid = linear_grid(0.9, 1.1, 40)
    prob = SURFACE_COMPARISON.problem()
    a = scan_likelihood(prob, TRUE_THETA, 2, grid, SolverConfig.rk54(1e-3), threads=1)
    b = scan_likelihood(prob, TRUE_THETA, 2, grid, SolverConfig.rk54(1e-3), threads=4)
    assert np.array_equal(a.ll, b.ll) and np.array_equal(a.n_steps, b.n_steps)


def test_all_failed_scan_raises():
    prob = OdeProblem(OdeSystem(1, exploding_rhs, np.array([0.0])), Dataset(TIMES, Y), sigma=0.1)
    with pytest.raises(ScanError):
        scan_likelihood(prob, [1.0], 0, linear_grid(0, 1, 5), SolverConfig.rk54(1e-3))


def test_bad_param_index():
    with pytest.raises(DomainError):
        scan_likelihood(drift_problem(), [0.0], 3, linear_grid(0, 1, 5), SolverConfig.rk54(1e-3))


# ------------------------------------------------------------ jaggedness

def surface(ll, steps=None):
    ll = np.asarray(ll, dtype=float)
    steps = np.zeros(ll.size, int) if steps is None else steps
    return LikelihoodSurface(0, np.arange(ll.size, dtype=float), ll, steps)


def test_concave_surface_report():
    x = np.linspace(-1, 1, 101)
    rep = jaggedness(surface(-x * x))
    assert rep.n_local_maxima == 1
    # smoothing only shaves the peak: excess is a tiny fraction of the total variation (2)
    assert rep.tv_excess < 1e-3 * 2


def test_sawtooth_maxima():
    assert count_local_maxima([0, 1, 0, 1, 0, 1, 0]) == 3
    assert jaggedness(surface([0, 1, 0, 1, 0, 1, 0])).n_local_maxima == 3


def test_plateau_counts_once():
    assert count_local_maxima([0, 1, 1, 1, 0]) == 1
    assert count_local_maxima([0, 1, 1, 2, 0]) == 1


@given(st.floats(-100, 100), st.floats(-100, 100), st.integers(7, 60))
def test_linear_surface_has_no_excess(a, b, n):
    x = np.arange(n, dtype=float)
    rep = jaggedness(surface(a * x + b))
    assert rep.tv_excess <= 1e-9 * (1 + abs(a) * n + abs(b))
    assert rep.n_local_maxima == 0


def test_moving_average_keeps_linear_trend():
    x = np.arange(12.0)
    np.testing.assert_allclose(moving_average(3 * x - 2), 3 * x - 2, atol=1e-12)


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=7, max_size=80))
def test_report_fields_nonnegative(values):
    rep = jaggedness(surface(values))
    assert rep.n_local_maxima >= 0 and rep.max_abs_jump >= 0 and rep.tv_excess >= 0


def test_failed_points_dropped():
    ll = np.array([0.0, 1.0, -np.inf, 2.0, 1.0, 0.0, -1.0, -2.0])
    rep = jaggedness(surface(ll))
    assert rep.n_local_maxima == 1


def test_too_few_points():
    with pytest.raises(DomainError):
        jaggedness(surface([1.0, 2.0, 1.0]))


# ---------------------------------------------------- step-count correlation

def test_constant_step_count_has_no_jumps():
    assert step_count_jump_correlation(surface(np.linspace(0, 1, 20)), 10.0) is None


def test_constant_step_count_with_jumps_is_zero():
    ll = np.array([0, 0, 50, 50, 0, 0], dtype=float)
    assert step_count_jump_correlation(surface(ll), 10.0) == 0.0


def test_jumps_at_step_changes():
    ll = np.array([0, 0, 50, 50, 50, 0, 0], dtype=float)
    steps = np.array([10, 10, 11, 11, 11, 12, 12])
    assert step_count_jump_correlation(surface(ll, steps), 10.0) == 1.0


def test_partial_correlation():
    ll = np.array([0, 20, 40, 60, 80], dtype=float)
    steps = np.array([5, 6, 6, 7, 7])
    assert step_count_jump_correlation(surface(ll, steps), 10.0) == 0.5


# ------------------------------------------------------------ sensitivity

def test_exact_regime_is_insensitive():
    rep = step_size_sensitivity(SURFACE_COMPARISON.problem(), TRUE_THETA, SolverConfig.rk54(1e-12),
                                perturbation=9.0)
    # 1e-12 scaled by 10 gives 1e-11
    assert rep.abs_diff < 1e-4


def test_coarse_euler_is_sensitive():
    rep = step_size_sensitivity(EULER_STUDY.problem(), TRUE_THETA, SolverConfig.euler(0.1), 0.1)
    assert rep.abs_diff > 1
    assert rep.passed is None


def test_zero_rhs_is_exactly_insensitive():
    rep = step_size_sensitivity(flat_problem(), [0.5], SolverConfig.euler(0.1), 0.2, threshold=0.0)
    assert rep.abs_diff == 0.0 and rep.passed is True


def test_sensitivity_validation():
    with pytest.raises(DomainError):
        step_size_sensitivity(flat_problem(), [0.5], SolverConfig.euler(0.1), 0.0)


def test_surface_validation():
    with pytest.raises(DomainError):
        LikelihoodSurface(0, np.array([0.0, 0.0]), np.zeros(2), np.zeros(2))
    with pytest.raises(DomainError):
        LikelihoodSurface(0, np.array([0.0, 1.0]), np.zeros(3), np.zeros(2))
