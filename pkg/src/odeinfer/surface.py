"""One-parameter likelihood scans and measures of how jagged they are."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, OdeInferError, ScanError
from .likelihood import gaussian_log_likelihood, ll_error_bound, ll_error_distribution
from .problems import SolverConfig, solve

MIN_POINTS = 7
SMOOTH_WINDOW = 5
DEFAULT_JUMP_THRESHOLD = 10.0


def linear_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` points from ``lo`` to ``hi`` inclusive."""
    if n < 2 or not hi > lo:
        raise DomainError("need n >= 2 and hi > lo")
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class LikelihoodSurface:
    param_index: int
    grid: np.ndarray
    ll: np.ndarray
    n_steps: np.ndarray
    solver_tag: str = ""
    failed: np.ndarray = field(default=None)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        ll = np.asarray(self.ll, dtype=float)
        steps = np.asarray(self.n_steps, dtype=np.int64)
        failed = np.zeros(grid.size, bool) if self.failed is None else np.asarray(self.failed, bool)
        if not (grid.shape == ll.shape == steps.shape == failed.shape) or grid.ndim != 1:
            raise DomainError("surface fields must be equal-length vectors")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        for name, val in (("grid", grid), ("ll", ll), ("n_steps", steps), ("failed", failed)):
            object.__setattr__(self, name, val)

    def __len__(self):
        return self.grid.size

    @property
    def argmax(self) -> float:
        return float(self.grid[int(np.argmax(self.ll))])


def _evaluate(problem, theta, solver):
    try:
        ll, steps = problem.log_likelihood(theta, solver)
    except (OdeInferError, FloatingPointError):
        return -np.inf, 0, True
    if not np.isfinite(ll):
        return -np.inf, steps, True
    return ll, steps, False


def scan_likelihood(problem, theta_base, param_index: int, grid, solver: SolverConfig,
                    threads: int = 1) -> LikelihoodSurface:
    """Log-likelihood along ``grid`` for one parameter, others held at ``theta_base``.

    Points whose solve fails are stored as ``-inf`` and flagged.
    """
    base = np.asarray(theta_base, dtype=float)
    if not 0 <= param_index < base.size:
        raise DomainError(f"param_index {param_index} outside 0..{base.size - 1}")
    grid = np.asarray(grid, dtype=float)

    def point(v):
        theta = base.copy()
        theta[param_index] = v
        return _evaluate(problem, theta, solver)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, grid))
    else:
        results = [point(v) for v in grid]
    ll = np.array([r[0] for r in results], dtype=float)
    steps = np.array([r[1] for r in results], dtype=np.int64)
    failed = np.array([r[2] for r in results], dtype=bool)
    if failed.all():
        raise ScanError(f"every one of the {grid.size} grid points failed to solve")
    return LikelihoodSurface(param_index, grid, ll, steps, solver.tag, failed)


@dataclass(frozen=True)
class JaggednessReport:
    n_local_maxima: int
    max_abs_jump: float
    tv_excess: float


def count_local_maxima(values) -> int:
    """Strict interior peaks, with runs of exactly equal values merged into one."""
    v = np.asarray(values, dtype=float)
    keep = np.concatenate([[True], v[1:] != v[:-1]])
    v = v[keep]
    if v.size < 3:
        return 0
    mid = v[1:-1]
    return int(np.sum((mid > v[:-2]) & (mid > v[2:])))


def moving_average(values, window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Centred running mean; the ends are padded by point reflection so linear trends survive."""
    v = np.asarray(values, dtype=float)
    half = window // 2
    padded = np.pad(v, half, mode="reflect", reflect_type="odd")
    return np.convolve(padded, np.ones(window) / window, mode="valid")


def total_variation(values) -> float:
    return float(np.sum(np.abs(np.diff(values))))


def jaggedness(surface: LikelihoodSurface) -> JaggednessReport:
    """Peak count, largest neighbour jump and excess total variation over a smoothed copy.

    Failed (non-finite) points are dropped before measuring.
    """
    ll = surface.ll[np.isfinite(surface.ll)]
    if ll.size < MIN_POINTS:
        raise DomainError(f"jaggedness needs at least {MIN_POINTS} finite points, got {ll.size}")
    tv = total_variation(ll)
    excess = max(tv - total_variation(moving_average(ll)), 0.0)
    return JaggednessReport(count_local_maxima(ll), float(np.max(np.abs(np.diff(ll)))), excess)


def step_count_jump_correlation(surface: LikelihoodSurface,
                                threshold: float = DEFAULT_JUMP_THRESHOLD) -> float | None:
    """Fraction of large LL jumps that coincide with a change in step count.

    Returns ``None`` when no adjacent pair differs by more than ``threshold``.
    """
    ok = np.isfinite(surface.ll[:-1]) & np.isfinite(surface.ll[1:])
    jumps = ok & (np.abs(np.diff(surface.ll)) > threshold)
    if not jumps.any():
        return None
    changed = np.diff(surface.n_steps) != 0
    return float(np.mean(changed[jumps]))


@dataclass(frozen=True)
class SensitivityReport:
    ll_base: float
    ll_perturbed: tuple
    abs_diff: float
    passed: bool | None = None
    failures: tuple = ()


def step_size_sensitivity(problem, theta_star, solver: SolverConfig, perturbation: float,
                          threshold: float | None = None) -> SensitivityReport:
    """Re-evaluate the likelihood with the accuracy knob scaled up and down.

    The knob (``dt`` or ``rtol``) is multiplied by ``1 + p`` and by ``1 - p``;
    for ``p >= 1`` the second factor becomes ``1 / (1 + p)``.  Solver failures
    at a perturbed setting are listed in ``failures`` rather than raised.
    """
    if not perturbation > 0:
        raise DomainError("perturbation must be positive")
    down = 1.0 - perturbation if perturbation < 1 else 1.0 / (1.0 + perturbation)
    ll_base, _ = problem.log_likelihood(theta_star, solver)
    perturbed, failures = [], []
    for factor in (1.0 + perturbation, down):
        try:
            ll, _ = problem.log_likelihood(theta_star, solver.scaled(factor))
        except OdeInferError as exc:
            failures.append(f"x{factor:g}: {exc}")
            ll = np.nan
        perturbed.append(float(ll))
    diffs = [abs(ll - ll_base) for ll in perturbed if np.isfinite(ll)]
    abs_diff = max(diffs) if diffs else np.inf
    passed = None if threshold is None else bool(abs_diff <= threshold)
    return SensitivityReport(float(ll_base), tuple(perturbed), float(abs_diff), passed, tuple(failures))


@dataclass(frozen=True)
class BoundCheck:
    """Reference vs approximate likelihood at one parameter value."""

    ll_ref: float
    ll_approx: float
    bound: float
    mean_shift: float
    std: float

    @property
    def abs_diff(self) -> float:
        return abs(self.ll_ref - self.ll_approx)

    @property
    def violated(self) -> bool:
        return self.abs_diff > self.bound


def state_errors(problem, theta, solver: SolverConfig, reference: SolverConfig):
    """Per-data-time state error norms ``e_i`` and observation errors ``a_i``.

    Also returns the reference predictions, so callers can form residuals.
    """
    model_theta, _ = problem.split(theta)
    times = problem.data.times
    t_end = float(times[-1])
    x_ref = solve(problem.system, model_theta, reference, t_end).sample(times)
    x_apx = solve(problem.system, model_theta, solver, t_end).sample(times)
    e = np.linalg.norm(x_ref - x_apx, axis=1)
    shape = problem.data.observations.shape
    g_ref = np.asarray(problem.observe(x_ref, model_theta), dtype=float).reshape(shape)
    g_apx = np.asarray(problem.observe(x_apx, model_theta), dtype=float).reshape(shape)
    return e, g_ref - g_apx, g_ref


def bound_check(problem, theta, solver: SolverConfig, reference: SolverConfig,
                lipschitz_K: float = 1.0) -> BoundCheck:
    """Compare ``|LL_ref - LL_approx|`` with its state-error bound at ``theta``.

    ``lipschitz_K`` must bound the observation map with respect to the
    Euclidean state norm (1 for the identity or a single component).
    """
    _, sigma = problem.split(theta)
    e, a, g_ref = state_errors(problem, theta, solver, reference)
    y = problem.data.observations
    resid = np.linalg.norm(y - g_ref, axis=1)
    ll_ref = gaussian_log_likelihood(y, g_ref, sigma)
    ll_apx = gaussian_log_likelihood(y, g_ref - a, sigma)
    dist = ll_error_distribution(a, sigma)
    return BoundCheck(ll_ref, ll_apx, ll_error_bound(e, resid, lipschitz_K, sigma),
                      dist.mean_shift, dist.std)


def redraw_ll_differences(problem, theta, solver: SolverConfig, reference: SolverConfig,
                          n_redraws: int, rng: np.random.Generator) -> np.ndarray:
    """``LL_ref - LL_approx`` over fresh noise draws around the reference solution."""
    _, sigma = problem.split(theta)
    _, a, g_ref = state_errors(problem, theta, solver, reference)
    out = np.empty(n_redraws)
    for i in range(n_redraws):
        y = g_ref + sigma * rng.standard_normal(g_ref.shape)
        out[i] = gaussian_log_likelihood(y, g_ref, sigma) - gaussian_log_likelihood(y, g_ref - a, sigma)
    return out
