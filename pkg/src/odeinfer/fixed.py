"""Forward Euler with a uniform step."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import OdeSystem, Trajectory, param_vector
from .errors import DivergenceError, DomainError


@dataclass(frozen=True)
class FixedStepConfig:
    dt: float
    t_end: float

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise DomainError(f"dt must be positive and finite, got {self.dt}")


def euler_grid(t0: float, t_end: float, dt: float) -> np.ndarray:
    """Grid ``t0, t0+dt, ...`` ending exactly at ``t_end``.

    A non-commensurate span gets one shortened final step.
    """
    span = t_end - t0
    if not span > 0:
        raise DomainError("t_end must exceed t0")
    n = int(round(span / dt))
    if n >= 1 and abs(n * dt - span) <= 1e-9 * span:
        grid = t0 + dt * np.arange(n + 1)
    else:
        n = int(np.floor(span / dt))
        grid = np.append(t0 + dt * np.arange(n + 1), t_end)
    grid[-1] = t_end
    return grid


@njit(nogil=True, cache=True)
def _euler_kernel(rhs, grid, x0, theta, aux):
    n = grid.size
    dim = x0.size
    states = np.empty((n, dim))
    states[0] = x0
    x = x0.copy()
    for i in range(n - 1):
        t = grid[i]
        dt = grid[i + 1] - t
        f = rhs(t, x, theta, aux)
        for j in range(dim):
            x[j] = x[j] + dt * f[j]
            if not np.isfinite(x[j]):
                return states, i + 1
        states[i + 1] = x
    return states, -1


class LinearInterpolant:
    """Piecewise-linear interpolation between grid states."""

    def __init__(self, times, states):
        self.times = times
        self.states = states

    def __call__(self, q):
        q = np.asarray(q, dtype=np.float64)
        return np.column_stack(
            [np.interp(q, self.times, self.states[:, j]) for j in range(self.states.shape[1])]
        )


def solve_euler(system: OdeSystem, theta, cfg: FixedStepConfig) -> Trajectory:
    theta = param_vector(theta)
    grid = euler_grid(system.t0, float(cfg.t_end), float(cfg.dt))
    states, fail = _euler_kernel(system.rhs, grid, system.x0.copy(), theta, system.aux)
    if fail >= 0:
        raise DivergenceError(
            f"Euler produced a non-finite state at t={grid[fail]}", time=float(grid[fail])
        )
    return Trajectory(
        times=grid,
        states=states,
        interpolant=LinearInterpolant(grid, states),
        n_steps=grid.size - 1,
        n_rejected=0,
    )


def euler_global_error(system: OdeSystem, theta, cfg: FixedStepConfig, exact) -> float:
    """Max over grid points of the component-wise absolute error."""
    traj = solve_euler(system, theta, cfg)
    ref = np.array([np.atleast_1d(exact(t)) for t in traj.times], dtype=np.float64)
    return float(np.max(np.abs(traj.states - ref)))
