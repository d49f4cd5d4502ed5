"""Forward-problem types: ODE systems, trajectories and observed datasets.

Right-hand sides are numba-compiled functions with the signature
``rhs(t, x, theta, aux) -> dx/dt``.  ``theta`` carries the model parameters
and is passed on every call, so a single system can be solved at many
parameter values.  ``aux`` is a read-only float array of fixed inputs
(forcing definitions, input time series) that are not inferred.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, OutOfRangeError

_EMPTY = np.empty(0)


def param_vector(values, n=None) -> np.ndarray:
    """Validate ``values`` as a parameter vector and return a float64 copy."""
    theta = np.array(values, dtype=np.float64).reshape(-1)
    if n is not None and theta.size != n:
        raise DomainError(f"expected {n} parameters, got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise DomainError("parameter vector contains non-finite entries")
    return theta


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class OdeSystem:
    """The initial value problem ``dx/dt = rhs(t, x, theta)``, ``x(t0) = x0``."""

    dim: int
    rhs: Callable
    x0: np.ndarray
    t0: float = 0.0
    aux: np.ndarray = field(default_factory=lambda: _EMPTY)
    name: str = "ode"

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be positive")
        x0 = _frozen(self.x0).reshape(-1)
        if x0.size != self.dim:
            raise DomainError(f"x0 has length {x0.size}, expected {self.dim}")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "aux", _frozen(self.aux).reshape(-1))
        object.__setattr__(self, "t0", float(self.t0))


def eval_rhs(system: OdeSystem, t, x, theta) -> np.ndarray:
    """Evaluate the right-hand side once (no side effects)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (system.dim,):
        raise DomainError(f"state has shape {x.shape}, expected ({system.dim},)")
    out = np.asarray(system.rhs(float(t), x, np.asarray(theta, dtype=np.float64), system.aux))
    if out.shape != (system.dim,):
        raise DomainError(f"rhs returned shape {out.shape}, expected ({system.dim},)")
    return out


@dataclass(frozen=True)
class Trajectory:
    """Accepted solver grid, states on it, and a dense-output evaluator.

    ``interpolant(times)`` returns an ``(len(times), dim)`` array and is valid
    on ``[times[0], times[-1]]``.
    """

    times: np.ndarray
    states: np.ndarray
    interpolant: Callable[[np.ndarray], np.ndarray]
    n_steps: int
    n_rejected: int = 0

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def sample(self, times) -> np.ndarray:
        return sample_trajectory(self, times)


def sample_trajectory(traj: Trajectory, times) -> np.ndarray:
    """Evaluate the trajectory's interpolant at ``times``."""
    q = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if q.size and (q.min() < traj.times[0] or q.max() > traj.times[-1]):
        raise OutOfRangeError(
            f"query times [{q.min()}, {q.max()}] outside trajectory span "
            f"[{traj.times[0]}, {traj.times[-1]}]"
        )
    return traj.interpolant(q)


@dataclass(frozen=True)
class Dataset:
    """Observations ``y_i`` (one row per time, ``obs_dim`` columns) at ``t_i``."""

    times: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        t = _frozen(self.times).reshape(-1)
        y = np.array(self.observations, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        y.setflags(write=False)
        if y.shape[0] != t.size:
            raise DomainError("observations row count must equal number of times")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("observation times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise DomainError("dataset contains non-finite values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "observations", y)

    @property
    def obs_dim(self) -> int:
        return self.observations.shape[1]

    def __len__(self):
        return self.times.size
