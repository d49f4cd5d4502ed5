"""Solver selection and model+data bindings that evaluate log-likelihoods.

A *problem* exposes ``log_likelihood(theta, solver) -> (ll, n_steps)`` and
``param_names``; the surface scanner, the step-size diagnostic and the
samplers only rely on that.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .adaptive import DEFAULT_ATOL, DEFAULT_MAX_STEPS, PAIRS, Tolerances, solve_adaptive
from .core import Dataset, OdeSystem, Trajectory
from .errors import DomainError
from .fixed import FixedStepConfig, solve_euler
from .likelihood import StudentTScaledNoise, gaussian_log_likelihood, log_likelihood_student_t
from .models.sir import GERMANY_POPULATION, sir_simulate_array, substeps_per_day

SOLVER_KINDS = ("euler", "rk54", "rk32")


@dataclass(frozen=True)
class SolverConfig:
    """Either ``euler`` with step ``dt`` or an embedded pair with tolerances."""

    kind: str = "rk54"
    dt: float | None = None
    rtol: float = 1e-3
    atol: float = DEFAULT_ATOL
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise DomainError(f"unknown solver {self.kind!r}; expected one of {SOLVER_KINDS}")
        if self.kind == "euler":
            if self.dt is None or not self.dt > 0:
                raise DomainError("euler solver needs dt > 0")
        elif not (self.rtol > 0 and self.atol > 0):
            raise DomainError("rtol and atol must be positive")

    @classmethod
    def euler(cls, dt):
        return cls("euler", dt=dt)

    @classmethod
    def rk54(cls, rtol, atol=DEFAULT_ATOL):
        return cls("rk54", rtol=rtol, atol=atol)

    @classmethod
    def rk32(cls, rtol, atol=DEFAULT_ATOL):
        return cls("rk32", rtol=rtol, atol=atol)

    @property
    def is_fixed(self) -> bool:
        return self.kind == "euler"

    def scaled(self, factor: float) -> "SolverConfig":
        """Copy with the accuracy knob (``dt`` or ``rtol``) multiplied by ``factor``."""
        if self.is_fixed:
            return replace(self, dt=self.dt * factor)
        return replace(self, rtol=self.rtol * factor)

    @property
    def tag(self) -> str:
        if self.is_fixed:
            return f"euler(dt={self.dt:g})"
        return f"{self.kind}(rtol={self.rtol:g},atol={self.atol:g})"


def solve(system: OdeSystem, theta, solver: SolverConfig, t_end: float) -> Trajectory:
    if solver.is_fixed:
        return solve_euler(system, theta, FixedStepConfig(dt=solver.dt, t_end=t_end))
    pair = PAIRS["RK54" if solver.kind == "rk54" else "RK32"]
    return solve_adaptive(system, theta, pair, Tolerances(solver.rtol, solver.atol),
                          t_end, max_steps=solver.max_steps)


def observe_component(index: int) -> Callable:
    def observe(states, theta):
        return states[:, index]
    return observe


@dataclass(frozen=True)
class OdeProblem:
    """ODE model observed with IID Gaussian noise of known ``sigma``.

    ``observe(states, theta)`` maps sampled states to observations.  When
    ``infer_sigma`` is set, ``theta`` carries sigma as its last entry.
    """

    system: OdeSystem
    data: Dataset
    sigma: float
    observe: Callable = observe_component(0)
    param_names: tuple = ()
    infer_sigma: bool = False
    check_theta: Callable | None = None

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.infer_sigma:
            return theta[:-1], float(theta[-1])
        return theta, self.sigma

    def predict(self, theta, solver: SolverConfig):
        """Observations predicted at the data times, and the solver step count."""
        model_theta, _ = self.split(theta)
        if self.check_theta is not None:
            self.check_theta(model_theta)
        traj = solve(self.system, model_theta, solver, float(self.data.times[-1]))
        states = traj.sample(self.data.times)
        pred = np.asarray(self.observe(states, model_theta), dtype=float)
        n_steps = 0 if solver.is_fixed else traj.n_steps
        return pred.reshape(self.data.observations.shape), n_steps

    def log_likelihood(self, theta, solver: SolverConfig):
        _, sigma = self.split(theta)
        if not sigma > 0:
            raise DomainError("sigma must be positive")
        pred, n_steps = self.predict(theta, solver)
        return gaussian_log_likelihood(self.data.observations, pred, sigma), n_steps

    def with_sigma(self, infer: bool) -> "OdeProblem":
        names = self.param_names
        if infer and not self.infer_sigma:
            names = names + ("sigma",)
        elif not infer and self.infer_sigma:
            names = names[:-1]
        return replace(self, infer_sigma=infer, param_names=names)


@dataclass(frozen=True)
class SirProblem:
    """Changepoint SIR model against daily case counts (Student-t, nu=4).

    The simulation starts ``lead_days`` before the first observed day, so the
    reporting delay never reaches back before the simulation start.  ``theta``
    holds the 15 model parameters followed by the noise scale sigma.
    """

    cases: np.ndarray
    lead_days: int = 16
    n_pop: float = GERMANY_POPULATION
    nu: float = 4.0
    param_names: tuple = ()

    @property
    def horizon(self) -> int:
        return self.lead_days + len(self.cases)

    @cached_property
    def data(self) -> Dataset:
        days = self.lead_days + 1 + np.arange(len(self.cases), dtype=float)
        return Dataset(days, np.asarray(self.cases, dtype=float))

    def predict(self, theta, solver: SolverConfig):
        dt = solver.dt if solver.is_fixed else 1.0
        res = sir_simulate_array(np.asarray(theta, dtype=float)[:15], dt, self.horizon, self.n_pop)
        return res.cases[self.lead_days + 1:], 0

    def log_likelihood(self, theta, solver: SolverConfig):
        substeps_per_day(solver.dt if solver.is_fixed else 1.0)
        pred, _ = self.predict(theta, solver)
        sigma = float(theta[15])
        if not sigma > 0:
            raise DomainError("sigma must be positive")
        return log_likelihood_student_t(self.data, pred, StudentTScaledNoise(sigma, self.nu)), 0
