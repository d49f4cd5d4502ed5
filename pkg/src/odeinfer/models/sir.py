"""Discrete SIR model with a piecewise-linear spreading rate.

The compartments follow the explicit update (Forward Euler with step ``dt``)::

    S_t = S_{t-dt} - lam(t) dt S I / N
    I_t = I_{t-dt} + lam(t) dt S I / N - mu dt I
    R_t = R_{t-dt} + mu dt I

with ``S, I`` on the right taken at ``t - dt``.  Daily new infections are
``S(day start) - S(day end)``.  Reported cases on day ``t`` are the new
infections of the day ending at ``t - D`` (``D`` rounded to a whole number of
substeps), suppressed by the weekly factor ``1 - f(t)``.

Time is measured in days from the start of the simulation.
"""
from __future__ import annotations

import warnings
from dataclasses import astuple, dataclass

import numpy as np
from numba import njit

from ..errors import DivergenceError, DomainError

PARAM_NAMES = ("lambda0", "lambda1", "lambda2", "lambda3", "t1", "t2", "t3",
               "d1", "d2", "d3", "mu", "D", "I0", "f_w", "phi_w")

GERMANY_POPULATION = 83.0e6


@dataclass(frozen=True)
class SirChangepointParams:
    lambda0: float = 0.4
    lambda1: float = 0.2
    lambda2: float = 0.125
    lambda3: float = 0.0625
    t1: float = 23.0
    t2: float = 30.0
    t3: float = 37.0
    d1: float = 3.0
    d2: float = 3.0
    d3: float = 3.0
    mu: float = 0.125
    D: float = 8.0
    I0: float = 50.0
    f_w: float = 1.0
    phi_w: float = 0.0
    N_pop: float = GERMANY_POPULATION

    def __post_init__(self):
        if not self.I0 > 0:
            raise DomainError("I0 must exceed zero for an infection to spread")
        if not (self.mu > 0 and self.N_pop > 0):
            raise DomainError("mu and N_pop must be positive")
        if not (self.t1 < self.t2 < self.t3):
            warnings.warn("change points are not ordered t1 < t2 < t3", stacklevel=2)

    def as_array(self) -> np.ndarray:
        """The 15 model parameters in :data:`PARAM_NAMES` order (no population)."""
        return np.array(astuple(self)[:15], dtype=np.float64)

    @classmethod
    def from_array(cls, values, N_pop=GERMANY_POPULATION):
        return cls(*map(float, values[:15]), N_pop=N_pop)


@njit(cache=True)
def _lambda(t, p):
    l0, l1, l2, l3 = p[0], p[1], p[2], p[3]
    t1, t2, t3 = p[4], p[5], p[6]
    d1, d2, d3 = p[7], p[8], p[9]
    if t < t1:
        return l0
    if t < t1 + d1:
        return l0 + (l1 - l0) / d1 * (t - t1)
    if t < t2:
        return l1
    if t < t2 + d2:
        return l1 + (l2 - l1) / d2 * (t - t2)
    if t < t3:
        return l2
    if t < t3 + d3:
        return l2 + (l3 - l2) / d3 * (t - t3)
    return l3


def sir_lambda(t: float, p: SirChangepointParams) -> float:
    return float(_lambda(float(t), p.as_array()))


def sir_r0(lambda_t: float, mu: float) -> float:
    if not mu > 0:
        raise DomainError("mu must be positive")
    return lambda_t / mu


def weekly_factor(t, f_w: float, phi_w: float):
    """``f(t) = (1 - f_w)(1 - |sin(pi t / 7 - phi_w / 2)|)``; cases scale by ``1 - f(t)``."""
    return (1 - f_w) * (1 - np.abs(np.sin(np.pi * np.asarray(t) / 7 - phi_w / 2)))


def substeps_per_day(dt: float) -> int:
    n = int(round(1.0 / dt))
    if n < 1 or abs(n * dt - 1.0) > 1e-9:
        raise DomainError(f"1/dt must be a positive integer, got dt={dt}")
    return n


@njit(nogil=True, cache=True)
def _sir_kernel(p, n_pop, n_sub, horizon):
    dt = 1.0 / n_sub
    mu = p[10]
    i0 = p[12]
    n_tot = horizon * n_sub
    s_sub = np.empty(n_tot + 1)
    i_sub = np.empty(n_tot + 1)
    r_sub = np.empty(n_tot + 1)
    s_sub[0] = n_pop - i0
    i_sub[0] = i0
    r_sub[0] = 0.0
    clamped = False
    for n in range(1, n_tot + 1):
        t = n * dt
        s = s_sub[n - 1]
        inf = i_sub[n - 1]
        flow = _lambda(t, p) * dt * s * inf / n_pop
        rec = mu * dt * inf
        s_new = s - flow
        i_new = inf + flow - rec
        r_new = r_sub[n - 1] + rec
        if not (np.isfinite(s_new) and np.isfinite(i_new) and np.isfinite(r_new)):
            return s_sub, i_sub, r_sub, clamped, n
        if s_new < 0.0:
            s_new = 0.0
            clamped = True
        if i_new < 0.0:
            i_new = 0.0
            clamped = True
        s_sub[n] = s_new
        i_sub[n] = i_new
        r_sub[n] = r_new
    return s_sub, i_sub, r_sub, clamped, -1


@njit(cache=True)
def _reported_cases(s_sub, p, n_sub, horizon):
    delay = int(np.round(p[11] * n_sub))
    f_w = p[13]
    phi_w = p[14]
    cases = np.zeros(horizon + 1)
    leading = np.ones(horizon + 1, dtype=np.bool_)
    for day in range(1, horizon + 1):
        end = day * n_sub - delay
        start = end - n_sub
        if start < 0:
            continue
        new = s_sub[start] - s_sub[end]
        f = (1.0 - f_w) * (1.0 - abs(np.sin(np.pi / 7.0 * day - 0.5 * phi_w)))
        cases[day] = (1.0 - f) * new
        leading[day] = False
    return cases, leading


@dataclass(frozen=True)
class SirResult:
    """Daily output for days ``0..horizon``.

    ``new_infections[t]`` and ``cases[t]`` refer to the day ending at ``t``;
    entry 0 is always 0.  ``leading_edge[t]`` marks days whose delayed
    infection window starts before the simulation did (cases reported as 0).
    """

    days: np.ndarray
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    new_infections: np.ndarray
    cases: np.ndarray
    leading_edge: np.ndarray
    clamped: bool


def sir_simulate_array(p: np.ndarray, dt: float, horizon_days: int,
                       n_pop: float = GERMANY_POPULATION) -> SirResult:
    """:func:`sir_simulate` on a raw 15-entry parameter array."""
    n_sub = substeps_per_day(dt)
    p = np.ascontiguousarray(p, dtype=np.float64)
    s, i, r, clamped, fail = _sir_kernel(p, float(n_pop), n_sub, int(horizon_days))
    if fail >= 0:
        raise DivergenceError(f"non-finite compartment at t={fail / n_sub}", time=fail / n_sub)
    cases, leading = _reported_cases(s, p, n_sub, int(horizon_days))
    daily = slice(None, None, n_sub)
    s_day = s[daily]
    new = np.zeros(horizon_days + 1)
    new[1:] = s_day[:-1] - s_day[1:]
    return SirResult(
        days=np.arange(horizon_days + 1),
        S=s_day, I=i[daily], R=r[daily],
        new_infections=new, cases=cases, leading_edge=leading, clamped=bool(clamped),
    )


def sir_simulate(p: SirChangepointParams, dt: float, horizon_days: int) -> SirResult:
    res = sir_simulate_array(p.as_array(), dt, horizon_days, p.N_pop)
    if res.clamped:
        warnings.warn("negative compartment clamped to zero", RuntimeWarning, stacklevel=2)
    return res

