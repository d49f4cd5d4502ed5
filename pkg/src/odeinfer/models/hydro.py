"""Five-store conceptual rainfall-runoff model.

State: interception storage ``S_i``, unsaturated storage ``S_u``, slow and
fast reservoirs ``S_s``, ``S_f``, and cumulative discharge ``z``.  The
observed quantity is the streamflow ``dz/dt = S_s/K_s + S_f/K_f``.

Daily precipitation and evaporation are held constant over each day
``[d, d+1)``, so the right-hand side jumps at every day boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import OdeSystem
from ..errors import DomainError

PARAM_NAMES = ("I_max", "S_u_max", "Q_s_max", "alpha_e", "alpha_f", "K_s", "K_f")
STATE_NAMES = ("S_i", "S_u", "S_s", "S_f", "z")

ALPHA_S = 0.0
ALPHA_I = 50.0


@dataclass(frozen=True)
class HydroParams:
    I_max: float
    S_u_max: float
    Q_s_max: float
    alpha_e: float
    alpha_f: float
    K_s: float
    K_f: float
    alpha_s: float = ALPHA_S
    alpha_i: float = ALPHA_I

    def __post_init__(self):
        if not (self.K_s > 0 and self.K_f > 0):
            raise DomainError("reservoir time constants K_s, K_f must be positive")
        if not (self.I_max > 0 and self.S_u_max > 0):
            raise DomainError("storage capacities must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.I_max, self.S_u_max, self.Q_s_max, self.alpha_e,
                         self.alpha_f, self.K_s, self.K_f])


@dataclass(frozen=True)
class HydroForcing:
    precip: np.ndarray
    evap: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.precip, dtype=float)
        e = np.asarray(self.evap, dtype=float)
        if p.shape != e.shape or p.ndim != 1:
            raise DomainError("precip and evap must be aligned 1-D series")
        if np.any(p < 0) or np.any(e < 0):
            raise DomainError("forcing must be nonnegative")
        object.__setattr__(self, "precip", p)
        object.__setattr__(self, "evap", e)

    @property
    def n_days(self) -> int:
        return self.precip.size


@njit(cache=True)
def _flux(s, a):
    if abs(a) < 1e-12:
        return s
    return math.expm1(-a * s) / math.expm1(-a)


def hydro_flux(S: float, a: float) -> float:
    """``(1 - exp(-a S)) / (1 - exp(-a))``, with the limit ``S`` at ``a = 0``."""
    return float(_flux(float(S), float(a)))


@njit(cache=True)
def hydro_fluxes(t, x, theta, aux):
    """All seven named fluxes at ``(t, x)``.

    Returns ``(intercept_evap, effect_precip, unsat_evap, percolation,
    runoff, slow_stream, fast_stream)``.
    """
    i_max, su_max, qs_max = theta[0], theta[1], theta[2]
    a_e, a_f, k_s, k_f = theta[3], theta[4], theta[5], theta[6]
    a_s, a_i = aux[0], aux[1]
    n = int(aux[2])
    day = int(math.floor(t))
    if day < 0:
        day = 0
    elif day > n - 1:
        day = n - 1
    precip = aux[3 + day]
    evap = aux[3 + n + day]
    si = x[0] / i_max
    su = x[1] / su_max
    out = np.empty(7)
    out[0] = evap * _flux(si, a_i)
    out[1] = precip * _flux(si, -a_i)
    out[2] = max(0.0, evap - out[0]) * _flux(su, a_e)
    out[3] = qs_max * _flux(su, a_s)
    out[4] = out[1] * _flux(su, a_f)
    out[5] = x[2] / k_s
    out[6] = x[3] / k_f
    return out


@njit(cache=True)
def hydro_rhs(t, x, theta, aux):
    fl = hydro_fluxes(t, x, theta, aux)
    out = np.empty(5)
    precip = aux[3 + min(max(int(math.floor(t)), 0), int(aux[2]) - 1)]
    out[0] = precip - fl[0] - fl[1]
    out[1] = fl[1] - fl[2] - fl[3] - fl[4]
    out[2] = fl[3] - fl[5]
    out[3] = fl[4] - fl[6]
    out[4] = fl[5] + fl[6]
    return out


def hydro_system(forcing: HydroForcing, x0=None, alpha_s: float = ALPHA_S,
                 alpha_i: float = ALPHA_I) -> OdeSystem:
    """System over ``(S_i, S_u, S_s, S_f, z)``; solve with the 7 free parameters."""
    aux = np.concatenate([[alpha_s, alpha_i, forcing.n_days], forcing.precip, forcing.evap])
    if x0 is None:
        x0 = np.zeros(5)
    return OdeSystem(dim=5, rhs=hydro_rhs, x0=x0, t0=0.0, aux=aux, name="hydro")


def check_hydro_theta(theta) -> None:
    theta = np.asarray(theta, dtype=float)
    if theta[5] <= 0 or theta[6] <= 0:
        raise DomainError("K_s and K_f must be positive")


def streamflow(states: np.ndarray, theta) -> np.ndarray:
    """Observed streamflow ``S_s/K_s + S_f/K_f`` for an ``(N, 5)`` state array."""
    return states[:, 2] / theta[5] + states[:, 3] / theta[6]
