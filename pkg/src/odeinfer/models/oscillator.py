"""Damped, driven harmonic oscillator ``m x'' + c x' + k x = F(t)``.

Solved in first-order form over the state ``(x, x')``.  The parameter
vector is ``(m, c, k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import OdeSystem
from ..errors import DomainError

PARAM_NAMES = ("m", "c", "k")

_CONSTANT, _STEP, _TANH = 0.0, 1.0, 2.0


@dataclass(frozen=True)
class OscillatorParams:
    m: float = 1.0
    c: float = 0.2
    k: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError("mass must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.m, self.c, self.k])


@dataclass(frozen=True)
class ForcingSpec:
    """Forcing ``F(t)``.

    ``constant``: ``F = value``.
    ``step``: ``F = 1`` for ``t < t_change`` and ``f1`` from ``t_change`` on.
    ``tanh_smooth``: ``(1+f1)/2 - ((1-f1)/2) tanh((t - t_change)/a)``, which
    runs from 1 to ``f1``.  ``a = 0`` is accepted and means the plain step.
    """

    kind: str = "constant"
    value: float = 1.0
    f1: float = 1.0
    t_change: float = 0.0
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "step", "tanh_smooth"):
            raise DomainError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "tanh_smooth" and self.a < 0:
            raise DomainError("smoothing width a must be positive")

    @classmethod
    def constant(cls, value=1.0):
        return cls("constant", value=value)

    @classmethod
    def step(cls, f1, t_change):
        return cls("step", f1=f1, t_change=t_change)

    @classmethod
    def tanh_smooth(cls, f1, t_change, a):
        if a == 0:
            return cls.step(f1, t_change)
        return cls("tanh_smooth", f1=f1, t_change=t_change, a=a)

    def encode(self) -> np.ndarray:
        code = {"constant": _CONSTANT, "step": _STEP, "tanh_smooth": _TANH}[self.kind]
        return np.array([code, self.value, self.f1, self.t_change, self.a])

    def __call__(self, t: float) -> float:
        return float(_forcing(self.encode(), float(t)))


def smooth_forcing_value(f1: float, t_change: float, a: float, t: float) -> float:
    if not a > 0:
        raise DomainError("smoothing width a must be positive")
    return (1 + f1) / 2 - ((1 - f1) / 2) * math.tanh((t - t_change) / a)


@njit(cache=True)
def _forcing(aux, t):
    kind = aux[0]
    if kind == _CONSTANT:
        return aux[1]
    f1 = aux[2]
    t_change = aux[3]
    if kind == _STEP:
        return 1.0 if t < t_change else f1
    return 0.5 * (1.0 + f1) - 0.5 * (1.0 - f1) * np.tanh((t - t_change) / aux[4])


@njit(cache=True)
def oscillator_rhs(t, x, theta, aux):
    m = theta[0]
    c = theta[1]
    k = theta[2]
    out = np.empty(2)
    out[0] = x[1]
    out[1] = _forcing(aux, t) / m - (c / m) * x[1] - (k / m) * x[0]
    return out


def oscillator_system(forcing: ForcingSpec = ForcingSpec(), x0=(0.0, 0.0),
                      t0: float = 0.0) -> OdeSystem:
    """Two-state system; solve it with ``theta = (m, c, k)``."""
    return OdeSystem(dim=2, rhs=oscillator_rhs, x0=np.asarray(x0, dtype=float), t0=t0,
                     aux=forcing.encode(), name="oscillator")


def underdamped_solution(params: OscillatorParams, force: float, t):
    """Closed form for constant forcing, ``x(0) = x'(0) = 0`` and ``c^2 < 4mk``."""
    m, c, k = params.m, params.c, params.k
    if c * c >= 4 * m * k:
        raise DomainError("closed form requires an underdamped oscillator")
    t = np.asarray(t, dtype=float)
    xs = force / k
    gamma = c / (2 * m)
    omega = math.sqrt(k / m - gamma * gamma)
    e = np.exp(-gamma * t)
    cos, sin = np.cos(omega * t), np.sin(omega * t)
    x = xs - xs * e * (cos + (gamma / omega) * sin)
    v = xs * e * (gamma * gamma / omega + omega) * sin
    return np.stack([x, v], axis=-1)
