"""Embedded Runge-Kutta pairs with local error control and dense output.

Two pairs are provided:

* ``RK54`` -- Dormand-Prince 5(4), advancing with the 5th order solution,
  with the quartic continuous extension of Shampine for dense output.
* ``RK32`` -- Bogacki-Shampine 3(2), with cubic Hermite dense output built
  from the end-point values and derivatives of each step.

Both use the FSAL stage ``f(t + h, x_new)`` as the last row of the stage
matrix, so the error estimate and the dense output can use it for free.

A step is accepted when the RMS over components of the embedded error,
scaled by ``atol + rtol * max(|x_prev|, |x_new|)``, is at most one.
Discontinuities in the right-hand side are stepped over like any other
feature; no event location is attempted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import OdeSystem, Trajectory, param_vector
from .errors import DivergenceError, DomainError, StepBudgetExceeded, StepSizeUnderflow

DEFAULT_ATOL = 1e-9
DEFAULT_MAX_STEPS = 100_000

_OK, _BUDGET, _UNDERFLOW, _DIVERGED = 0, 1, 2, 3


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-3
    atol: float = DEFAULT_ATOL

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError("rtol and atol must both be positive")


@dataclass(frozen=True)
class RkPair:
    """Butcher tableau of an embedded pair plus dense-output coefficients.

    ``b_low`` has one more entry than ``b_high``: the weight of the FSAL stage.
    ``dense[j, r]`` multiplies ``theta**(r + 1)`` for stage ``j``.
    """

    name: str
    c: np.ndarray
    a: np.ndarray
    b_high: np.ndarray
    b_low: np.ndarray
    order_high: int
    order_low: int
    dense: np.ndarray

    @property
    def n_stages(self) -> int:
        return self.c.size

    @property
    def error_weights(self) -> np.ndarray:
        return np.append(self.b_high, 0.0) - self.b_low

    @property
    def error_exponent(self) -> float:
        return -1.0 / (self.order_low + 1)


RK54 = RkPair(
    name="RK54",
    c=np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1]),
    a=np.array([
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    ]),
    b_high=np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
    b_low=np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200,
                    187 / 2100, 1 / 40]),
    order_high=5,
    order_low=4,
    dense=np.array([
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933,
         87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408,
         701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]),
)

# Cubic Hermite on (x_old, x_new, f_old, f_new) written in stage form: with
# b_high = (2/9, 1/3, 4/9) and f_new the FSAL stage, these rows reproduce the
# Hermite basis exactly.
RK32 = RkPair(
    name="RK32",
    c=np.array([0, 1 / 2, 3 / 4]),
    a=np.array([
        [0, 0, 0],
        [1 / 2, 0, 0],
        [0, 3 / 4, 0],
    ]),
    b_high=np.array([2 / 9, 1 / 3, 4 / 9]),
    b_low=np.array([7 / 24, 1 / 4, 1 / 3, 1 / 8]),
    order_high=3,
    order_low=2,
    dense=np.array([
        [1, -4 / 3, 5 / 9],
        [0, 1, -2 / 3],
        [0, 4 / 3, -8 / 9],
        [0, -1, 1],
    ]),
)

PAIRS = {"RK54": RK54, "RK32": RK32}


@dataclass(frozen=True)
class StepController:
    """Clamped elementary controller: ``h *= clamp(safety * err**exponent)``."""

    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 10.0

    def __post_init__(self):
        if not (self.min_factor < 1.0 < self.max_factor):
            raise DomainError("need min_factor < 1 < max_factor")


@njit(cache=True)
def _rms_scaled(v, scale):
    s = 0.0
    for j in range(v.size):
        r = v[j] / scale[j]
        s += r * r
    return np.sqrt(s / v.size)


def error_norm(x_high, x_low, x_prev, tol: Tolerances) -> float:
    """Scaled RMS of the embedded error estimate; a step passes iff <= 1."""
    x_high = np.atleast_1d(np.asarray(x_high, dtype=np.float64))
    x_low = np.atleast_1d(np.asarray(x_low, dtype=np.float64))
    x_prev = np.atleast_1d(np.asarray(x_prev, dtype=np.float64))
    scale = tol.atol + tol.rtol * np.maximum(np.abs(x_prev), np.abs(x_high))
    return float(_rms_scaled(x_high - x_low, scale))


def initial_step(system: OdeSystem, theta, tol: Tolerances, t_end: float,
                 pair: RkPair = RK54) -> float:
    """Starting step size from the size of ``x0`` and of its first two derivatives.

    ``d0``, ``d1`` are the tolerance-scaled norms of ``x0`` and ``f(t0, x0)``;
    ``d2`` estimates the scaled second derivative from one explicit Euler
    probe.  Treating ``d1/d2`` as the solution's time scale keeps the result
    equivariant under rescaling of the time axis.
    """
    theta = param_vector(theta)
    return float(_initial_step(system.rhs, system.t0, system.x0.copy(), float(t_end),
                               theta, system.aux, tol.rtol, tol.atol, pair.error_exponent))


@njit(cache=True)
def _initial_step(rhs, t0, x0, t_end, theta, aux, rtol, atol, err_exp):
    span = t_end - t0
    dim = x0.size
    scale = np.empty(dim)
    for j in range(dim):
        scale[j] = atol + rtol * abs(x0[j])
    f0 = rhs(t0, x0, theta, aux)
    d0 = _rms_scaled(x0, scale)
    d1 = _rms_scaled(f0, scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6 * span
    else:
        h0 = min(0.01 * d0 / d1, 0.1 * span)
    x1 = np.empty(dim)
    for j in range(dim):
        x1[j] = x0[j] + h0 * f0[j]
    f1 = rhs(t0 + h0, x1, theta, aux)
    diff = np.empty(dim)
    for j in range(dim):
        diff[j] = f1[j] - f0[j]
    d2 = _rms_scaled(diff, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        return h0
    if d2 <= 1e-15 or not np.isfinite(d2):
        h1 = 100.0 * h0
    else:
        tau = d1 / d2 if d1 > 1e-15 else 1.0 / np.sqrt(d2)
        # error of one step ~ d1 * h * (h / tau)**q
        q = -1.0 / err_exp - 1.0
        if d1 > 1e-15:
            h1 = (0.01 * tau ** q / d1) ** (-err_exp)
        else:
            h1 = tau * 0.01 ** (-err_exp)
    return min(100.0 * h0, h1, 0.1 * span)


@njit(nogil=True, cache=True)
def _rk_kernel(rhs, t0, x0, t_end, theta, aux, a, b_high, err_w, c, err_exp,
               rtol, atol, h_init, max_steps, safety, min_factor, max_factor):
    dim = x0.size
    s = c.size
    cap = 64
    ts = np.empty(cap)
    ys = np.empty((cap, dim))
    ks = np.empty((cap, s + 1, dim))
    ts[0] = t0
    ys[0] = x0
    n_acc = 0
    n_rej = 0
    t = t0
    x = x0.copy()
    f = rhs(t, x, theta, aux)
    for j in range(dim):
        if not np.isfinite(f[j]):
            return ts[:1], ys[:1], ks[:0], 0, 0, 3, t
    h_abs = h_init
    span = t_end - t0
    min_step = 1e-14 * span
    K = np.empty((s + 1, dim))
    x_new = np.empty(dim)
    xs = np.empty(dim)
    while t < t_end:
        if n_acc >= max_steps:
            return ts[:n_acc + 1], ys[:n_acc + 1], ks[:n_acc], n_acc, n_rej, 1, t
        rejected = False
        nonfinite = False
        while True:
            if h_abs < min_step:
                status = 3 if nonfinite else 2
                return ts[:n_acc + 1], ys[:n_acc + 1], ks[:n_acc], n_acc, n_rej, status, t
            t_new = t + h_abs
            if t_new > t_end:
                t_new = t_end
            h = t_new - t
            h_abs = h
            K[0] = f
            for i in range(1, s):
                for j in range(dim):
                    acc = 0.0
                    for m in range(i):
                        acc += a[i, m] * K[m, j]
                    xs[j] = x[j] + h * acc
                K[i] = rhs(t + c[i] * h, xs, theta, aux)
            for j in range(dim):
                acc = 0.0
                for m in range(s):
                    acc += b_high[m] * K[m, j]
                x_new[j] = x[j] + h * acc
            K[s] = rhs(t_new, x_new, theta, aux)
            finite = True
            for i in range(s + 1):
                for j in range(dim):
                    if not np.isfinite(K[i, j]):
                        finite = False
            # a trial step that overflows is rejected like any other; only a
            # blow-up that survives shrinking to the minimum step is divergence
            if not finite:
                nonfinite = True
                h_abs *= min_factor
                rejected = True
                n_rej += 1
                continue
            nonfinite = False
            sq = 0.0
            for j in range(dim):
                acc = 0.0
                for m in range(s + 1):
                    acc += err_w[m] * K[m, j]
                sc = atol + rtol * max(abs(x[j]), abs(x_new[j]))
                r = h * acc / sc
                sq += r * r
            err = np.sqrt(sq / dim)
            if not np.isfinite(err):
                nonfinite = True
                h_abs *= min_factor
                rejected = True
                n_rej += 1
                continue
            if err <= 1.0:
                if err == 0.0:
                    factor = max_factor
                else:
                    factor = min(max_factor, safety * err ** err_exp)
                if rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                break
            h_abs *= max(min_factor, safety * err ** err_exp)
            rejected = True
            n_rej += 1
        n_acc += 1
        if n_acc >= cap:
            cap *= 2
            ts2 = np.empty(cap)
            ys2 = np.empty((cap, dim))
            ks2 = np.empty((cap, s + 1, dim))
            ts2[:n_acc] = ts[:n_acc]
            ys2[:n_acc] = ys[:n_acc]
            ks2[:n_acc - 1] = ks[:n_acc - 1]
            ts, ys, ks = ts2, ys2, ks2
        ks[n_acc - 1] = K
        t = t_new
        x[:] = x_new
        f = K[s].copy()
        ts[n_acc] = t
        ys[n_acc] = x
    return ts[:n_acc + 1], ys[:n_acc + 1], ks[:n_acc], n_acc, n_rej, 0, t


@njit(cache=True)
def _dense_eval(ts, ys, ks, dense, q):
    n_nodes = ts.size
    dim = ys.shape[1]
    n_stage = dense.shape[0]
    order = dense.shape[1]
    out = np.empty((q.size, dim))
    pw = np.empty(order)
    for i in range(q.size):
        tq = q[i]
        idx = np.searchsorted(ts, tq, side="right") - 1
        if idx >= n_nodes - 1:
            idx = n_nodes - 1
        if idx < 0:
            idx = 0
        if ts[idx] == tq or n_nodes == 1:
            out[i] = ys[idx]
            continue
        h = ts[idx + 1] - ts[idx]
        th = (tq - ts[idx]) / h
        p = 1.0
        for r in range(order):
            p *= th
            pw[r] = p
        for j in range(dim):
            acc = 0.0
            for m in range(n_stage):
                w = 0.0
                for r in range(order):
                    w += dense[m, r] * pw[r]
                acc += w * ks[idx, m, j]
            out[i, j] = ys[idx, j] + h * acc
    return out


class DenseOutput:
    """Per-step polynomial interpolant produced by :func:`solve_adaptive`."""

    def __init__(self, times, states, stages, pair: RkPair):
        self.times = times
        self.states = states
        self.stages = stages
        self.pair = pair

    def __call__(self, q):
        q = np.ascontiguousarray(np.atleast_1d(q), dtype=np.float64)
        return _dense_eval(self.times, self.states, self.stages, self.pair.dense, q)


def solve_adaptive(system: OdeSystem, theta, pair: RkPair = RK54,
                   tol: Tolerances = Tolerances(), t_end: float = 1.0,
                   max_steps: int = DEFAULT_MAX_STEPS,
                   controller: StepController = StepController(),
                   h0: float | None = None) -> Trajectory:
    """Integrate ``system`` from ``t0`` to ``t_end`` with an embedded RK pair."""
    theta = param_vector(theta)
    t_end = float(t_end)
    if not t_end > system.t0:
        raise DomainError("t_end must exceed t0")
    if h0 is None:
        h0 = initial_step(system, theta, tol, t_end, pair)
    ts, ys, ks, n_acc, n_rej, status, t_fail = _rk_kernel(
        system.rhs, system.t0, system.x0.copy(), t_end, theta, system.aux,
        pair.a, pair.b_high, pair.error_weights, pair.c, pair.error_exponent,
        tol.rtol, tol.atol, float(h0), int(max_steps),
        controller.safety, controller.min_factor, controller.max_factor,
    )
    if status == _BUDGET:
        raise StepBudgetExceeded(f"more than {max_steps} steps needed (t={t_fail})", time=t_fail)
    if status == _UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at t={t_fail}", time=t_fail)
    if status == _DIVERGED:
        raise DivergenceError(f"non-finite stage value at t={t_fail}", time=t_fail)
    return Trajectory(
        times=ts,
        states=ys,
        interpolant=DenseOutput(ts, ys, ks, pair),
        n_steps=int(n_acc),
        n_rejected=int(n_rej),
    )
