"""Log-likelihoods and the error they pick up from an approximate forward solve."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Dataset
from .errors import DomainError

LOG_2PI = math.log(2 * math.pi)
STUDENT_T_FLOOR = 1e-8


@dataclass(frozen=True)
class GaussianIidNoise:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class StudentTScaledNoise:
    """Student-t noise with location ``C`` and scale ``sigma * sqrt(C)``."""

    sigma: float
    nu: float = 4.0

    def __post_init__(self):
        if not (self.sigma > 0 and self.nu > 0):
            raise DomainError("sigma and nu must be positive")


@dataclass(frozen=True)
class ObservationOperator:
    """Map from a state matrix ``(N, l)`` to observations ``(N, n)``.

    ``lipschitz_K`` is needed for the error bound; identity and component
    extraction are 1-Lipschitz.
    """

    kind: str = "identity"
    index: int = 0
    func: Callable | None = None
    lipschitz_K: float | None = 1.0

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def component(cls, index: int):
        return cls("component", index=index)

    @classmethod
    def custom(cls, func, lipschitz_K=None):
        return cls("custom", func=func, lipschitz_K=lipschitz_K)

    def __call__(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        if self.kind == "identity":
            return states
        if self.kind == "component":
            return states[:, self.index:self.index + 1]
        return np.asarray(self.func(states), dtype=float).reshape(states.shape[0], -1)

    def require_K(self) -> float:
        if self.lipschitz_K is None:
            raise DomainError("custom observation operator must declare lipschitz_K")
        return float(self.lipschitz_K)


def gaussian_log_likelihood(y, pred, sigma: float) -> float:
    """IID Gaussian log-likelihood, summing over every observation component."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    r = np.asarray(y, dtype=float) - np.asarray(pred, dtype=float)
    n = r.size
    return -0.5 * n * LOG_2PI - n * math.log(sigma) - 0.5 * float(np.dot(r.ravel(), r.ravel())) / sigma**2


def log_likelihood_gaussian(data: Dataset, predicted, noise: GaussianIidNoise) -> float:
    pred = np.asarray(predicted, dtype=float)
    if pred.ndim == 1:
        pred = pred[:, None]
    if pred.shape != data.observations.shape:
        raise DomainError(f"predictions {pred.shape} do not match data {data.observations.shape}")
    return gaussian_log_likelihood(data.observations, pred, noise.sigma)


def student_t_logpdf(x, loc, scale, nu: float):
    z = (x - loc) / scale
    return (math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2) - 0.5 * math.log(nu * math.pi)
            - np.log(scale) - (nu + 1) / 2 * np.log1p(z * z / nu))


def log_likelihood_student_t(data: Dataset, predicted_cases, noise: StudentTScaledNoise) -> float:
    c = np.asarray(predicted_cases, dtype=float).reshape(-1)
    y = data.observations[:, 0]
    if c.shape != y.shape:
        raise DomainError(f"{c.size} predictions for {y.size} observations")
    bad = np.flatnonzero(~np.isfinite(c))
    if bad.size:
        raise DomainError(f"non-finite predicted cases at index {bad[0]}")
    scale = noise.sigma * np.sqrt(np.maximum(c, STUDENT_T_FLOOR))
    return float(np.sum(student_t_logpdf(y, c, scale, noise.nu)))


@dataclass(frozen=True)
class LLErrorReport:
    mean_shift: float
    std: float
    bound: float | None = None


def ll_error_bound(errors_e, residuals, K: float, sigma: float) -> float:
    """Upper bound on ``|L - L'|`` from per-point state errors and true residuals.

    ``sum(K^2 e^2 / (2 sigma^2) + K e |y - g(x)| / sigma^2)``.
    """
    e = np.asarray(errors_e, dtype=float)
    r = np.asarray(residuals, dtype=float)
    if e.shape != r.shape:
        raise DomainError("errors and residuals must have the same length")
    if np.any(e < 0) or np.any(r < 0) or K < 0:
        raise DomainError("errors, residuals and K must be nonnegative")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return float(np.sum(K * K * e * e / (2 * sigma**2) + K * e * r / sigma**2))


def ll_error_distribution(a, sigma: float) -> LLErrorReport:
    """Mean and sd of ``L - L'`` when data are drawn at the evaluated parameters.

    ``a`` are the observation-space errors ``g(x(t_i)) - g(x_hat_i)``.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    a = np.asarray(a, dtype=float).ravel()
    if not np.all(np.isfinite(a)):
        raise DomainError("non-finite observation errors")
    ss = float(np.dot(a, a))
    return LLErrorReport(mean_shift=ss / (2 * sigma**2), std=math.sqrt(ss) / sigma)


def ll_error_report(errors_e, residuals, a, K: float, sigma: float) -> LLErrorReport:
    dist = ll_error_distribution(a, sigma)
    return LLErrorReport(bound=ll_error_bound(errors_e, residuals, K, sigma),
                         mean_shift=dist.mean_shift, std=dist.std)
