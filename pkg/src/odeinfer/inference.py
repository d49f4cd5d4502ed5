"""Priors, adaptive-covariance Metropolis sampling and split R-hat."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import betaln, i0e

from .errors import DomainError, InitializationError, OdeInferError

PRIOR_KINDS = ("uniform", "normal", "log_normal", "half_cauchy", "beta", "von_mises")
TARGET_ACCEPTANCE = 0.234
ADAPT_DECAY = 0.6
COV_RIDGE = 1e-10
MAX_INIT_TRIES = 100
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class Prior:
    """One-dimensional prior.  ``a, b`` mean, per kind:

    uniform (lo, hi); normal (mean, sd); log_normal (log_mean, sd);
    half_cauchy (scale, -); beta (alpha, beta); von_mises (mean, kappa).
    The von Mises support is the circle ``[mean - pi, mean + pi]``.
    """

    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise DomainError(f"unknown prior kind {self.kind!r}")
        ok = {
            "uniform": self.b > self.a,
            "normal": self.b > 0,
            "log_normal": self.b > 0,
            "half_cauchy": self.a > 0,
            "beta": self.a > 0 and self.b > 0,
            "von_mises": self.b > 0,
        }[self.kind]
        if not (ok and math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError(f"malformed {self.kind} prior ({self.a}, {self.b})")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", lo, hi)

    @classmethod
    def normal(cls, mean, sd):
        return cls("normal", mean, sd)

    @classmethod
    def log_normal(cls, log_mean, sd):
        return cls("log_normal", log_mean, sd)

    @classmethod
    def half_cauchy(cls, scale):
        return cls("half_cauchy", scale)

    @classmethod
    def beta(cls, alpha, beta):
        return cls("beta", alpha, beta)

    @classmethod
    def von_mises(cls, mean, kappa):
        return cls("von_mises", mean, kappa)

    def logpdf(self, x: float) -> float:
        a, b = self.a, self.b
        if not math.isfinite(x):
            return -math.inf
        match self.kind:
            case "uniform":
                return -math.log(b - a) if a <= x <= b else -math.inf
            case "normal":
                z = (x - a) / b
                return -0.5 * z * z - math.log(b) - _HALF_LOG_2PI
            case "log_normal":
                if x <= 0:
                    return -math.inf
                z = (math.log(x) - a) / b
                return -0.5 * z * z - math.log(b) - _HALF_LOG_2PI - math.log(x)
            case "half_cauchy":
                if x < 0:
                    return -math.inf
                return math.log(2 / (math.pi * a)) - math.log1p((x / a) ** 2)
            case "beta":
                if not 0 < x < 1:
                    return -math.inf
                return (a - 1) * math.log(x) + (b - 1) * math.log1p(-x) - betaln(a, b)
            case "von_mises":
                if abs(x - a) > math.pi:
                    return -math.inf
                # log I0(k) = log(i0e(k)) + k keeps large concentrations finite
                return b * (math.cos(x - a) - 1) - math.log(2 * math.pi * i0e(b))

    def sample(self, rng: np.random.Generator) -> float:
        a, b = self.a, self.b
        match self.kind:
            case "uniform":
                return float(rng.uniform(a, b))
            case "normal":
                return float(rng.normal(a, b))
            case "log_normal":
                return float(math.exp(rng.normal(a, b)))
            case "half_cauchy":
                return float(abs(a * rng.standard_cauchy()))
            case "beta":
                return float(rng.beta(a, b))
            case "von_mises":
                return float(rng.vonmises(a, b))


def prior_log_density(prior: Prior, value: float) -> float:
    return prior.logpdf(value)


def joint_log_prior(priors: Sequence[Prior], theta) -> float:
    total = 0.0
    for p, v in zip(priors, theta):
        lp = p.logpdf(float(v))
        if lp == -math.inf:
            return -math.inf
        total += lp
    return total


@dataclass(frozen=True)
class McmcConfig:
    n_chains: int = 3
    n_iters: int = 1500
    burn_in: int | None = None
    seed: int = 0
    adaptation_start: int = 200
    threads: int = 1

    def __post_init__(self):
        if self.n_chains < 1 or self.n_iters < 1 or self.adaptation_start < 1:
            raise DomainError("n_chains, n_iters and adaptation_start must be positive")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.n_iters // 3)
        if not 0 <= self.burn_in < self.n_iters:
            raise DomainError(f"burn_in must lie in [0, n_iters), got {self.burn_in}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ChainSet:
    """Samples of shape ``(n_chains, n_iters, n_params)``; iteration 0 is the start point."""

    chains: np.ndarray
    log_posts: np.ndarray
    accept_rate: np.ndarray
    scale_trace: np.ndarray
    burn_in: int = 0
    param_names: tuple = ()
    seed: int = 0

    @property
    def n_chains(self) -> int:
        return self.chains.shape[0]

    @property
    def n_iters(self) -> int:
        return self.chains.shape[1]

    def kept(self) -> np.ndarray:
        return self.chains[:, self.burn_in:, :]

    def r_hat(self) -> np.ndarray:
        """Split R-hat per parameter on post-burn-in samples (``nan`` when degenerate)."""
        out = []
        for j in range(self.chains.shape[2]):
            try:
                out.append(r_hat(self.kept()[:, :, j]))
            except DomainError:
                out.append(math.nan)
        return np.array(out)


def metropolis_accept_prob(log_post_prop: float, log_post_old: float) -> float:
    """``min(1, exp(prop - old))`` with ``-inf`` proposals never accepted."""
    if math.isnan(log_post_prop) or math.isnan(log_post_old):
        raise DomainError("log posterior is NaN")
    if log_post_prop == -math.inf and log_post_old == -math.inf:
        raise DomainError("acceptance ratio undefined when both log posteriors are -inf")
    if log_post_prop == -math.inf:
        return 0.0
    diff = log_post_prop - log_post_old
    return 1.0 if diff >= 0 else math.exp(diff)


def _safe_eval(log_posterior, priors, theta) -> float:
    if joint_log_prior(priors, theta) == -math.inf:
        return -math.inf
    try:
        lp = float(log_posterior(theta))
    except (OdeInferError, FloatingPointError, ZeroDivisionError):
        return -math.inf
    return lp if math.isfinite(lp) else -math.inf


def _initial_point(log_posterior, priors, rng, init):
    theta = None if init is None else np.asarray(init, dtype=float)
    for _ in range(MAX_INIT_TRIES):
        if theta is not None:
            lp = _safe_eval(log_posterior, priors, theta)
            if lp > -math.inf:
                return theta, lp
        theta = np.array([p.sample(rng) for p in priors])
    raise InitializationError(f"no finite-posterior start point in {MAX_INIT_TRIES} tries")


def _run_chain(log_posterior, priors, n_iters, adaptation_start, rng, init):
    x, lp = _initial_point(log_posterior, priors, rng, init)
    d = x.size
    scale0 = np.abs(x)
    scale0[scale0 == 0] = 1.0
    sigma = np.diag(0.01 * scale0)
    mu = x.copy()
    log_lambda = 0.0
    adaptations = 2

    samples = np.empty((n_iters, d))
    lps = np.empty(n_iters)
    trace = np.empty(n_iters)
    samples[0], lps[0], trace[0] = x, lp, log_lambda
    n_accept = 0
    for it in range(1, n_iters):
        prop = rng.multivariate_normal(x, math.exp(log_lambda) * sigma, method="cholesky")
        lp_prop = _safe_eval(log_posterior, priors, prop)
        alpha = 0.0 if lp_prop == -math.inf else min(1.0, math.exp(min(lp_prop - lp, 0.0)))
        accepted = lp_prop > -math.inf and math.log(rng.random()) < lp_prop - lp
        if accepted:
            x, lp = prop, lp_prop
            n_accept += 1
        if it >= adaptation_start:
            gamma = adaptations ** -ADAPT_DECAY
            adaptations += 1
            mu = (1 - gamma) * mu + gamma * x
            dev = x - mu
            sigma = (1 - gamma) * sigma + gamma * np.outer(dev, dev) + COV_RIDGE * np.eye(d)
            log_lambda += gamma * (alpha - TARGET_ACCEPTANCE)
        samples[it], lps[it], trace[it] = x, lp, log_lambda
    rate = n_accept / (n_iters - 1) if n_iters > 1 else 0.0
    return samples, lps, rate, trace


def run_adaptive_metropolis(log_posterior: Callable, priors: Sequence[Prior], cfg: McmcConfig,
                            init=None, param_names: Sequence[str] = ()) -> ChainSet:
    """Adaptive-covariance random-walk Metropolis on several independent chains.

    Proposals are ``N(x, exp(log_lambda) * Sigma)``.  From ``adaptation_start``
    on, the running mean, ``Sigma`` and ``log_lambda`` are updated with weight
    ``gamma = n ** -0.6``, the last pushing acceptance toward 0.234.  Points
    outside prior support are rejected without calling ``log_posterior``, and a
    failed solve counts as ``-inf``.  ``init`` is one start per chain or
    ``None`` to draw starts from the priors.  Each chain has its own PCG64
    stream spawned from ``cfg.seed``, so results do not depend on ``threads``.
    """
    priors = list(priors)
    if init is not None and len(init) != cfg.n_chains:
        raise DomainError(f"need {cfg.n_chains} initial points, got {len(init)}")
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)
    rngs = [np.random.Generator(np.random.PCG64(s)) for s in streams]
    inits = [None] * cfg.n_chains if init is None else list(init)

    def chain(i):
        return _run_chain(log_posterior, priors, cfg.n_iters, cfg.adaptation_start, rngs[i], inits[i])

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(chain, range(cfg.n_chains)))
    else:
        results = [chain(i) for i in range(cfg.n_chains)]
    return ChainSet(
        chains=np.stack([r[0] for r in results]),
        log_posts=np.stack([r[1] for r in results]),
        accept_rate=np.array([r[2] for r in results]),
        scale_trace=np.stack([r[3] for r in results]),
        burn_in=cfg.burn_in,
        param_names=tuple(param_names),
        seed=cfg.seed,
    )


def r_hat(chains) -> float:
    """Split potential scale reduction for one parameter, ``chains`` shaped ``(m, n)``."""
    x = np.asarray(chains, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 4:
        raise DomainError("r_hat needs at least 2 chains of at least 4 samples")
    half = x.shape[1] // 2
    split = np.concatenate([x[:, :half], x[:, x.shape[1] - half:]])
    n = split.shape[1]
    w = float(np.mean(np.var(split, axis=1, ddof=1)))
    if w == 0:
        raise DomainError("zero within-chain variance (degenerate chains)")
    b = n * float(np.var(np.mean(split, axis=1), ddof=1))
    return math.sqrt(((n - 1) / n * w + b / n) / w)


def make_log_posterior(problem, priors: Sequence[Prior], solver) -> Callable:
    """``theta -> log prior + log likelihood`` for a problem and solver setting."""
    priors = list(priors)

    def log_posterior(theta):
        lp = joint_log_prior(priors, theta)
        if lp == -math.inf:
            return lp
        ll, _ = problem.log_likelihood(theta, solver)
        return lp + ll

    return log_posterior


def oscillator_priors(infer_sigma: bool = True) -> list[Prior]:
    """Uniform [0.1, 1.5] on ``m, c, k`` and uniform [0, 1] on sigma."""
    priors = [Prior.uniform(0.1, 1.5)] * 3
    return priors + [Prior.uniform(0.0, 1.0)] if infer_sigma else priors


def beta_from_mean_sd(mean: float, sd: float) -> Prior:
    """Beta prior with the given mean and standard deviation."""
    nu = mean * (1 - mean) / sd**2 - 1
    if not nu > 0:
        raise DomainError("sd too large for a beta distribution with this mean")
    return Prior.beta(mean * nu, (1 - mean) * nu)


def sir_priors(first_data_day: float = 17.0) -> list[Prior]:
    """Priors for the 16 SIR parameters, change points in simulation days.

    The change-point means sit 7, 14 and 21 days after the first observed day.
    The weekly-modulation prior on ``f_w`` has mean 0.7 and sd 0.17.
    """
    return [
        Prior.log_normal(math.log(0.4), 0.5),
        Prior.log_normal(math.log(0.2), 0.5),
        Prior.log_normal(math.log(0.125), 0.5),
        Prior.log_normal(math.log(0.0625), 0.5),
        Prior.normal(first_data_day + 7, 3.0),
        Prior.normal(first_data_day + 14, 1.0),
        Prior.normal(first_data_day + 21, 1.0),
        Prior.log_normal(math.log(3.0), 0.3),
        Prior.log_normal(math.log(3.0), 0.3),
        Prior.log_normal(math.log(3.0), 0.3),
        Prior.log_normal(math.log(0.0625), 0.2),
        Prior.log_normal(math.log(8.0), 0.2),
        Prior.half_cauchy(100.0),
        beta_from_mean_sd(0.7, 0.17),
        Prior.von_mises(0.0, 0.01),
        Prior.half_cauchy(10.0),
    ]


def hydro_priors(infer_sigma: bool = False) -> list[Prior]:
    priors = [
        Prior.uniform(0.0, 10.0),
        Prior.uniform(10.0, 1000.0),
        Prior.uniform(0.0, 100.0),
        Prior.uniform(0.0, 100.0),
        Prior.uniform(-10.0, 10.0),
        Prior.uniform(0.0, 150.0),
        Prior.uniform(0.0, 10.0),
    ]
    return priors + [Prior.uniform(0.0, 10.0)] if infer_sigma else priors
