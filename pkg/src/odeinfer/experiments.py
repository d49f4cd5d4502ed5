"""Synthetic-data setups for the oscillator studies, plus bundled real-data problems.

Every setup is deterministic given its ``seed``.  Data are generated with
RK54 at ``rtol=1e-8`` and IID Gaussian noise, true parameters
``m=1, c=0.2, k=1`` and a resting initial state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import Dataset
from .errors import OdeInferError
from .models.hydro import (PARAM_NAMES as HYDRO_NAMES, check_hydro_theta,
                           hydro_system, streamflow)
from .models.oscillator import PARAM_NAMES as OSC_NAMES, ForcingSpec, oscillator_system
from .models.sir import PARAM_NAMES as SIR_NAMES
from .problems import OdeProblem, SirProblem, SolverConfig, solve

TRUE_THETA = np.array([1.0, 0.2, 1.0])
DATA_SOLVER = SolverConfig.rk54(1e-8)
DEFAULT_SEED = 1


def noisy_observations(system, theta, times, sigma, seed, solver=DATA_SOLVER, observe=None):
    traj = solve(system, theta, solver, float(times[-1]))
    states = traj.sample(times)
    clean = states[:, 0] if observe is None else observe(states, theta)
    rng = np.random.default_rng(seed)
    return clean + sigma * rng.standard_normal(clean.shape)


@dataclass(frozen=True)
class OscillatorSetup:
    """Data-generation recipe for one oscillator experiment."""

    forcing: ForcingSpec
    n_points: int
    t_end: float
    sigma: float
    theta: tuple = tuple(TRUE_THETA)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_points)

    def dataset(self, seed: int = DEFAULT_SEED) -> Dataset:
        system = oscillator_system(self.forcing)
        y = noisy_observations(system, np.array(self.theta), self.times(), self.sigma, seed)
        return Dataset(self.times(), y)

    def problem(self, seed: int = DEFAULT_SEED, model_forcing: ForcingSpec | None = None,
                infer_sigma: bool = False) -> OdeProblem:
        """Problem on this setup's data; ``model_forcing`` may differ from the generating one."""
        forcing = self.forcing if model_forcing is None else model_forcing
        prob = OdeProblem(system=oscillator_system(forcing), data=self.dataset(seed),
                          sigma=self.sigma, param_names=OSC_NAMES)
        return prob.with_sigma(True) if infer_sigma else prob


# Surface comparison: fixed vs adaptive on a small forcing drop.
SURFACE_COMPARISON = OscillatorSetup(ForcingSpec.step(0.9, 25.0), 75, 50.0, 0.01)
# Forward Euler inference on the unforced-step problem.
EULER_STUDY = OscillatorSetup(ForcingSpec.constant(1.0), 25, 5.0, 0.1)
# Adaptive solver on a reversing pulse at t=2.5.
ADAPTIVE_STUDY = OscillatorSetup(ForcingSpec.step(-1.0, 2.5), 25, 5.0, 0.1)
# Step-count analysis: strong pulse at t=5.
STEP_COUNT_STUDY = OscillatorSetup(ForcingSpec.step(-5.0, 5.0), 50, 10.0, 0.01)


def pulse_setup(f1: float, sigma: float = 0.01) -> OscillatorSetup:
    """Pulse-strength family: ``F`` drops from 1 to ``f1`` at ``t=25``."""
    return OscillatorSetup(ForcingSpec.step(f1, 25.0), 75, 50.0, sigma)


# Mixing study: the f1=-1 member of the pulse family, low noise.
MIXING_STUDY = pulse_setup(-1.0)


def smoothing_problem(a: float, seed: int = DEFAULT_SEED) -> OdeProblem:
    """Step-forced data fitted with a tanh-smoothed model of width ``a`` (0 = no smoothing)."""
    model_forcing = ForcingSpec.tanh_smooth(-1.0, 2.5, a)
    return ADAPTIVE_STUDY.problem(seed, model_forcing=model_forcing)


def _data_path(name):
    return resources.files("odeinfer") / "data" / name


def germany_cases():
    from .io import load_case_csv
    with resources.as_file(_data_path("germany_cases.csv")) as path:
        return load_case_csv(path)


def sir_problem(lead_days: int = 16) -> SirProblem:
    series = germany_cases()
    return SirProblem(cases=series.cases.astype(float), lead_days=lead_days,
                      param_names=SIR_NAMES + ("sigma",))


def hydro_reference() -> dict:
    return json.loads(_data_path("hydro_reference.json").read_text())


def hydro_problem(series=None) -> OdeProblem:
    """Rainfall-runoff problem on the bundled 200-day series."""
    if series is None:
        from .io import load_streamflow_csv
        with resources.as_file(_data_path("streamflow.csv")) as path:
            series = load_streamflow_csv(path)
    ref = hydro_reference()
    system = hydro_system(series.forcing)
    times = np.arange(1, len(series.flow) + 1, dtype=float)
    return OdeProblem(system=system, data=Dataset(times, series.flow), sigma=ref["sigma"],
                      observe=streamflow, param_names=HYDRO_NAMES,
                      check_theta=check_hydro_theta)


def hydro_reference_theta() -> np.ndarray:
    ref = hydro_reference()
    return np.array([ref["params"][n] for n in HYDRO_NAMES])


def sir_forward_scenario(dt: float, lambda1: float = 0.1, change_day: float = 21.0,
                         horizon: int = 40, lead_days: int = 16):
    """Reported cases for the one-change-point forward study, from the first reporting day.

    Growth at ``lambda0 = 0.4`` with recovery ``mu = 0.125`` until ``change_day``
    (counted from the first reporting day), then a 3-day ramp to ``lambda1``.
    No weekly modulation.  Returns ``(days, daily_cases)``.
    """
    from .models.sir import SirChangepointParams, sir_simulate
    t1 = lead_days + 1 + change_day
    far = lead_days + horizon + 100.0
    params = SirChangepointParams(
        lambda0=0.4, lambda1=lambda1, lambda2=lambda1, lambda3=lambda1,
        t1=t1, t2=far, t3=far + 1, d1=3.0, mu=0.125, D=8.0, I0=20.0, f_w=1.0, phi_w=0.0,
    )
    res = sir_simulate(params, dt, lead_days + horizon)
    cases = res.cases[lead_days + 1:]
    return np.arange(cases.size), cases


def sir_map_estimate(problem: SirProblem, priors, dt: float, start=None, maxiter: int = 20000):
    """Posterior mode by Nelder-Mead from the prior medians; used to start SIR chains."""
    from scipy.optimize import minimize

    from .inference import make_log_posterior
    log_post = make_log_posterior(problem, priors, SolverConfig.euler(dt))

    def objective(theta):
        try:
            lp = log_post(theta)
        except OdeInferError:
            return np.inf
        return -lp if np.isfinite(lp) else np.inf

    x0 = sir_prior_medians(priors) if start is None else np.asarray(start, dtype=float)
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"maxiter": maxiter, "maxfev": maxiter, "xatol": 1e-6, "fatol": 1e-6})
    return res.x


def sir_prior_medians(priors) -> np.ndarray:
    from scipy.special import betaincinv
    out = []
    for p in priors:
        match p.kind:
            case "log_normal":
                out.append(np.exp(p.a))
            case "normal" | "von_mises":
                out.append(p.a)
            case "half_cauchy":
                out.append(p.a)
            case "beta":
                out.append(float(betaincinv(p.a, p.b, 0.5)))
            case _:
                out.append(0.5 * (p.a + p.b))
    return np.array(out, dtype=float)
