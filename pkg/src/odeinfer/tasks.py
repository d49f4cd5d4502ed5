"""Turn a resolved :class:`ExperimentConfig` into problems and run one task.

Every task writes plain CSV/JSON into an output directory, plus the fully
resolved configuration as ``config.resolved.ini``.  Output depends only on the
configuration and seed, never on thread count or wall-clock time.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ConfigError
from .inference import (McmcConfig, hydro_priors, make_log_posterior, oscillator_priors,
                        run_adaptive_metropolis, sir_priors)
from .io import (ExperimentConfig, emit_chains, emit_surface, load_case_csv,
                 load_streamflow_csv, write_csv, write_json)
from .models.hydro import PARAM_NAMES as HYDRO_NAMES, STATE_NAMES, streamflow
from .models.oscillator import PARAM_NAMES as OSC_NAMES, ForcingSpec
from .models.sir import PARAM_NAMES as SIR_NAMES, SirChangepointParams, sir_simulate_array
from .problems import SolverConfig, SirProblem, solve
from .surface import (bound_check, jaggedness, linear_grid, redraw_ll_differences,
                      scan_likelihood, step_count_jump_correlation, step_size_sensitivity)

OSC_SIGMA = 0.01
SIR_DEFAULT_SIGMA = 10.0


@dataclass(frozen=True)
class Experiment:
    """Problem, base parameters and priors built from a config."""

    config: ExperimentConfig
    problem: object
    theta: np.ndarray
    param_names: tuple
    solver: SolverConfig

    def param_index(self, name: str) -> int:
        if name not in self.param_names:
            raise ConfigError(f"unknown parameter {name!r}; expected one of {self.param_names}")
        return self.param_names.index(name)


def solver_from_config(cfg: ExperimentConfig) -> SolverConfig:
    s = cfg["solver"]
    if s["kind"] == "euler":
        return SolverConfig("euler", dt=s["dt"], max_steps=s["max_steps"])
    return SolverConfig(s["kind"], rtol=s["rtol"], atol=s["atol"], max_steps=s["max_steps"])


def _oscillator_forcings(data: dict):
    if data["forcing"] == "constant":
        truth = ForcingSpec.constant(1.0)
        return truth, truth
    truth = ForcingSpec.step(data["f1"], data["t_change"])
    if data["smoothing"] > 0:
        return truth, ForcingSpec.tanh_smooth(data["f1"], data["t_change"], data["smoothing"])
    return truth, truth


def _case_series(data: dict):
    if data["source"] == "bundled":
        return ex.germany_cases()
    return load_case_csv(data["source"])


def _streamflow_series(data: dict):
    if data["source"] == "bundled":
        return None
    return load_streamflow_csv(data["source"])


def resolve(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill the model-dependent defaults (sigma, base theta, scan ranges)."""
    values = {s: dict(v) for s, v in cfg.values.items()}
    data, model = values["data"], values["model"]
    if cfg.model == "oscillator":
        if data["source"] != "synthetic":
            raise ConfigError("the oscillator model only supports synthetic data")
        if len(data["true_theta"]) != 3:
            raise ConfigError("data.true_theta needs 3 values (m, c, k)")
        data["sigma"] = data["sigma"] or OSC_SIGMA
        names = OSC_NAMES
        theta = model["theta"] or tuple(data["true_theta"])
        default_param = "k"
    elif cfg.model == "hydro":
        if data["source"] == "synthetic":
            data["source"] = "bundled"
        data["sigma"] = data["sigma"] or float(ex.hydro_reference()["sigma"])
        names = HYDRO_NAMES
        theta = model["theta"] or tuple(map(float, ex.hydro_reference_theta()))
        default_param = "I_max"
    else:
        if data["source"] == "synthetic":
            data["source"] = "bundled"
        names = SIR_NAMES + ("sigma",)
        theta = model["theta"] or tuple(map(float, SirChangepointParams().as_array())) + (
            SIR_DEFAULT_SIGMA,)
        default_param = "lambda0"
        if values["simulate"]["horizon"] is None:
            values["simulate"]["horizon"] = data["lead_days"] + len(_case_series(data))
    if len(theta) != len(names):
        raise ConfigError(f"model.theta needs {len(names)} values ({', '.join(names)})")
    model["theta"] = tuple(float(v) for v in theta)
    for section in ("scan", "bound"):
        sec = values[section]
        sec["param"] = sec["param"] or default_param
        if sec["param"] not in names:
            raise ConfigError(f"{section}.param {sec['param']!r} is not one of {names}")
        base = model["theta"][names.index(sec["param"])]
        lo, hi = sorted((0.8 * base, 1.2 * base)) if base != 0 else (-0.2, 0.2)
        sec["lo"] = lo if sec["lo"] is None else sec["lo"]
        sec["hi"] = hi if sec["hi"] is None else sec["hi"]
        if not sec["hi"] > sec["lo"]:
            raise ConfigError(f"{section}.hi must exceed {section}.lo")
    if values["mcmc"]["burn_in"] is None:
        values["mcmc"]["burn_in"] = values["mcmc"]["n_iters"] // 3
    return ExperimentConfig(values, cfg.path)


def build(cfg: ExperimentConfig) -> Experiment:
    """Problem for a resolved config."""
    data = cfg["data"]
    theta = np.array(cfg["model"]["theta"], dtype=float)
    solver = solver_from_config(cfg)
    if cfg.model == "oscillator":
        truth, model_forcing = _oscillator_forcings(data)
        setup = ex.OscillatorSetup(truth, data["n_points"], data["t_end"], data["sigma"],
                                   tuple(data["true_theta"]))
        problem = setup.problem(data["noise_seed"], model_forcing=model_forcing)
        names = OSC_NAMES
    elif cfg.model == "hydro":
        problem = replace(ex.hydro_problem(_streamflow_series(data)), sigma=data["sigma"])
        names = HYDRO_NAMES
    else:
        series = _case_series(data)
        problem = SirProblem(cases=series.cases.astype(float), lead_days=data["lead_days"],
                             param_names=SIR_NAMES + ("sigma",))
        names = problem.param_names
    return Experiment(cfg, problem, theta, names, solver)


def _priors(exp: Experiment, infer_sigma: bool):
    model = exp.config.model
    if model == "oscillator":
        return oscillator_priors(infer_sigma)
    if model == "hydro":
        return hydro_priors(infer_sigma)
    return sir_priors(exp.problem.lead_days + 1)


# ------------------------------------------------------------------- tasks

def run_simulate(exp: Experiment, out: Path, threads: int) -> dict:
    cfg = exp.config
    if cfg.model == "sir_changepoint":
        horizon = cfg["simulate"]["horizon"]
        files = []
        for dt in cfg["simulate"]["dts"]:
            res = sir_simulate_array(exp.theta[:15], dt, horizon, exp.problem.n_pop)
            name = f"simulate_dt{dt:g}.csv"
            rows = zip(res.days.tolist(), map(float, res.S), map(float, res.I), map(float, res.R),
                       map(float, res.new_infections), map(float, res.cases))
            write_csv(out / name, ["day", "S", "I", "R", "new_infections", "cases"], rows)
            files.append(name)
        return {"files": files}
    problem = exp.problem
    model_theta, _ = problem.split(exp.theta)
    t_end = float(problem.data.times[-1])
    traj = solve(problem.system, model_theta, exp.solver, t_end)
    if cfg.model == "oscillator":
        times = np.linspace(problem.system.t0, t_end, cfg["simulate"]["n_out"])
        states = traj.sample(times)
        header = ["t", "x", "v"]
        cols = [times, states[:, 0], states[:, 1]]
    else:
        times = problem.data.times
        states = traj.sample(times)
        header = ["t", *STATE_NAMES, "flow"]
        cols = [times, *states.T, streamflow(states, model_theta)]
    write_csv(out / "simulate.csv", header, zip(*(map(float, c) for c in cols)))
    return {"files": ["simulate.csv"], "n_steps": traj.n_steps, "n_rejected": traj.n_rejected}


def _scan(exp: Experiment, threads: int):
    sc = exp.config["scan"]
    idx = exp.param_index(sc["param"])
    grid = linear_grid(sc["lo"], sc["hi"], sc["n_points"])
    return scan_likelihood(exp.problem, exp.theta, idx, grid, exp.solver, threads=threads)


def _surface_summary(surface, threshold) -> dict:
    rep = jaggedness(surface)
    corr = step_count_jump_correlation(surface, threshold)
    return {
        "solver": surface.solver_tag,
        "n_failed": int(surface.failed.sum()),
        "argmax": surface.argmax,
        "n_local_maxima": rep.n_local_maxima,
        "max_abs_jump": rep.max_abs_jump,
        "tv_excess": rep.tv_excess,
        "step_count_jump_correlation": corr,
    }


def run_scan(exp: Experiment, out: Path, threads: int) -> dict:
    surface = _scan(exp, threads)
    emit_surface(surface, out / "surface.csv")
    summary = {"param": exp.config["scan"]["param"],
               **_surface_summary(surface, exp.config["scan"]["jump_threshold"])}
    write_json(out / "summary.json", summary)
    return summary


def run_diagnose(exp: Experiment, out: Path, threads: int) -> dict:
    dg = exp.config["diagnose"]
    sens = step_size_sensitivity(exp.problem, exp.theta, exp.solver, dg["perturbation"],
                                 dg["threshold"])
    surface = _scan(exp, threads)
    emit_surface(surface, out / "surface.csv")
    result = {
        "step_size_sensitivity": {
            "ll_base": sens.ll_base,
            "ll_perturbed": [None if not np.isfinite(v) else v for v in sens.ll_perturbed],
            "abs_diff": sens.abs_diff if np.isfinite(sens.abs_diff) else None,
            "passed": sens.passed,
            "failures": list(sens.failures),
        },
        "surface": {"param": exp.config["scan"]["param"],
                    **_surface_summary(surface, exp.config["scan"]["jump_threshold"])},
    }
    write_json(out / "diagnose.json", result)
    return result


def run_bound(exp: Experiment, out: Path, threads: int, seed: int) -> dict:
    if exp.config.model == "sir_changepoint":
        raise ConfigError("the bound task needs a Gaussian-noise ODE model (oscillator or hydro)")
    bd = exp.config["bound"]
    reference = SolverConfig.rk54(bd["reference_rtol"], atol=min(bd["reference_rtol"], 1e-9))
    idx = exp.param_index(bd["param"])
    rng = np.random.default_rng(seed)
    values = np.sort(rng.uniform(bd["lo"], bd["hi"], bd["n_samples"]))
    rows, n_viol = [], 0
    for v in values:
        theta = exp.theta.copy()
        theta[idx] = v
        chk = bound_check(exp.problem, theta, exp.solver, reference)
        n_viol += chk.violated
        rows.append((float(v), chk.ll_ref, chk.ll_approx, chk.abs_diff, chk.bound,
                     chk.mean_shift, chk.std, int(chk.violated)))
    write_csv(out / "bound.csv", ["param_value", "ll_ref", "ll_approx", "abs_diff", "bound",
                                  "mean_shift", "std", "violated"], rows)
    summary = {"param": bd["param"], "n_samples": len(values), "n_violations": int(n_viol),
               "reference": reference.tag, "solver": exp.solver.tag}
    if bd["n_redraws"] > 0:
        diffs = redraw_ll_differences(exp.problem, exp.theta, exp.solver, reference,
                                      bd["n_redraws"], rng)
        chk = bound_check(exp.problem, exp.theta, exp.solver, reference)
        summary["redraws"] = {
            "n": int(bd["n_redraws"]),
            "empirical_mean": float(diffs.mean()),
            "empirical_sd": float(diffs.std(ddof=1)),
            "predicted_mean": chk.mean_shift,
            "predicted_sd": chk.std,
        }
    write_json(out / "summary.json", summary)
    return summary


def run_mcmc(exp: Experiment, out: Path, threads: int, seed: int) -> dict:
    mc = exp.config["mcmc"]
    problem = exp.problem
    names = exp.param_names
    if exp.config.model != "sir_changepoint":
        problem = problem.with_sigma(mc["infer_sigma"])
        names = problem.param_names
    priors = _priors(exp, mc["infer_sigma"])
    cfg = McmcConfig(n_chains=mc["n_chains"], n_iters=mc["n_iters"], burn_in=mc["burn_in"],
                     seed=seed, adaptation_start=mc["adaptation_start"], threads=threads)
    log_post = make_log_posterior(problem, priors, exp.solver)
    init = None
    if exp.config.model == "sir_changepoint":
        start = ex.sir_map_estimate(problem, priors, exp.solver.dt if exp.solver.is_fixed else 1.0)
        init = [start] * cfg.n_chains
    chains = run_adaptive_metropolis(log_post, priors, cfg, init=init, param_names=names)
    emit_chains(chains, out, manifest_extra={
        "config_sha256": exp.config.digest(),
        "solver": exp.solver.tag,
        "model": exp.config.model,
        "config_file": "config.resolved.ini",
        "config": exp.config.to_ini(),
    })
    rhat = chains.r_hat() if chains.n_chains >= 2 else np.full(len(names), np.nan)
    return {"r_hat": dict(zip(names, map(float, rhat))),
            "accept_rate": [float(a) for a in chains.accept_rate]}


def run(cfg: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Resolve, build and run the configured task; returns a small summary."""
    cfg = resolve(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved.ini").write_text(cfg.to_ini())
    exp = build(cfg)
    task = cfg.task
    if task == "simulate":
        return run_simulate(exp, out, threads)
    if task == "scan":
        return run_scan(exp, out, threads)
    if task == "diagnose":
        return run_diagnose(exp, out, threads)
    if task == "bound":
        return run_bound(exp, out, threads, cfg.seed)
    return run_mcmc(exp, out, threads, cfg.seed)
