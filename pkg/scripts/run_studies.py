"""Regenerate the plot-ready CSVs for the oscillator, SIR and hydro studies.

    python3 scripts/run_studies.py --out results/ [--only surfaces,ladder,...]

Each study writes into its own subdirectory and prints a one-line summary.
The MCMC studies (``mixing``, ``sir``) take minutes; the rest take seconds.
"""
from __future__ import annotations

import argparse
import json
import os
import time
from pathlib import Path

import numpy as np

from odeinfer import experiments as ex
from odeinfer.inference import (McmcConfig, make_log_posterior, oscillator_priors,
                                run_adaptive_metropolis, sir_priors)
from odeinfer.io import emit_chains, emit_surface, write_csv
from odeinfer.problems import SolverConfig
from odeinfer.surface import jaggedness, linear_grid, scan_likelihood, step_count_jump_correlation

K = 2
THREADS = os.cpu_count() or 1


def _scan(problem, grid, solver, out, name, theta=ex.TRUE_THETA, index=K):
    surf = scan_likelihood(problem, theta, index, grid, solver, threads=THREADS)
    emit_surface(surf, out / f"{name}.csv")
    rep = jaggedness(surf)
    print(f"  {name}: maxima={rep.n_local_maxima} max_jump={rep.max_abs_jump:.3g} "
          f"tv_excess={rep.tv_excess:.4g}")
    return surf


def surfaces(out):
    """Fixed-step vs adaptive k-surfaces on the small forcing drop."""
    grid = linear_grid(0.8, 1.2, 500)
    prob = ex.SURFACE_COMPARISON.problem()
    _scan(prob, grid, SolverConfig.euler(0.01), out, "euler_dt0.01")
    _scan(prob, grid, SolverConfig.rk54(0.00944), out, "rk54_rtol0.00944")
    _scan(prob, grid, SolverConfig.rk54(1e-8), out, "rk54_rtol1e-8")


def euler_steps(out):
    grid = linear_grid(0.5, 1.5, 201)
    for dt in (0.1, 0.05, 0.01, 0.005):
        _scan(ex.EULER_STUDY.problem(), grid, SolverConfig.euler(dt), out, f"euler_dt{dt:g}")
    _scan(ex.EULER_STUDY.problem(), grid, SolverConfig.rk54(1e-12, 1e-12), out, "reference")


def ladder(out):
    """Jaggedness against pulse strength at rtol 1e-3."""
    grid = linear_grid(0.8, 1.2, 500)
    for f1 in (1.0, -1.0, -5.0):
        _scan(ex.pulse_setup(f1).problem(), grid, SolverConfig.rk54(1e-3), out, f"f1_{f1:g}")


def step_counts(out):
    surf = _scan(ex.STEP_COUNT_STUDY.problem(), linear_grid(0.995, 1.005, 500),
                 SolverConfig.rk54(1e-3), out, "narrow_window")
    print(f"  step-count/jump correlation: {step_count_jump_correlation(surf, 10.0)}")


def smoothing(out):
    grid = linear_grid(0.8, 1.2, 500)
    for a in (0.0, 0.05, 0.1):
        _scan(ex.smoothing_problem(a), grid, SolverConfig.rk54(1e-3), out, f"tanh_a{a:g}")


def hydro(out):
    problem, theta = ex.hydro_problem(), ex.hydro_reference_theta()
    for i, name in enumerate(problem.param_names):
        grid = linear_grid(0.8 * theta[i], 1.2 * theta[i], 200)
        _scan(problem, grid, SolverConfig.rk32(1e-3, 1e-3), out, f"{name}_rk32", theta, i)
        _scan(problem, grid, SolverConfig.rk54(1e-7), out, f"{name}_rk54", theta, i)


def sir_forward(out):
    for dt in (1.0, 0.1):
        days, cases = ex.sir_forward_scenario(dt)
        write_csv(out / f"cases_dt{dt:g}.csv", ["day", "cases", "cumulative"],
                  zip(days.tolist(), map(float, cases), map(float, np.cumsum(cases))))
    print("  wrote cases_dt1.csv, cases_dt0.1.csv")


def mixing(out, seeds=range(10)):
    problem = ex.MIXING_STUDY.problem(infer_sigma=True)
    priors = oscillator_priors()
    rows = []
    for rtol in (1e-3, 1e-8):
        log_post = make_log_posterior(problem, priors, SolverConfig.rk54(rtol))
        for seed in seeds:
            cs = run_adaptive_metropolis(log_post, priors,
                                         McmcConfig(3, 1500, burn_in=750, seed=seed, threads=THREADS),
                                         param_names=problem.param_names)
            if seed == 0:
                emit_chains(cs, out / f"rtol{rtol:g}", {"solver": f"rk54 rtol={rtol:g}"})
            rows.append((rtol, seed, float(cs.r_hat()[0])))
    write_csv(out / "rhat_m.csv", ["rtol", "seed", "r_hat_m"], rows)
    for rtol in (1e-3, 1e-8):
        print(f"  rtol {rtol:g}: R-hat(m) = {[round(r, 3) for t, _, r in rows if t == rtol]}")


def sir(out, n_iters=100_000):
    problem = ex.sir_problem()
    priors = sir_priors(problem.lead_days + 1)
    medians = {}
    for dt in (1.0, 0.1):
        start = ex.sir_map_estimate(problem, priors, dt)
        log_post = make_log_posterior(problem, priors, SolverConfig.euler(dt))
        cs = run_adaptive_metropolis(log_post, priors,
                                     McmcConfig(4, n_iters, burn_in=n_iters // 2, seed=1,
                                                threads=THREADS),
                                     init=[start] * 4, param_names=problem.param_names)
        emit_chains(cs, out / f"dt{dt:g}", {"solver": f"euler dt={dt:g}"})
        kept = cs.kept()
        medians[dt] = float(np.median(kept[:, :, 0] / kept[:, :, 10]))
    ratio = medians[1.0] / medians[0.1]
    (out / "r0.json").write_text(json.dumps({"median_r0": medians, "ratio": ratio}, indent=2))
    print(f"  pre-changepoint R0 medians {medians}, ratio {ratio:.3f}")


STUDIES = {"surfaces": surfaces, "euler_steps": euler_steps, "ladder": ladder,
           "step_counts": step_counts, "smoothing": smoothing, "hydro": hydro,
           "sir_forward": sir_forward, "mixing": mixing, "sir": sir}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--only", default=",".join(STUDIES),
                        help="comma-separated subset of: " + ", ".join(STUDIES))
    args = parser.parse_args()
    for name in args.only.split(","):
        out = Path(args.out) / name
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        print(f"{name}:")
        STUDIES[name](out)
        print(f"  ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
