"""Regenerate the bundled data files in src/odeinfer/data.

germany_cases.csv
    Daily reported cases for Germany, 2 Mar to 21 Apr 2020, as differences of
    a cumulative confirmed-case series (JHU CSSE vintage, transcribed offline).
    Approximate: later revisions of the source differ by a few percent.
streamflow.csv, hydro_reference.json
    Synthetic 200-day record.  Rain falls on ~35% of days with exponential
    depths (mean 9 mm), evaporation follows a seasonal cosine, and flow is the
    model output at the reference parameters (RK54, rtol=atol=1e-10) plus
    Gaussian noise with sd 0.1 mm/day, clipped at zero.
"""
from __future__ import annotations

import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from odeinfer.io import write_csv
from odeinfer.models.hydro import PARAM_NAMES, HydroForcing, hydro_system, streamflow
from odeinfer.problems import SolverConfig, solve

DATA = Path(__file__).resolve().parents[1] / "src" / "odeinfer" / "data"

GERMANY_CUMULATIVE = [  # 1 Mar .. 21 Apr 2020
    130, 159, 196, 262, 482, 670, 799, 1040, 1176, 1457,
    1908, 2078, 3675, 4585, 5795, 7272, 9257, 12327, 15320, 19848,
    22213, 24873, 29056, 32986, 37323, 43938, 50871, 57695, 62095, 66885,
    71808, 77872, 84794, 91159, 96092, 100123, 103374, 107663, 113296, 118181,
    122171, 124908, 127854, 130072, 131359, 134753, 137698, 141397, 143342, 145184,
    147065, 148291,
]

HYDRO_PARAMS = {"I_max": 3.0, "S_u_max": 250.0, "Q_s_max": 4.0, "alpha_e": 4.0,
                "alpha_f": 2.0, "K_s": 60.0, "K_f": 3.0}
HYDRO_SIGMA = 0.1
HYDRO_DAYS = 200
HYDRO_SEED = 20240601


def write_germany():
    cum = np.array(GERMANY_CUMULATIVE)
    daily = np.diff(cum)
    start = date(2020, 3, 2)
    rows = [((start + timedelta(days=i)).isoformat(), int(c)) for i, c in enumerate(daily)]
    write_csv(DATA / "germany_cases.csv", ["date", "cases"], rows)


def hydro_forcing(rng):
    days = np.arange(HYDRO_DAYS)
    wet = rng.random(HYDRO_DAYS) < 0.35
    precip = np.where(wet, rng.exponential(9.0, HYDRO_DAYS), 0.0)
    evap = 1.0 + 1.5 * (1 - np.cos(2 * np.pi * days / 365.0))
    return HydroForcing(np.round(precip, 2), np.round(evap, 3))


def write_hydro():
    rng = np.random.default_rng(HYDRO_SEED)
    forcing = hydro_forcing(rng)
    theta = np.array([HYDRO_PARAMS[n] for n in PARAM_NAMES])
    system = hydro_system(forcing)
    times = np.arange(1, HYDRO_DAYS + 1, dtype=float)
    traj = solve(system, theta, SolverConfig.rk54(1e-10, atol=1e-10), float(times[-1]))
    flow = streamflow(traj.sample(times), theta)
    noisy = np.maximum(flow + HYDRO_SIGMA * rng.standard_normal(HYDRO_DAYS), 0.0)
    start = date(1960, 1, 1)
    rows = [((start + timedelta(days=i)).isoformat(), float(np.round(q, 6)),
             float(p), float(e)) for i, (q, p, e) in enumerate(zip(noisy, forcing.precip, forcing.evap))]
    write_csv(DATA / "streamflow.csv", ["date", "flow", "precip", "evap"], rows)
    ref = {
        "params": HYDRO_PARAMS,
        "sigma": HYDRO_SIGMA,
        "alpha_s": 0.0,
        "alpha_i": 50.0,
        "note": "synthetic record; flow generated at these parameters",
    }
    (DATA / "hydro_reference.json").write_text(json.dumps(ref, indent=2) + "\n")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    write_germany()
    write_hydro()
    print(f"wrote fixtures to {DATA}")
