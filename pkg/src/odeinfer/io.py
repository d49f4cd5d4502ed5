"""Configuration files, CSV ingestion and result serialization.

Configs are INI files (``key = value`` under ``[section]`` headers).  Every
key has a typed default in :data:`SCHEMA`; unknown sections or keys are
rejected with the offending line number.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .models.hydro import HydroForcing

MODELS = ("oscillator", "sir_changepoint", "hydro")
TASKS = ("simulate", "scan", "mcmc", "diagnose", "bound")
SURFACE_HEADER = ("param_value", "log_likelihood", "n_steps", "flag")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_str(text: str):
    return None if text.strip().lower() in ("", "none") else text.strip()


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none") else int(text)


# section -> key -> (parser, default); None defaults mean "model-dependent".
SCHEMA = {
    "experiment": {
        "model": (str, "oscillator"),
        "task": (str, "scan"),
        "seed": (int, 0),
    },
    "solver": {
        "kind": (str, "rk54"),
        "dt": (_opt_float, None),
        "rtol": (float, 1e-3),
        "atol": (float, 1e-9),
        "max_steps": (int, 100000),
    },
    "data": {
        "source": (str, "synthetic"),
        "true_theta": (_floats, (1.0, 0.2, 1.0)),
        "sigma": (_opt_float, None),
        "n_points": (int, 75),
        "t_end": (float, 50.0),
        "noise_seed": (int, 1),
        "forcing": (str, "step"),
        "f1": (float, -1.0),
        "t_change": (float, 25.0),
        "smoothing": (float, 0.0),
        "lead_days": (int, 16),
    },
    "model": {
        "theta": (_floats, ()),
    },
    "simulate": {
        "n_out": (int, 201),
        "dts": (_floats, (1.0, 0.1)),
        "horizon": (_opt_int, None),
    },
    "scan": {
        "param": (_opt_str, None),
        "lo": (_opt_float, None),
        "hi": (_opt_float, None),
        "n_points": (int, 500),
        "jump_threshold": (float, 10.0),
    },
    "mcmc": {
        "n_chains": (int, 3),
        "n_iters": (int, 1500),
        "burn_in": (_opt_int, None),
        "adaptation_start": (int, 200),
        "infer_sigma": (_bool, True),
    },
    "diagnose": {
        "perturbation": (float, 0.1),
        "threshold": (_opt_float, None),
    },
    "bound": {
        "reference_rtol": (float, 1e-12),
        "param": (_opt_str, None),
        "lo": (_opt_float, None),
        "hi": (_opt_float, None),
        "n_samples": (int, 200),
        "n_redraws": (int, 0),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration: ``values[section][key]`` with every default filled in."""

    values: dict
    path: str | None = None

    def __getitem__(self, section):
        return self.values[section]

    @property
    def model(self) -> str:
        return self.values["experiment"]["model"]

    @property
    def task(self) -> str:
        return self.values["experiment"]["task"]

    @property
    def seed(self) -> int:
        return self.values["experiment"]["seed"]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        values = {s: dict(v) for s, v in self.values.items()}
        values["experiment"]["seed"] = int(seed)
        return ExperimentConfig(values, self.path)

    def with_task(self, task: str) -> "ExperimentConfig":
        if task not in TASKS:
            raise ConfigError(f"unknown task {task!r}")
        values = {s: dict(v) for s, v in self.values.items()}
        values["experiment"]["task"] = task
        return ExperimentConfig(values, self.path)

    def to_ini(self) -> str:
        lines = []
        for section, entries in self.values.items():
            lines.append(f"[{section}]")
            for key, val in entries.items():
                lines.append(f"{key} = {_format_value(val)}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()


def _format_value(val) -> str:
    if val is None:
        return "none"
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ", ".join(repr(float(v)) for v in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _line_of(text: str, section: str, key: str | None = None) -> int:
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return n
        elif key is not None and current == section:
            name = line.split("=", 1)[0].split(":", 1)[0].strip().lower()
            if name == key:
                return n
    return 0


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    where = path or "<config>"
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=where)
    except configparser.Error as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{where}:{_line_of(text, section)}: unknown section [{section}]")
        for key, raw in parser.items(section):
            line = _line_of(text, section, key)
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where}:{line}: unknown key '{key}' in [{section}]")
            conv = SCHEMA[section][key][0]
            try:
                values[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{where}:{line}: bad value for '{key}': {exc}") from exc
    cfg = ExperimentConfig(values, path)
    _validate(cfg, text, where)
    return cfg


def _validate(cfg: ExperimentConfig, text: str, where: str) -> None:
    def fail(section, key, msg):
        raise ConfigError(f"{where}:{_line_of(text, section, key)}: {section}.{key} {msg}")

    if cfg.model not in MODELS:
        fail("experiment", "model", f"must be one of {MODELS}")
    if cfg.task not in TASKS:
        fail("experiment", "task", f"must be one of {TASKS}")
    if not 0 <= cfg.seed < 2**64:
        fail("experiment", "seed", "must be an unsigned 64-bit integer")
    sol = cfg["solver"]
    if sol["kind"] not in ("euler", "rk54", "rk32"):
        fail("solver", "kind", "must be euler, rk54 or rk32")
    if sol["kind"] == "euler" and (sol["dt"] is None or sol["dt"] <= 0):
        fail("solver", "dt", "must be > 0 for the euler solver")
    if sol["dt"] is not None and sol["dt"] <= 0:
        fail("solver", "dt", "must be > 0")
    for key in ("rtol", "atol", "max_steps"):
        if not sol[key] > 0:
            fail("solver", key, "must be > 0")
    data = cfg["data"]
    if data["source"] not in ("synthetic", "bundled"):
        src = Path(data["source"])
        if cfg.path is not None and not src.is_absolute():
            src = Path(cfg.path).parent / src
        if not src.exists():
            fail("data", "source", f"file not found: {src}")
        data["source"] = str(src)
    if data["sigma"] is not None and not data["sigma"] > 0:
        fail("data", "sigma", "must be > 0")
    if data["n_points"] < 2 or not data["t_end"] > 0:
        fail("data", "n_points", "and t_end must describe at least two times after t=0")
    if data["forcing"] not in ("constant", "step"):
        fail("data", "forcing", "must be constant or step")
    if data["smoothing"] < 0:
        fail("data", "smoothing", "must be >= 0")
    for section in ("scan", "bound"):
        lo, hi = cfg[section]["lo"], cfg[section]["hi"]
        if lo is not None and hi is not None and not hi > lo:
            fail(section, "hi", "must exceed lo")
    scan = cfg["scan"]
    if scan["n_points"] < 2:
        fail("scan", "n_points", "must be >= 2")
    mc = cfg["mcmc"]
    if mc["n_chains"] < 1 or mc["n_iters"] < 1 or mc["adaptation_start"] < 1:
        fail("mcmc", "n_iters", "n_chains, n_iters and adaptation_start must be positive")
    if mc["burn_in"] is not None and not 0 <= mc["burn_in"] < mc["n_iters"]:
        fail("mcmc", "burn_in", "must lie in [0, n_iters)")
    if not cfg["diagnose"]["perturbation"] > 0:
        fail("diagnose", "perturbation", "must be > 0")
    if not cfg["bound"]["reference_rtol"] > 0:
        fail("bound", "reference_rtol", "must be > 0")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


# ---------------------------------------------------------------- CSV input

@dataclass(frozen=True)
class CaseSeries:
    dates: tuple
    cases: np.ndarray

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class StreamflowSeries:
    dates: tuple
    flow: np.ndarray
    forcing: HydroForcing

    def __len__(self):
        return len(self.dates)


def _read_rows(path, header: tuple) -> list:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows or tuple(c.strip() for c in rows[0]) != header:
        raise DataError(f"{path}: expected header {','.join(header)}")
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise DataError(f"{path}: row {i} has {len(r)} fields, expected {len(header)}")
    return body


def _parse_dates(path, column) -> tuple:
    dates = []
    for i, text in enumerate(column):
        try:
            dates.append(date.fromisoformat(text.strip()))
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: bad date {text!r}") from exc
    for i in range(1, len(dates)):
        if dates[i] != dates[i - 1] + timedelta(days=1):
            missing = dates[i - 1] + timedelta(days=1)
            raise DataError(f"{path}: row {i}: gap in dates, expected {missing.isoformat()} "
                            f"but found {dates[i].isoformat()}")
    return tuple(d.isoformat() for d in dates)


def _parse_numbers(path, column, name, integer=False) -> np.ndarray:
    out = []
    for i, text in enumerate(column):
        try:
            v = int(text) if integer else float(text)
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: bad {name} value {text!r}") from exc
        if not np.isfinite(v) or v < 0:
            raise DataError(f"{path}: row {i}: {name} must be a nonnegative number, got {text!r}")
        out.append(v)
    return np.array(out, dtype=np.int64 if integer else float)


def load_case_csv(path) -> CaseSeries:
    """Daily counts from a ``date,cases`` CSV with consecutive ISO dates."""
    rows = _read_rows(path, ("date", "cases"))
    dates = _parse_dates(path, [r[0] for r in rows])
    return CaseSeries(dates, _parse_numbers(path, [r[1].strip() for r in rows], "cases", integer=True))


def load_streamflow_csv(path) -> StreamflowSeries:
    """Daily ``date,flow,precip,evap`` records."""
    rows = _read_rows(path, ("date", "flow", "precip", "evap"))
    dates = _parse_dates(path, [r[0] for r in rows])
    flow = _parse_numbers(path, [r[1] for r in rows], "flow")
    precip = _parse_numbers(path, [r[2] for r in rows], "precip")
    evap = _parse_numbers(path, [r[3] for r in rows], "evap")
    return StreamflowSeries(dates, flow, HydroForcing(precip, evap))


# --------------------------------------------------------------- CSV output

def format_float(v) -> str:
    """Shortest round-trip text for a double; infinities as ``inf``/``-inf``."""
    v = float(v)
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    return repr(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def emit_surface(surface, path) -> None:
    rows = ((float(g), float(ll), int(n), "failed" if f else "ok")
            for g, ll, n, f in zip(surface.grid, surface.ll, surface.n_steps, surface.failed))
    write_csv(path, SURFACE_HEADER, rows)


def load_surface(path, param_index: int = 0, solver_tag: str = ""):
    from .surface import LikelihoodSurface
    rows = _read_rows(path, SURFACE_HEADER)
    return LikelihoodSurface(
        param_index=param_index,
        solver_tag=solver_tag,
        grid=[float(r[0]) for r in rows],
        ll=[float(r[1]) for r in rows],
        n_steps=[int(r[2]) for r in rows],
        failed=[r[3] == "failed" for r in rows],
    )


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _json_float(v):
    v = float(v)
    return v if np.isfinite(v) else str(v)


def emit_chains(chains, out_dir, manifest_extra: dict | None = None) -> list:
    """One ``chain_<i>.csv`` per chain plus ``manifest.json``; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(chains.param_names) or [f"p{j}" for j in range(chains.chains.shape[2])]
    written = []
    for c in range(chains.n_chains):
        path = out_dir / f"chain_{c}.csv"
        rows = ([i, *map(float, chains.chains[c, i]), float(chains.log_posts[c, i])]
                for i in range(chains.n_iters))
        write_csv(path, ["iter", *names, "log_post"], rows)
        written.append(path)
    rhat = chains.r_hat() if chains.n_chains >= 2 and chains.n_iters - chains.burn_in >= 4 else None
    manifest = {
        "seed": int(chains.seed),
        "n_chains": chains.n_chains,
        "n_iters": chains.n_iters,
        "burn_in": chains.burn_in,
        "param_names": names,
        "accept_rate": [float(a) for a in chains.accept_rate],
        "r_hat": None if rhat is None else {n: _json_float(r) for n, r in zip(names, rhat)},
    }
    manifest.update(manifest_extra or {})
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    written.append(path)
    return written


def load_chain_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return header, data
