"""Experiment harness: controller comparison, horizon sweep and noise study.

Configuration is one JSON document whose sections mirror the parameter
records (``growth``, ``costs``, ``farm``, ``horizon``, ``simulation``,
``bounds``, ``noise``, ``solver``) plus run settings.  Packaged defaults
are merged under the user document, then environment overrides
``TILAPIA_MPC__<section>__<key>=<json value>`` are applied.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .bounds import ControlBounds
from .costs import CONTROLLERS, CostSettings, make_stage_cost, make_terminal_cost
from .errors import ConfigError
from .growth import ControlInput, GrowthParams, SimConfig
from .metrics import FarmConfig, PerformanceReport, performance_report
from .mpc import (ClosedLoopResult, Controller, HorizonConfig, NoiseConfig, SolverOptions,
                  run_closed_loop)
from .reference import ReferenceTrajectory, generate_nominal_reference, load_reference

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "COLUMNS",
    "default_config_dict",
    "load_config",
    "build_reference",
    "run_controller",
    "run_experiment",
    "horizon_sweep",
    "noise_comparison",
    "write_report_csv",
    "read_report_csv",
]

COLUMNS = ["controller", "noise_db", "horizon", "mse", "n_fish", "final_weight_g", "feed_g",
           "elapsed_s", "revenue", "feed_cost", "heating_cost", "oxygenation_cost", "profit",
           "profit_pct", "fcr"]
TRAJECTORY_COLUMNS = ["t_days", "w_g", "w_ref_g", "f", "T", "DO", "feed_g_day"]
SWEEP_COLUMNS = ["controller", "N", "mse", "feed_g", "elapsed_s"]
DELTA_COLUMNS = ["controller", "seed", "d_mse", "d_final_weight_g", "d_feed_g", "d_profit",
                 "d_profit_pct", "d_fcr"]
ENV_PREFIX = "TILAPIA_MPC__"

_TOP_LEVEL = {"growth", "costs", "farm", "horizon", "simulation", "bounds", "noise", "solver",
              "controllers", "duration", "reference", "nominal_input", "seed", "workers",
              "timing", "sweep", "noise_study", "out_dir"}


@dataclass(frozen=True)
class ExperimentConfig:
    growth: GrowthParams = field(default_factory=GrowthParams)
    costs: CostSettings = field(default_factory=CostSettings)
    farm: FarmConfig = field(default_factory=FarmConfig)
    horizon: HorizonConfig = field(default_factory=HorizonConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    bounds: ControlBounds = field(default_factory=ControlBounds)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    controllers: tuple = CONTROLLERS
    duration: float = 90.0
    reference: str = "nominal"
    nominal_input: ControlInput = ControlInput(0.8, 33.0, 2.0)
    seed: int = 0
    workers: int = 1
    timing: bool = True
    sweep_horizons: tuple = (1, 2, 3, 5, 7, 10)
    sweep_repeats: int = 1
    noise_snr_db: float = 50.0
    noise_seeds: tuple = (0,)
    out_dir: str = "results"

    def __post_init__(self):
        if not self.controllers:
            raise ConfigError("select at least one controller")
        for c in self.controllers:
            if c not in CONTROLLERS:
                raise ConfigError(f"unknown controller {c!r}; expected one of {CONTROLLERS}")
        n = round(self.duration / self.sim.epsilon)
        if self.duration < 0 or not math.isclose(n * self.sim.epsilon, self.duration):
            raise ConfigError("duration must be a whole multiple of epsilon")
        if not math.isclose(self.horizon.epsilon, self.sim.epsilon):
            raise ConfigError("horizon.epsilon and simulation epsilon differ")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.sweep_repeats < 1:
            raise ConfigError("sweep repeats must be >= 1")
        if any(int(N) != N or N < 1 for N in self.sweep_horizons):
            raise ConfigError("sweep horizons must be integers >= 1")
        if not self.noise_snr_db > 0:
            raise ConfigError("noise study snr_db must be > 0")
        if not self.noise_seeds:
            raise ConfigError("noise study needs at least one seed")

    def with_horizon(self, N: int) -> "ExperimentConfig":
        """Same experiment with N = N_o = ``N``."""
        costs = replace(self.costs, terminal=replace(self.costs.terminal, N_o=N))
        return replace(self, horizon=HorizonConfig(N, N, self.horizon.epsilon), costs=costs)


def default_config_dict() -> dict:
    text = resources.files("tilapia_mpc").joinpath("data/default_config.json").read_text()
    return json.loads(text)


def _merge(base: dict, over: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("bounds",):
            out[k] = _merge(out[k], v, f"{path}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _env_overrides(env) -> dict:
    over: dict = {}
    for name, raw in sorted(env.items()):
        if not name.upper().startswith(ENV_PREFIX):
            continue
        keys = [k for k in name[len(ENV_PREFIX):].split("__") if k]
        if not keys:
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = over
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    return over


def _match_case(over: dict, ref: dict) -> dict:
    """Map env-derived keys onto the reference dict's key spelling."""
    out = {}
    lookup = {k.lower(): k for k in ref}
    for k, v in over.items():
        key = lookup.get(k.lower(), k)
        if isinstance(v, dict) and isinstance(ref.get(key), dict):
            v = _match_case(v, ref[key])
        out[key] = v
    return out


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    try:
        growth = GrowthParams.from_dict(data["growth"])
        costs = CostSettings.from_dict(data["costs"])
        farm_d = dict(data["farm"])
        _reject(farm_d, {"n_fish", "w0"}, "farm")
        farm = FarmConfig(int(farm_d["n_fish"]), float(farm_d["w0"]))
        hz = dict(data["horizon"])
        _reject(hz, {"N", "N_o", "epsilon"}, "horizon")
        if "N_o" in hz and int(hz["N_o"]) != costs.terminal.N_o:
            raise ConfigError("horizon.N_o and costs.N_o disagree")
        horizon = HorizonConfig(int(hz["N"]), costs.terminal.N_o, float(hz["epsilon"]))
        simd = dict(data["simulation"])
        _reject(simd, {"substeps", "uia"}, "simulation")
        sim = SimConfig(horizon.epsilon, int(simd["substeps"]), float(simd["uia"]))
        bounds = ControlBounds.from_dict(data["bounds"])
        nz = dict(data["noise"])
        _reject(nz, {"enabled", "snr_db"}, "noise")
        noise = NoiseConfig(float(nz["snr_db"]), int(data["seed"]), bool(nz["enabled"]))
        sol = dict(data["solver"])
        _reject(sol, {"fd_step", "rtol", "gtol", "max_iter"}, "solver")
        solver = SolverOptions(float(sol["fd_step"]), float(sol["rtol"]), float(sol["gtol"]),
                               int(sol["max_iter"]))
        controllers = data["controllers"]
        if isinstance(controllers, str):
            controllers = [c.strip() for c in controllers.split(",") if c.strip()]
        nom = data["nominal_input"]
        sweep = dict(data["sweep"])
        _reject(sweep, {"horizons", "repeats"}, "sweep")
        ns = dict(data["noise_study"])
        _reject(ns, {"snr_db", "seeds"}, "noise_study")
        return ExperimentConfig(
            growth=growth, costs=costs, farm=farm, horizon=horizon, sim=sim, bounds=bounds,
            noise=noise, solver=solver, controllers=tuple(controllers),
            duration=float(data["duration"]), reference=str(data["reference"]),
            nominal_input=ControlInput(float(nom["f"]), float(nom["T"]), float(nom["DO"])),
            seed=int(data["seed"]), workers=int(data["workers"]), timing=bool(data["timing"]),
            sweep_horizons=tuple(int(n) for n in sweep["horizons"]),
            sweep_repeats=int(sweep["repeats"]),
            noise_snr_db=float(ns["snr_db"]), noise_seeds=tuple(int(s) for s in ns["seeds"]),
            out_dir=str(data.get("out_dir", "results")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _reject(d, allowed, section):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} key(s): {sorted(unknown)}")


def load_config(path=None, env=None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the JSON file at ``path``, then env vars, then ``overrides``."""
    data = default_config_dict()
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(user) - _TOP_LEVEL
        if unknown:
            raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
        data = _merge(data, user)
    env = os.environ if env is None else env
    data = _merge(data, _match_case(_env_overrides(env), data))
    if overrides:
        data = _merge(data, overrides)
    return config_from_dict(data)


def build_reference(cfg: ExperimentConfig) -> ReferenceTrajectory:
    if cfg.reference == "nominal":
        return generate_nominal_reference(cfg.farm.w0, cfg.duration, cfg.nominal_input,
                                          cfg.sim, cfg.growth)
    return load_reference(cfg.reference)


def run_controller(cfg: ExperimentConfig, name: str, noise: NoiseConfig | None = None,
                   ref: ReferenceTrajectory | None = None) -> ClosedLoopResult:
    ref = build_reference(cfg) if ref is None else ref
    controller = Controller(name, make_stage_cost(name, cfg.costs, cfg.bounds, cfg.growth),
                            make_terminal_cost(name, cfg.costs))
    return run_closed_loop(cfg.farm.w0, cfg.duration, controller, cfg.bounds,
                           cfg.noise if noise is None else noise, ref, cfg.sim, cfg.growth,
                           cfg.horizon, cfg.solver)


def _task(args):
    cfg, name, noise, ref = args
    run = run_controller(cfg, name, noise, ref)
    report = performance_report(run, cfg.farm, cfg.costs.economic, cfg.horizon.N,
                                noise.snr_db if noise.enabled else None,
                                elapsed=None if cfg.timing else 0.0)
    return run, report


def _map(cfg: ExperimentConfig, tasks):
    """Run tasks in order, in a process pool when ``workers > 1``."""
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_task, tasks))
    return [_task(t) for t in tasks]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_report_csv(path, reports, extra_columns=()) -> None:
    rows = []
    for item in reports:
        if isinstance(item, PerformanceReport):
            rows.append(item.as_row())
        else:
            extra, rep = item
            rows.append({**extra, **rep.as_row()})
    _atomic_write(Path(path), _csv_text(list(extra_columns) + COLUMNS, rows))


_INT_COLUMNS = {"horizon", "n_fish", "seed", "N"}
_STR_COLUMNS = {"controller"}


def _parse(col, text):
    if col in _STR_COLUMNS:
        return text
    if text == "":
        return None
    if col in _INT_COLUMNS:
        return int(text)
    return float(text)


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: _parse(k, v) for k, v in row.items()} for row in csv.DictReader(fh)]


def read_report_csv(path) -> list[PerformanceReport]:
    return [PerformanceReport.from_row(row) for row in read_csv_rows(path)]


def _trajectory_text(run: ClosedLoopResult) -> str:
    rows = []
    n = len(run.applied_controls)
    for k, s in enumerate(run.states):
        u = run.applied_controls[k] if k < n else None
        rows.append({
            "t_days": s.t,
            "w_g": s.w,
            "w_ref_g": run.reference(s.t),
            "f": None if u is None else u.f,
            "T": None if u is None else u.T,
            "DO": None if u is None else u.DO,
            "feed_g_day": None if u is None else float(run.per_step_feed[k]),
        })
    return _csv_text(TRAJECTORY_COLUMNS, rows)


def _config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "growth": cfg.growth.to_dict(),
        "costs": cfg.costs.to_dict(),
        "farm": {"n_fish": cfg.farm.n_fish, "w0": cfg.farm.w0},
        "horizon": {"N": cfg.horizon.N, "N_o": cfg.horizon.N_o, "epsilon": cfg.horizon.epsilon},
        "simulation": {"substeps": cfg.sim.substeps, "uia": cfg.sim.uia},
        "bounds": cfg.bounds.to_dict(),
        "noise": {"enabled": cfg.noise.enabled, "snr_db": cfg.noise.snr_db},
        "controllers": list(cfg.controllers),
        "duration": cfg.duration,
        "reference": cfg.reference,
        "seed": cfg.seed,
    }


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> list[PerformanceReport]:
    """Run every selected controller once and write the comparison artifacts.

    Writes ``comparison.csv``, ``trajectory_<controller>.csv`` and
    ``report.json`` into ``out_dir`` (default ``cfg.out_dir``).
    """
    out = Path(cfg.out_dir if out_dir is None else out_dir)
    ref = build_reference(cfg)
    noise = replace(cfg.noise, seed=cfg.seed)
    results = _map(cfg, [(cfg, name, noise, ref) for name in sorted(cfg.controllers)])
    reports = [rep for _, rep in results]
    for run, _ in results:
        _atomic_write(out / f"trajectory_{run.controller}.csv", _trajectory_text(run))
    write_report_csv(out / "comparison.csv", reports)
    payload = {"config": _config_echo(cfg), "runs": [r.as_row() for r in reports]}
    _atomic_write(out / "report.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for r in reports:
        log.info("%s: mse=%.4g final=%.2f g feed=%.2f g profit%%=%s", r.controller,
                 r.tracking_mse, r.final_weight, r.total_feed, r.ledger.profit_percentage)
    return reports


def horizon_sweep(cfg: ExperimentConfig, horizons=None, repeats=None, out_dir=None) -> list[dict]:
    """Every controller at every horizon N (with N_o = N); writes ``sweep.csv``.

    ``elapsed_s`` is the median summed solver time over ``repeats`` runs.
    """
    horizons = tuple(cfg.sweep_horizons if horizons is None else horizons)
    repeats = cfg.sweep_repeats if repeats is None else repeats
    if not horizons or any(int(N) != N or N < 1 for N in horizons):
        raise ConfigError("horizons must be integers >= 1")
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    ref = build_reference(cfg)
    noise = replace(cfg.noise, seed=cfg.seed)
    tasks, keys = [], []
    for name in sorted(cfg.controllers):
        for N in horizons:
            for _ in range(repeats):
                tasks.append((cfg.with_horizon(int(N)), name, noise, ref))
                keys.append((name, int(N)))
    results = _map(cfg, tasks)
    rows = []
    grouped: dict = {}
    for key, (_, rep) in zip(keys, results):
        grouped.setdefault(key, []).append(rep)
    for (name, N), reps in grouped.items():
        rows.append({
            "controller": name,
            "N": N,
            "mse": reps[0].tracking_mse,
            "feed_g": reps[0].total_feed,
            "elapsed_s": statistics.median(r.elapsed for r in reps),
        })
    out = Path(cfg.out_dir if out_dir is None else out_dir)
    _atomic_write(out / "sweep.csv", _csv_text(SWEEP_COLUMNS, rows))
    return rows


def noise_comparison(cfg: ExperimentConfig, snr_db=None, seeds=None,
                     out_dir=None) -> tuple[list[dict], list[dict]]:
    """Each controller with and without actuator noise for each seed.

    Writes ``noise.csv`` (paired rows) and ``noise_deltas.csv`` (noisy minus
    noise-free, per controller and seed).
    """
    snr_db = cfg.noise_snr_db if snr_db is None else float(snr_db)
    seeds = tuple(cfg.noise_seeds if seeds is None else seeds)
    if not snr_db > 0:
        raise ConfigError("snr_db must be > 0")
    if not seeds:
        raise ConfigError("need at least one seed")
    ref = build_reference(cfg)
    names = sorted(cfg.controllers)
    quiet = NoiseConfig(snr_db, 0, False)
    tasks = [(cfg, n, quiet, ref) for n in names]
    tasks += [(cfg, n, NoiseConfig(snr_db, int(s), True), ref) for n in names for s in seeds]
    results = _map(cfg, tasks)
    clean = {n: results[i][1] for i, n in enumerate(names)}
    noisy = results[len(names):]

    rows, deltas = [], []
    i = 0
    for n in names:
        for s in seeds:
            rep = noisy[i][1]
            i += 1
            rows.append({"seed": int(s), **clean[n].as_row()})
            rows.append({"seed": int(s), **rep.as_row()})
            c = clean[n]
            deltas.append({
                "controller": n,
                "seed": int(s),
                "d_mse": rep.tracking_mse - c.tracking_mse,
                "d_final_weight_g": rep.final_weight - c.final_weight,
                "d_feed_g": rep.total_feed - c.total_feed,
                "d_profit": rep.ledger.profit - c.ledger.profit,
                "d_profit_pct": _diff(rep.ledger.profit_percentage, c.ledger.profit_percentage),
                "d_fcr": _diff(rep.fcr, c.fcr),
            })
    out = Path(cfg.out_dir if out_dir is None else out_dir)
    _atomic_write(out / "noise.csv", _csv_text(["seed"] + COLUMNS, rows))
    _atomic_write(out / "noise_deltas.csv", _csv_text(DELTA_COLUMNS, deltas))
    return rows, deltas


def _diff(a, b):
    return None if a is None or b is None else a - b
