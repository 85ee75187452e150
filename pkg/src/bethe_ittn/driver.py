"""Run orchestration: single points, field sweeps, Trotter studies, file IO.

Output contract: the CSV schema (column order included) is frozen in
`records.CSV_COLUMNS`, floats are written with 17 significant digits, and a
run with a fixed config (seed included) reproduces its CSV byte for byte.
Wall-clock times therefore stay out of the CSV unless explicitly requested
(`record_timing`); the JSON summary, which is not under the byte-identity
contract, always carries the real timing.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import math
import time

import numpy as np

from . import __version__
from .analysis import estimate_hc, fit_beta
from .evolution import EvolutionError, Schedule, evolve
from .environment import ConvergenceError
from .records import CSV_COLUMNS, ResultRecord, validate_record
from .state import ITTNState, embed_pad, init_product

__all__ = [
    "RunConfig",
    "ConfigError",
    "load_config",
    "run_point",
    "run_sweep",
    "convergence_study",
    "write_records_csv",
    "read_records_csv",
    "write_long_csv",
]


class ConfigError(ValueError):
    """Bad or inconsistent run configuration."""


@dataclasses.dataclass
class RunConfig:
    """Everything that determines a run; equal configs give equal outputs."""

    q: int = 3
    J: float = 1.0
    h: float | None = None  # single-point field
    h_min: float | None = None  # sweep grid
    h_max: float | None = None
    h_steps: int | None = None
    D: int = 8
    T_max: float = 12.0
    schedule_c: float = 2.0  # N = ceil(c T^2) when schedule_n is unset
    schedule_n: int | None = None
    env_tol: float = 1e-12
    env_max_iter: int = 10000
    tol_obs: float = 1e-8
    stop_window: int = 20
    record_stride: int = 1
    theta0: float = math.pi / 2.0  # x-polarized seed breaks the Z2 symmetry
    init_noise: float = 0.0  # pad the seed to full D with this noise amplitude
    seed: int = 0
    warm_start: bool = False  # start each sweep point from the previous state
    descending: bool = False  # sweep direction (records stay in ascending order)
    threshold: float = 1e-2  # |m_x| crossing level for the h_c estimate
    record_spectrum: bool = True
    record_timing: bool = False
    workers: int = 1
    out_csv: str | None = None
    out_json: str | None = None

    def validate(self) -> None:
        if self.q < 2:
            raise ConfigError(f"q must be >= 2, got {self.q}")
        if self.D < 1:
            raise ConfigError(f"D must be >= 1, got {self.D}")
        if self.T_max <= 0:
            raise ConfigError("T_max must be positive")
        for name in ("env_tol", "threshold"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.tol_obs < 0:
            raise ConfigError("tol_obs must be >= 0 (0 disables early stopping)")
        if self.schedule_n is None and self.schedule_c <= 0:
            raise ConfigError("schedule_c must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def validate_sweep(self) -> None:
        self.validate()
        if self.h_min is None or self.h_max is None or self.h_steps is None:
            raise ConfigError("sweep needs h_min, h_max and h_steps")
        if not self.h_min < self.h_max:
            raise ConfigError("h_min must be < h_max")
        if self.h_steps < 2:
            raise ConfigError("h_steps must be >= 2")

    def schedule(self) -> Schedule:
        if self.schedule_n is not None:
            return Schedule(n_steps=self.schedule_n)
        return Schedule(coefficient=self.schedule_c)

    def grid(self) -> np.ndarray:
        return np.linspace(self.h_min, self.h_max, self.h_steps)


def load_config(path) -> dict:
    """Read a JSON key-value config file; keys must be RunConfig fields."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def _initial_state(cfg: RunConfig) -> ITTNState:
    state = init_product(cfg.q, cfg.theta0)
    if cfg.init_noise > 0:
        state = embed_pad(state, cfg.D, noise=cfg.init_noise, seed=cfg.seed)
    return state


def _evolve_point(cfg: RunConfig, h: float, state0: ITTNState | None):
    """Evolve one field value; returns (final record, final state)."""
    state = _initial_state(cfg) if state0 is None else state0
    t0 = time.perf_counter()
    state, traj = evolve(
        state,
        J=cfg.J,
        h=h,
        T=cfg.T_max,
        D=cfg.D,
        schedule=cfg.schedule(),
        tol_obs=cfg.tol_obs,
        stop_window=cfg.stop_window,
        record_stride=cfg.record_stride,
        env_tol=cfg.env_tol,
        env_max_iter=cfg.env_max_iter,
        record_spectrum=cfg.record_spectrum,
    )
    elapsed = time.perf_counter() - t0
    rec = traj[-1]
    rec.wall_time_seconds = elapsed if cfg.record_timing else 0.0
    validate_record(rec)
    return rec, state


def run_point(cfg: RunConfig) -> ResultRecord:
    """Evolve the configured single field value to convergence or T_max."""
    cfg.validate()
    if cfg.h is None:
        raise ConfigError("run_point needs cfg.h")
    rec, _ = _evolve_point(cfg, cfg.h, None)
    return rec


def _failed_record(cfg: RunConfig, h: float, steps: int) -> ResultRecord:
    nan = float("nan")
    return ResultRecord(
        h=h, D=cfg.D, q=cfg.q, m_x=nan, m_z=nan, energy_per_site=nan,
        lambda2_over_lambda1=nan, xi=nan, discarded_weight_max=nan,
        steps_used=steps, wall_time_seconds=0.0,
    )


def _sweep_worker(args):
    cfg, h = args
    try:
        rec, _ = _evolve_point(cfg, h, None)
        return h, rec, None
    except (EvolutionError, ConvergenceError, ValueError) as exc:
        step = getattr(exc, "step", 0)
        return h, _failed_record(cfg, h, step), f"h={h:g}: {exc}"


def run_sweep(cfg: RunConfig):
    """Evaluate the field grid; returns (records ascending in h, summary dict).

    Failed points land in the output as rows of NaN observables (the sweep
    continues) and are listed in the summary.  With `warm_start` each point
    starts from the previous point's converged state, in sweep direction;
    this is a deliberate, recorded choice since it imprints hysteresis near
    the transition.  `workers > 1` evaluates cold-start points in a process
    pool; rows are written in ascending h order regardless.
    """
    cfg.validate_sweep()
    t0 = time.perf_counter()
    grid = cfg.grid()
    order = grid[::-1] if cfg.descending else grid
    results: dict[float, ResultRecord] = {}
    errors: list[str] = []

    if cfg.warm_start:
        state: ITTNState | None = None
        for h in order:
            try:
                rec, state = _evolve_point(cfg, float(h), state)
            except (EvolutionError, ConvergenceError, ValueError) as exc:
                rec = _failed_record(cfg, float(h), getattr(exc, "step", 0))
                errors.append(f"h={h:g}: {exc}")
                state = None  # fall back to a cold start at the next point
            results[float(h)] = rec
    elif cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for h, rec, err in pool.map(_sweep_worker, [(cfg, float(h)) for h in order]):
                results[h] = rec
                if err is not None:
                    errors.append(err)
    else:
        for h in order:
            h, rec, err = _sweep_worker((cfg, float(h)))
            results[h] = rec
            if err is not None:
                errors.append(err)

    records = [results[float(h)] for h in grid]
    hs = [r.h for r in records]
    mxs = [0.0 if math.isnan(r.m_x) else r.m_x for r in records]
    h_c = estimate_hc(hs, mxs, threshold=cfg.threshold)

    beta_fit = None
    if h_c is not None:
        try:
            fit = fit_beta(hs, mxs, h_c)
            beta_fit = dataclasses.asdict(fit)
        except ValueError:
            pass

    summary = {
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "h_c": h_c,
        "threshold": cfg.threshold,
        "warm_start": cfg.warm_start,
        "descending": cfg.descending,
        "abs_m_x": [abs(m) for m in mxs],
        "beta_fit": beta_fit,
        "n_points": len(records),
        "n_failed": len(errors),
        "errors": errors,
        "wall_time_seconds_total": time.perf_counter() - t0,
    }
    if cfg.out_csv:
        write_records_csv(cfg.out_csv, records)
    if cfg.out_json:
        with open(cfg.out_json, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return records, summary


def convergence_study(cfg: RunConfig, T_fixed: float, n_list):
    """m_x along the imaginary-time axis for several step counts at fixed T.

    Early stopping is disabled so every run takes exactly N steps; the rows
    come back in long format (one per recorded step) for overlay plots and
    Richardson ratio checks of the Trotter order.
    """
    cfg.validate()
    if cfg.h is None:
        raise ConfigError("convergence_study needs cfg.h")
    if T_fixed <= 0:
        raise ConfigError("T_fixed must be positive")
    n_list = [int(n) for n in n_list]
    if sorted(n_list) != n_list or len(n_list) < 1:
        raise ConfigError("n_list must be ascending")
    rows = []
    finals = {}
    for n in n_list:
        state = _initial_state(cfg)
        state, traj = evolve(
            state,
            J=cfg.J,
            h=cfg.h,
            T=T_fixed,
            D=cfg.D,
            schedule=Schedule(n_steps=n),
            tol_obs=0.0,
            record_stride=cfg.record_stride,
            env_tol=cfg.env_tol,
            env_max_iter=cfg.env_max_iter,
            record_spectrum=False,
        )
        dt = T_fixed / n
        for rec in traj:
            rows.append({"N": n, "step": rec.steps_used, "tau": rec.steps_used * dt, "m_x": rec.m_x})
        finals[n] = traj[-1].m_x
    return rows, finals


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_records_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(v) for v in rec.as_row()])


def read_records_csv(path) -> list[ResultRecord]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV columns {reader.fieldnames}")
        for row in reader:
            out.append(
                ResultRecord(
                    h=float(row["h"]), D=int(row["D"]), q=int(row["q"]),
                    m_x=float(row["m_x"]), m_z=float(row["m_z"]),
                    energy_per_site=float(row["energy_per_site"]),
                    lambda2_over_lambda1=float(row["lambda2_over_lambda1"]),
                    xi=float(row["xi"]),
                    discarded_weight_max=float(row["discarded_weight_max"]),
                    steps_used=int(row["steps_used"]),
                    wall_time_seconds=float(row["wall_time_seconds"]),
                )
            )
    return out


def write_long_csv(path, rows) -> None:
    """Long-format trajectory table for convergence studies."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "step", "tau", "m_x"])
        for row in rows:
            writer.writerow([str(row["N"]), str(row["step"]), _fmt(row["tau"]), _fmt(row["m_x"])])
