"""Command-line entry points.

Exit codes: 0 success, 1 bad configuration or arguments, 2 numerical
failure, 3 sweep finished but with failed grid points.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .analysis import derivative_table, estimate_hc, fit_beta, trotter_ratio
from .canonical import load_canonical, verify_canonical
from .driver import (
    ConfigError,
    RunConfig,
    convergence_study,
    load_config,
    read_records_csv,
    run_point,
    run_sweep,
    write_long_csv,
    write_records_csv,
)
from .environment import ConvergenceError
from .evolution import EvolutionError
from .records import CSV_COLUMNS
from .selftest import run_selftest

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    # route argparse failures through the config-error exit code
    def error(self, message):
        raise ConfigError(message)


_CONFIG_FLOATS = [
    ("J", "coupling strength"),
    ("h", "transverse field (single point)"),
    ("h_min", "sweep grid start"),
    ("h_max", "sweep grid end"),
    ("T_max", "total imaginary time"),
    ("schedule_c", "steps per unit time squared"),
    ("env_tol", "environment fixed-point tolerance"),
    ("tol_obs", "observable plateau tolerance (0 disables early stop)"),
    ("theta0", "initial product-state angle"),
    ("init_noise", "noise amplitude when padding the seed to full D"),
    ("threshold", "|m_x| crossing level for the h_c estimate"),
]
_CONFIG_INTS = [
    ("q", "lattice coordination number"),
    ("h_steps", "number of sweep grid points"),
    ("D", "bond dimension cap"),
    ("schedule_n", "explicit step count (overrides schedule_c)"),
    ("env_max_iter", "power-iteration cap"),
    ("stop_window", "plateau window length in records"),
    ("record_stride", "record every this many steps"),
    ("seed", "RNG seed"),
    ("workers", "parallel worker processes for cold-start sweeps"),
]
_CONFIG_FLAGS = [
    ("warm_start", "seed each sweep point from the previous state"),
    ("descending", "sweep the grid from high field to low"),
    ("record_spectrum", "include transfer-spectrum columns"),
    ("record_timing", "write real wall times into the CSV (breaks byte identity)"),
]


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON file with RunConfig fields")
    for name, doc in _CONFIG_FLOATS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, help=doc)
    for name, doc in _CONFIG_INTS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, help=doc)
    for name, doc in _CONFIG_FLAGS:
        p.add_argument(
            f"--{name.replace('_', '-')}",
            dest=name,
            action=argparse.BooleanOptionalAction,
            default=None,
            help=doc,
        )
    p.add_argument("--out-csv", dest="out_csv", metavar="FILE", help="results table path")
    p.add_argument("--out-json", dest="out_json", metavar="FILE", help="summary path")


def _build_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for field in dataclasses.fields(RunConfig):
        given = getattr(args, field.name, None)
        if given is not None:
            values[field.name] = given
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bethe-ittn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("point", parents=[], help="evolve a single field value")
    _add_config_args(p)
    p.set_defaults(func=_cmd_point)

    p = sub.add_parser("sweep", help="evolve a field grid and estimate h_c")
    _add_config_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("derivatives", help="finite-difference table from a sweep CSV")
    p.add_argument("--in-csv", required=True, help="sweep results table")
    p.add_argument("--column", default="energy_per_site", choices=["energy_per_site", "m_x", "m_z"])
    p.add_argument("--out-csv", help="write h, value, derivative rows here")
    p.set_defaults(func=_cmd_derivatives)

    p = sub.add_parser("fit-beta", help="critical-exponent fit from a sweep CSV")
    p.add_argument("--in-csv", required=True, help="sweep results table")
    p.add_argument("--h-c", dest="h_c", type=float, help="critical field (default: estimate)")
    p.add_argument("--threshold", type=float, default=1e-2, help="|m_x| crossing level")
    p.add_argument("--window-lo", dest="window_lo", type=float, help="fit window lower edge")
    p.add_argument("--window-hi", dest="window_hi", type=float, help="fit window upper edge")
    p.set_defaults(func=_cmd_fit_beta)

    p = sub.add_parser("trotter-study", help="fixed-T step-count convergence study")
    _add_config_args(p)
    p.add_argument("--T", dest="T_fixed", type=float, required=True, help="fixed total time")
    p.add_argument("--n-list", required=True, help="comma-separated step counts, ascending")
    p.set_defaults(func=_cmd_trotter)

    p = sub.add_parser("verify-canonical", help="check norm and isometry defects of a stored state")
    p.add_argument("--in", dest="path", required=True, help="canonical state file")
    p.add_argument("--tol", type=float, default=1e-8, help="defect tolerance")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("selftest", help="run the built-in oracle cross-checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_selftest)

    return parser


def _print_record(rec) -> None:
    for name, value in zip(CSV_COLUMNS, rec.as_row()):
        print(f"{name} = {value}")


def _cmd_point(args) -> int:
    cfg = _build_config(args)
    rec = run_point(cfg)
    _print_record(rec)
    if cfg.out_csv:
        write_records_csv(cfg.out_csv, [rec])
    if cfg.out_json:
        with open(cfg.out_json, "w", encoding="utf-8") as fh:
            json.dump(
                {"version": __version__, "config": dataclasses.asdict(cfg),
                 "record": dict(zip(CSV_COLUMNS, rec.as_row()))},
                fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _build_config(args)
    records, summary = run_sweep(cfg)
    for rec in records:
        print(f"h={rec.h:.6g} m_x={rec.m_x:.10g} m_z={rec.m_z:.10g} "
              f"energy={rec.energy_per_site:.10g} steps={rec.steps_used}")
    hc = summary["h_c"]
    print(f"h_c estimate: {hc if hc is not None else 'no crossing in grid'}")
    if summary["beta_fit"]:
        print(f"beta fit: {summary['beta_fit']['beta']:.6g}")
    if summary["n_failed"]:
        print(f"{summary['n_failed']} grid point(s) failed:", file=sys.stderr)
        for line in summary["errors"]:
            print(f"  {line}", file=sys.stderr)
        return 3
    return 0


def _cmd_derivatives(args) -> int:
    records = read_records_csv(args.in_csv)
    records.sort(key=lambda r: r.h)
    hs = [r.h for r in records]
    vals = [getattr(r, args.column) for r in records]
    rows = derivative_table(hs, vals)
    if args.out_csv:
        import csv as _csv

        with open(args.out_csv, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh, lineterminator="\n")
            writer.writerow(["h", args.column, "d1", "d2"])
            for row in rows:
                writer.writerow([format(x, ".17g") for x in row])
    for h, v, d1, d2 in rows:
        print(f"h={h:.6g} {args.column}={v:.10g} d/dh={d1:.10g} d2/dh2={d2:.10g}")
    return 0


def _cmd_fit_beta(args) -> int:
    records = read_records_csv(args.in_csv)
    records.sort(key=lambda r: r.h)
    hs = [r.h for r in records]
    mxs = [r.m_x for r in records]
    h_c = args.h_c
    if h_c is None:
        h_c = estimate_hc(hs, mxs, threshold=args.threshold)
        if h_c is None:
            raise ConfigError("no |m_x| crossing in the table; pass --h-c explicitly")
    window = None
    if args.window_lo is not None or args.window_hi is not None:
        if args.window_lo is None or args.window_hi is None:
            raise ConfigError("give both --window-lo and --window-hi or neither")
        window = (args.window_lo, args.window_hi)
    fit = fit_beta(hs, mxs, h_c, window=window)
    print(f"h_c = {fit.h_c_used:.10g}")
    print(f"beta = {fit.beta:.10g}")
    print(f"amplitude = {fit.amplitude:.10g}")
    print(f"residual_rms = {fit.residual_rms:.6g}")
    print(f"n_points = {fit.n_points}")
    return 0


def _cmd_trotter(args) -> int:
    cfg = _build_config(args)
    try:
        n_list = [int(s) for s in args.n_list.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --n-list: {exc}") from exc
    rows, finals = convergence_study(cfg, args.T_fixed, n_list)
    if cfg.out_csv:
        write_long_csv(cfg.out_csv, rows)
    for n in n_list:
        print(f"N={n} m_x={finals[n]:.12g}")
    if len(n_list) >= 3:
        ratio = trotter_ratio([finals[n] for n in n_list[:3]])
        print(f"step-halving ratio: {ratio:.6g}")
    return 0


def _cmd_verify(args) -> int:
    state = load_canonical(args.path)
    report = verify_canonical(state, tol=args.tol)
    print(f"norm_defect = {report.norm_defect:.6e}")
    print(f"ortho_defect = {report.ortho_defect:.6e}")
    print(f"passed = {report.passed}")
    return 0 if report.passed else 2


def _cmd_selftest(args) -> int:
    results = run_selftest(seed=args.seed)
    failed = 0
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, EvolutionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
