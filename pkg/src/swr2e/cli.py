"""Batch front end: the solve, sweep and inspect subcommands.

One solve run writes, under its output directory:

  residual_history.csv   k,Res,log10Res per Schwarz sweep
  energy_norm.csv        level,t,norm,energy of the final sweep (imaginary
                         time runs only)
  field_final.bin|.csv   reconstructed global field at the final level
  field_sweep_K.*        intermediate reconstructions every dump-stride
                         sweeps, when a stride is set
  layout.txt             the layout manifest
  run_summary.json       convergence, counters, cost model, conditioning

Floats in the CSV files are written with repr, so rerunning the same
configuration with the same worker count reproduces the files byte for
byte.  Worker resolution order: --workers flag, then the SWR2E_WORKERS
environment variable, then the [swr] section, then the logical core
count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .complexity import cc_stationary, cc_tdse, fit_beta, measure, \
    model_from_run
from .config import ConfigError, RunConfig, available_presets, load_config, \
    override
from .linalg import Prefactored
from .reconstruct import (GlobalField, dump_field_binary, dump_field_csv,
                          field_l2_diff, field_norm, local_field,
                          reconstruct_global)
from .scenarios import Scenario, assemble_scenario
from .swr import SwrResult, run_swr
from .timestep import ConvergenceError


@dataclass
class RunOutcome:
    exit_code: int
    out_dir: Path
    summary: dict


def resolve_workers(flag: int | None, cfg: RunConfig) -> int:
    """--workers flag, then SWR2E_WORKERS, then config, then core count."""
    if flag is not None:
        if flag < 1:
            raise ConfigError("workers: must be at least 1")
        return flag
    env = os.environ.get("SWR2E_WORKERS")
    if env:
        try:
            value = int(env, 10)
        except ValueError:
            raise ConfigError(f"SWR2E_WORKERS: not an integer: '{env}'")
        if value < 1:
            raise ConfigError("SWR2E_WORKERS: must be at least 1")
        return value
    if cfg.swr.workers is not None:
        return cfg.swr.workers
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# artifact writers (repr floats, fixed row order)


def _write_lines(path: Path, lines: list[str]):
    path.write_text("\n".join(lines) + "\n")


def write_residual_history(path: Path, residuals: list[float]):
    lines = ["k,Res,log10Res"]
    for k, r in enumerate(residuals, start=1):
        lg = math.log10(r) if r > 0 else -math.inf
        lines.append(f"{k},{r!r},{lg!r}")
    _write_lines(path, lines)


def write_energy_norm(path: Path, dt: float, norms, energies):
    lines = ["level,t,norm,energy"]
    for i, (nr, en) in enumerate(zip(norms, energies), start=1):
        lines.append(f"{i},{i * dt!r},{nr!r},{en!r}")
    _write_lines(path, lines)


def write_sweep_rows(path: Path, axis: str, rows):
    lines = [f"{axis},k_to_threshold,final_res"]
    for value, k_thr, final in rows:
        lines.append(f"{value},{k_thr},{final!r}")
    _write_lines(path, lines)


def dump_field(out_dir: Path, stem: str, fmt: str, g: GlobalField) -> str:
    if fmt == "binary":
        name = f"{stem}.bin"
        dump_field_binary(out_dir / name, g.values)
    else:
        name = f"{stem}.csv"
        dump_field_csv(out_dir / name, g.x1, g.x2, g.values)
    return name


def solve_time_samples(ops, repeats: int = 3):
    """Measured (size, seconds) pairs for the beta fit: dense factor+solve."""
    samples = []
    for n in sorted(ops):
        a = ops[n].A
        rhs = a.sum(axis=1)
        tick = time.perf_counter()
        for _ in range(repeats):
            Prefactored(a).solve(rhs)
        samples.append((a.shape[0], (time.perf_counter() - tick) / repeats))
    return samples


# ---------------------------------------------------------------------------
# one run


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _base_summary(cfg: RunConfig, sc: Scenario, workers: int) -> dict:
    return {
        "scenario": cfg.name,
        "mode": cfg.evolution.mode,
        "workers": workers,
        "grid": {"bounds": list(cfg.domain.bounds),
                 "points": list(cfg.domain.points)},
        "layout": {"L": sc.layout.L,
                   "overlap_cells": [2 * sc.layout.n_half1,
                                     2 * sc.layout.n_half2],
                   "overlap_width": [sc.layout.eps1, sc.layout.eps2]},
        "basis": {"kind": cfg.basis.kind,
                  "sizes": {n: sc.bases[n].size for n in sorted(sc.bases)}},
        "transmission": {"kind": cfg.transmission.kind,
                         "mu": str(cfg.transmission.mu)},
    }


def run_scenario(cfg: RunConfig, *, workers: int | None = None,
                 out_dir: str | Path | None = None,
                 dump_stride: int | None = None) -> RunOutcome:
    """Assemble, run, and write every artifact of one configuration."""
    n_workers = resolve_workers(workers, cfg)
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    stride = cfg.output.dump_stride if dump_stride is None else dump_stride
    if stride < 0:
        raise ConfigError("dump_stride: cannot be negative")
    fmt = cfg.output.dump_format

    sc = assemble_scenario(cfg, workers=n_workers)
    (out / "layout.txt").write_text(sc.layout.manifest())
    summary = _base_summary(cfg, sc, n_workers)
    outputs = {"layout": "layout.txt"}

    if sc.projection_only:
        fields = {n: local_field(sc.bases[n], sc.c0[n])
                  for n in sorted(sc.c0)}
        g = reconstruct_global(fields, sc.layout)
        ref_norm = field_norm(sc.grid.x1, sc.grid.x2, sc.phi0)
        err = field_l2_diff(sc.grid.x1, sc.grid.x2, g.values, sc.phi0)
        write_residual_history(out / "residual_history.csv", [])
        outputs["residual_history"] = "residual_history.csv"
        outputs["field_final"] = dump_field(out, "field_final", fmt, g)
        summary.update({
            "projection_error": err / ref_norm,
            "final_norm": g.norm,
            "gram_cond": {n: float(np.linalg.cond(sc.grams[n]))
                          for n in sorted(sc.grams)},
            "converged": True,
            "cap_reached": False,
            "k_cvg": 0,
            "final_residual": None,
            "total_solves": 0,
            "outputs": outputs,
        })
        _write_lines(out / "run_summary.json",
                     [json.dumps(_jsonable(summary), indent=2,
                                 sort_keys=True)])
        return RunOutcome(0, out, summary)

    hook = None
    if stride > 0:
        def hook(k, coeffs):
            if k % stride == 0:
                fields = {n: local_field(sc.bases[n], coeffs[n])
                          for n in sorted(coeffs)}
                g = reconstruct_global(fields, sc.layout)
                name = dump_field(out, f"field_sweep_{k:04d}", fmt, g)
                outputs[f"field_sweep_{k:04d}"] = name

    error = None
    try:
        result = run_swr(sc.problem, sweep_hook=hook)
    except ConvergenceError as exc:
        error = str(exc)
        result = None

    if result is None:
        summary.update({
            "converged": False,
            "cap_reached": False,
            "error": error,
            "outputs": outputs,
        })
        _write_lines(out / "run_summary.json",
                     [json.dumps(_jsonable(summary), indent=2,
                                 sort_keys=True)])
        return RunOutcome(3, out, summary)

    write_residual_history(out / "residual_history.csv", result.residuals)
    outputs["residual_history"] = "residual_history.csv"
    stationary = bool(result.t_cvg)
    if stationary and result.norms:
        write_energy_norm(out / "energy_norm.csv", sc.problem.cfg.dt,
                          result.norms, result.energies)
        outputs["energy_norm"] = "energy_norm.csv"
    g = result.field()
    outputs["field_final"] = dump_field(out, "field_final", fmt, g)

    counters = measure(result)
    model = model_from_run(result, beta=2.0)
    estimate = cc_stationary(model) if stationary else cc_tdse(model)
    summary.update({
        "converged": result.converged,
        "cap_reached": not result.converged,
        "k_cvg": result.sweeps if result.converged else None,
        "sweeps": result.sweeps,
        "final_residual": result.residuals[-1] if result.residuals else None,
        "residual_mode": result.residual_mode,
        "delta_sc": sc.problem.delta_sc,
        "level_counts": list(result.level_counts),
        "t_final": result.t_cvg[-1] if stationary else cfg.evolution.T,
        "energy": (result.energies[-1]
                   if stationary and result.energies else None),
        "final_norm": g.norm,
        "counters": {
            "mode": counters.mode,
            "sweeps": counters.sweeps,
            "level_counts": list(counters.level_counts),
            "solves_per_subdomain": dict(counters.solves_per_subdomain),
            "total_solves": counters.total_solves,
        },
        "total_solves": counters.total_solves,
        "cost_model": {"beta": model.beta,
                       "value": estimate.value,
                       "attractiveness": estimate.attractiveness,
                       "scaling_gain": model.scaling_gain},
        "beta_fit": fit_beta(solve_time_samples(sc.ops)),
        "cond_A": {n: sc.ops[n].cond_A for n in sorted(sc.ops)},
        "wallclock_s": result.wallclock_s,
        "outputs": outputs,
    })
    _write_lines(out / "run_summary.json",
                 [json.dumps(_jsonable(summary), indent=2, sort_keys=True)])
    return RunOutcome(0 if result.converged else 3, out, summary)


# ---------------------------------------------------------------------------
# sweeps


def run_sweep(cfg: RunConfig, axis: str, values: list[str], *,
              workers: int | None = None,
              out_dir: str | Path | None = None) -> RunOutcome:
    """Run the scenario once per axis value; aggregate convergence rows."""
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    worst = 0
    for token in values:
        cfg_v = override(cfg, axis, token)
        n_workers = resolve_workers(workers, cfg_v)
        sc = assemble_scenario(cfg_v, workers=n_workers)
        if sc.projection_only:
            raise ConfigError(
                "evolution.mode: a sweep needs a time-stepping scenario")
        result = run_swr(sc.problem)
        k_thr = next((k + 1 for k, r in enumerate(result.residuals)
                      if r <= cfg_v.swr.delta_sc), -1)
        final = result.residuals[-1] if result.residuals else 0.0
        rows.append((token, k_thr, final))
        if not result.converged:
            worst = 3
    path = out / f"sweep_{axis}.csv"
    write_sweep_rows(path, axis, rows)
    summary = {"scenario": cfg.name, "axis": axis,
               "rows": [list(r) for r in rows],
               "outputs": {"sweep": path.name}}
    return RunOutcome(worst, out, summary)


# ---------------------------------------------------------------------------
# inspection


def inspect_summary(path: str | Path) -> str:
    data = json.loads(Path(path).read_text())
    head = []
    for key in ("scenario", "mode", "converged", "k_cvg", "final_residual",
                "energy", "total_solves", "workers"):
        if key in data:
            head.append(f"{key} = {data[key]}")
    return "\n".join(head) + "\n\n" + json.dumps(data, indent=2,
                                                 sort_keys=True)


# ---------------------------------------------------------------------------
# argument parsing


def _split_values(raw: str) -> list[str]:
    tokens = [t for t in raw.replace(",", " ").split() if t]
    if not tokens:
        raise ConfigError("values: expected at least one value")
    return tokens


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swr2e",
        description="Schwarz waveform relaxation runs for the 1-d "
                    "two-electron problem")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one preset or config file")
    solve.add_argument("config",
                       help="preset name (%s) or INI path"
                            % ", ".join(available_presets()))
    solve.add_argument("--workers", type=int, default=None)
    solve.add_argument("--out", default=None)
    solve.add_argument("--dump-stride", type=int, default=None,
                       dest="dump_stride",
                       help="grid dump every k sweeps (0 = final only)")

    sweep = sub.add_parser("sweep", help="rerun a scenario along one axis")
    sweep.add_argument("config")
    sweep.add_argument("--axis", required=True,
                       choices=("mu", "dt", "overlap", "L"))
    sweep.add_argument("--values", required=True,
                       help="comma or space separated values")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--out", default=None)

    inspect = sub.add_parser("inspect", help="pretty-print a run summary")
    inspect.add_argument("summary")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            cfg = load_config(args.config)
            outcome = run_scenario(cfg, workers=args.workers,
                                   out_dir=args.out,
                                   dump_stride=args.dump_stride)
            summary = outcome.summary
            if summary.get("converged"):
                print(f"{cfg.name}: converged, artifacts in {outcome.out_dir}")
            else:
                print(f"{cfg.name}: NOT converged "
                      f"(see {outcome.out_dir / 'run_summary.json'})",
                      file=sys.stderr)
            return outcome.exit_code
        if args.command == "sweep":
            cfg = load_config(args.config)
            outcome = run_sweep(cfg, args.axis, _split_values(args.values),
                                workers=args.workers, out_dir=args.out)
            for row in outcome.summary["rows"]:
                print(",".join(str(v) for v in row))
            return outcome.exit_code
        text = inspect_summary(args.summary)
        print(text)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
