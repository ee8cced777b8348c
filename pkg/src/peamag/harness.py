"""Run orchestration: seeded trial streams, parallel map, report output.

Every trial draws its randomness from a counter-based stream keyed by
(master seed, trial id), so results are identical for any worker count and
any execution order. Reports are written as a per-trial CSV (fixed column
order, full-precision floats) plus a JSON summary whose aggregate fields
are recomputed from exactly the values written to the CSV.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .config import Config, default_config
from .spinops import DriveParams

THREADS_ENV_VAR = "PEAMAG_THREADS"

REPORT_METADATA = {
    "threshold_tie_rule": "counts exactly at threshold read as u=1",
    "angle_convention": "phases wrapped into (-pi, pi]",
    "reference_normalization":
        "scaling reference curves c/N and c/N^2 pass through the smallest-N point",
}


def derive_trial_rng(master_seed: int, trial_id: int) -> np.random.Generator:
    """Independent counter-based generator for one trial.

    Streams for distinct (seed, trial) pairs are statistically independent
    and reproducible on any machine and worker layout.
    """
    if master_seed < 0 or trial_id < 0:
        raise ValueError("seed and trial id must be nonnegative")
    key = np.random.SeedSequence([master_seed, trial_id]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class BlochSiegertBound:
    """Drive-strength limit on the shortest usable evolution unit."""

    shift_factor: float  # frequency shift factor at the given drive
    omega_max: float  # rad/s, strongest drive keeping the shift below 1%
    t_min_bound: float  # s, one full Rabi period at omega_max
    pi_pulse_duration: float  # s, pi / omega_max


def bloch_siegert_bound(drive: DriveParams) -> BlochSiegertBound:
    """Off-resonant drive shift 1 + Omega^2 / (4 omega_0^2) and the implied
    floor on the evolution unit.

    A 1% shift tolerance allows Omega up to omega_0 / 5; the usable floor is
    taken as one full Rabi period 2 pi / Omega at that strongest drive (the
    pi-pulse duration pi / Omega is reported alongside).
    """
    shift = 1.0 + drive.rabi_freq ** 2 / (4.0 * drive.qubit_freq ** 2)
    omega_max = drive.qubit_freq / 5.0
    return BlochSiegertBound(shift_factor=shift, omega_max=omega_max,
                             t_min_bound=2.0 * math.pi / omega_max,
                             pi_pulse_duration=math.pi / omega_max)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: experiment name, configuration, seed, scale, workers."""

    name: str
    config: Config
    master_seed: int = 12345
    trials: int = 100
    threads: int = 1

    def __post_init__(self):
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass
class RunReport:
    """Per-trial rows, recomputable aggregates, and run provenance."""

    spec: ExperimentSpec
    columns: list
    rows: list
    aggregates: dict
    metadata: dict = dataclass_field(default_factory=dict)
    wallclock_s: float = 0.0
    artifacts: dict = dataclass_field(default_factory=dict)  # name -> writer


def map_tasks(fn: Callable, args: Sequence, threads: int) -> list:
    """Order-preserving map, serial or over a process pool."""
    args = list(args)
    if threads <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    chunk = max(1, len(args) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, args, chunksize=chunk))


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(report: RunReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(report.columns) + "\n")
        for row in report.rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def write_json(report: RunReport, path) -> None:
    payload = {
        "experiment": report.spec.name,
        "seed": report.spec.master_seed,
        "trials": report.spec.trials,
        "threads": report.spec.threads,
        "version": __version__,
        "aggregates": report.aggregates,
        "metadata": {**REPORT_METADATA, **report.metadata},
        "wallclock_s": report.wallclock_s,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def experiment_names() -> list:
    from . import experiments
    return sorted(experiments.EXPERIMENTS)


def run_experiment(spec: ExperimentSpec) -> RunReport:
    """Dispatch one experiment and fill in timing."""
    from . import experiments
    try:
        builder = experiments.EXPERIMENTS[spec.name]
    except KeyError:
        known = ", ".join(experiment_names())
        raise ValueError(
            f"unknown experiment {spec.name!r}; choose from: {known}") from None
    t0 = time.perf_counter()
    report = builder(spec)
    report.wallclock_s = time.perf_counter() - t0
    return report


def write_report(report: RunReport, out_dir) -> dict:
    """Write CSV + JSON (+ experiment-specific artifacts); returns paths."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    base = report.spec.name.replace("-", "_")
    paths = {}
    csv_path = os.path.join(out_dir, base + ".csv")
    json_path = os.path.join(out_dir, base + ".json")
    write_csv(report, csv_path)
    write_json(report, json_path)
    paths["csv"] = csv_path
    paths["json"] = json_path
    for name, writer in report.artifacts.items():
        target = os.path.join(out_dir, name)
        writer(target)
        paths[name] = target
    return paths


def spec_from_config(cfg: Optional[Config] = None, name: Optional[str] = None,
                     seed: Optional[int] = None, trials: Optional[int] = None,
                     threads: Optional[int] = None) -> ExperimentSpec:
    """Build an ExperimentSpec from a configuration plus explicit overrides."""
    if cfg is None:
        cfg = default_config()
    return ExperimentSpec(
        name=name if name is not None else cfg.get("harness", "experiment"),
        config=cfg,
        master_seed=seed if seed is not None else cfg.get("harness", "seed"),
        trials=trials if trials is not None else cfg.get("harness", "trials"),
        threads=threads if threads is not None else cfg.get("harness", "threads"),
    )
