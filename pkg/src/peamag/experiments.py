"""The ten canned experiments behind the command line runner.

Each experiment is a builder `(ExperimentSpec) -> RunReport` plus a matching
`aggregate_*` function that recomputes the report's aggregate block from the
per-trial rows alone. The builders call the same aggregate functions on the
values that end up in the CSV, so a report can always be audited offline.

Trial randomness comes exclusively from derive_trial_rng(seed, trial_id)
with a globally unique trial_id per task, which keeps every experiment
byte-for-byte reproducible for any worker count.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .acmag import ACField, EchoSequence, accumulated_phase, extract_ac_field, run_ac_pea
from .config import Config
from .constants import GAMMA_E, N_GRID_DEFAULT
from .estimation import export_grid_csv, phase_variance, to_field, wrap_angle
from .harness import ExperimentSpec, RunReport, derive_trial_rng, map_tasks
from .imaging import (
    Dipole,
    DipoleScene,
    field_gradient,
    position_error,
    resolution,
    resonance_contour,
    write_raster_csv,
    write_raster_pgm,
)
from .pea import (
    BENCHMARK_PHASES,
    PEAConfig,
    resource_count,
    run_napea_phase,
    run_qpea_phase,
)
from .readout import (
    ReadoutModel,
    kappa_for_multiple,
    measurement_fidelity,
    measurement_fidelity_mc,
)
from .ramsey import fit_fringe, simulate_ramsey_fringe

# headline values reported elsewhere for the same imaging geometry, kept for
# side by side comparison; they do not follow from the formulas in imaging.py
REFERENCE_RESOLUTION_M = 0.75e-9
REFERENCE_POSITION_ERROR_M = 3.7e-9


def _f(value) -> float:
    return float(value)


def _i(value) -> int:
    return int(float(value))


def _column(columns, rows, name, cast=_f):
    idx = columns.index(name)
    return [cast(row[idx]) for row in rows]


def _circular_mean(angles) -> float:
    a = np.asarray(angles, dtype=float)
    return float(np.arctan2(np.mean(np.sin(a)), np.mean(np.cos(a))))


def _readout_model(cfg: Config) -> Optional[ReadoutModel]:
    if cfg.get("readout", "ideal"):
        return None
    alpha0 = cfg.get("readout", "alpha0")
    alpha1 = cfg.get("readout", "alpha1")
    kappa = kappa_for_multiple(cfg.get("readout", "kappa_mult"),
                               alpha0=alpha0, alpha1=alpha1)
    return ReadoutModel(alpha0=alpha0, alpha1=alpha1, kappa=kappa)


def _pea_config(cfg: Config, algorithm: str) -> PEAConfig:
    phase_set = cfg.get("pea", "phase_set")
    if algorithm == "qpea":
        if phase_set is not None and cfg.is_explicit("pea", "phase_set"):
            raise ValueError(
                "qpea ignores control-phase sets; remove pea.phase_set "
                "or set it to none")
        phase_set = None
    elif phase_set is None:
        raise ValueError("napea needs pea.phase_set")
    return PEAConfig(
        k_total=cfg.get("pea", "k_total"),
        m_k=cfg.get("pea", "m_k"),
        f=cfg.get("pea", "f"),
        t_min=cfg.get("pea", "t_min"),
        t2_star=cfg.get("pea", "t2_star"),
        phase_set=phase_set,
        n_grid=cfg.get("estimation", "n_grid"),
        refine_mle=cfg.get("pea", "refine_mle"),
    )


def _default_b_ext(cfg: Config) -> float:
    b_ext = cfg.get("pea", "b_ext")
    if b_ext is None:
        b_ext = to_field(BENCHMARK_PHASES[2], cfg.get("pea", "t_min"))
    return b_ext


def _floats(text: str) -> list:
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def _names(text: str) -> list:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


# ---------------------------------------------------------------- fidelity


FIDELITY_COLUMNS = ["multiple", "kappa", "threshold",
                    "fidelity_exact", "fidelity_mc", "mc_shots"]


def _fidelity_task(arg):
    seed, row_id, multiple, alpha0, alpha1, n_mc = arg
    kappa = kappa_for_multiple(multiple, alpha0=alpha0, alpha1=alpha1)
    model = ReadoutModel(alpha0=alpha0, alpha1=alpha1, kappa=kappa)
    exact = measurement_fidelity(model)
    mc = math.nan
    if n_mc > 0:
        rng = derive_trial_rng(seed, row_id)
        mc = measurement_fidelity_mc(model, n_mc, rng)
    return (multiple, kappa, model.threshold, exact, mc, n_mc)


def aggregate_fidelity(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    exact = _column(columns, rows, "fidelity_exact")
    mc = _column(columns, rows, "fidelity_mc")
    gaps = [abs(e - m) for e, m in zip(exact, mc) if not math.isnan(m)]
    return {
        "n_rows": len(rows),
        "fidelity_exact_min": min(exact),
        "fidelity_exact_max": max(exact),
        "max_mc_gap": max(gaps) if gaps else None,
    }


def build_fidelity(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, FIDELITY_COLUMNS, [],
                         aggregate_fidelity(FIDELITY_COLUMNS, []))
    alpha0 = cfg.get("readout", "alpha0")
    alpha1 = cfg.get("readout", "alpha1")
    multiples = np.geomspace(cfg.get("fidelity", "mult_lo"),
                             cfg.get("fidelity", "mult_hi"),
                             cfg.get("fidelity", "n_mult"))
    n_mc = spec.trials * 100
    args = [(spec.master_seed, i, float(m), alpha0, alpha1, n_mc)
            for i, m in enumerate(multiples)]
    rows = map_tasks(_fidelity_task, args, spec.threads)
    return RunReport(spec, FIDELITY_COLUMNS, rows,
                     aggregate_fidelity(FIDELITY_COLUMNS, rows))


# ------------------------------------------------------------------ ramsey


RAMSEY_COLUMNS = ["index", "x", "signal", "p_expected", "n_avg", "b_ext",
                  "t_fixed", "sweep"]


def aggregate_ramsey(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    sweep = _column(columns, rows, "sweep", cast=str)[0]
    x = np.array(_column(columns, rows, "x"))
    signal = np.array(_column(columns, rows, "signal"))
    b_ext = _column(columns, rows, "b_ext")[0]
    out = {"n_rows": len(rows), "sweep": sweep, "b_ext": b_ext}
    if sweep == "time":
        out["expected_frequency_hz"] = GAMMA_E * abs(b_ext) / (2.0 * math.pi)
        try:
            fit = fit_fringe(x, signal)
            out.update(fit_ok=True,
                       fitted_frequency_hz=float(fit.frequency),
                       fitted_frequency_err_hz=float(fit.frequency_err),
                       fitted_tau_s=float(fit.tau))
        except (RuntimeError, ValueError):
            out["fit_ok"] = False
    else:
        t_fixed = _column(columns, rows, "t_fixed")[0]
        out["expected_period_t"] = 2.0 * math.pi / (GAMMA_E * t_fixed)
        # dominant FFT bin of the mean-subtracted sweep
        n = len(x)
        if n > 4:
            dx = (x[-1] - x[0]) / (n - 1)
            spectrum = np.abs(np.fft.rfft(signal - signal.mean()))
            j = int(np.argmax(spectrum[1:]) + 1)
            out["measured_period_t"] = n * dx / j
    return out


def build_ramsey(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, RAMSEY_COLUMNS, [],
                         aggregate_ramsey(RAMSEY_COLUMNS, []))
    model = _readout_model(cfg)
    if model is None:
        model = ReadoutModel(alpha0=cfg.get("readout", "alpha0"),
                             alpha1=cfg.get("readout", "alpha1"), kappa=1)
    rng = derive_trial_rng(spec.master_seed, 0)
    sweep = cfg.get("ramsey", "sweep")
    b_ext = cfg.get("ramsey", "b_ext")
    t2_star = cfg.get("pea", "t2_star")
    n_points = cfg.get("ramsey", "n_points")
    t_fixed = cfg.get("ramsey", "t_fixed")
    if sweep == "time":
        times = np.linspace(0.0, cfg.get("ramsey", "t_max"), n_points)
        fringe = simulate_ramsey_fringe(model, rng, spec.trials, times=times,
                                        b_ext=b_ext, t2_star=t2_star)
        t_fixed = 0.0
    elif sweep == "field":
        half = cfg.get("ramsey", "field_half_span")
        fields = np.linspace(-half, half, n_points)
        fringe = simulate_ramsey_fringe(model, rng, spec.trials, fields=fields,
                                        t=t_fixed, t2_star=t2_star)
    else:
        raise ValueError(f"ramsey.sweep must be 'time' or 'field', got {sweep!r}")
    rows = [(i, float(fringe.x[i]), float(fringe.signal[i]),
             float(fringe.p_expected[i]), spec.trials, b_ext, t_fixed, sweep)
            for i in range(len(fringe.x))]
    return RunReport(spec, RAMSEY_COLUMNS, rows,
                     aggregate_ramsey(RAMSEY_COLUMNS, rows))


# ------------------------------------------------------------- napea, qpea


PEA_COLUMNS = ["trial", "bits", "phi_true", "phi_mle", "phi_err", "b_mle",
               "n_resources", "total_time", "degenerate", "aliased"]
QPEA_COLUMNS = PEA_COLUMNS + ["binary_bits", "phi_binary"]


def _napea_task(arg):
    seed, trial, config, model, b_ext = arg
    rng = derive_trial_rng(seed, trial)
    from .pea import run_napea
    res = run_napea(config, b_ext, model, rng)
    phi_true = wrap_angle(GAMMA_E * b_ext * config.t_min)
    return (trial, "".join(str(rec.u) for rec in res.bits), phi_true, res.phi_mle,
            wrap_angle(res.phi_mle - phi_true), res.b_mle, res.n_resources,
            res.total_time, int(res.degenerate), int(res.aliased))


def _qpea_task(arg):
    seed, trial, config, model, b_ext = arg
    rng = derive_trial_rng(seed, trial)
    from .pea import run_qpea
    res = run_qpea(config, b_ext, model, rng)
    phi_true = wrap_angle(GAMMA_E * b_ext * config.t_min)
    return (trial, "".join(str(rec.u) for rec in res.bits), phi_true, res.phi_mle,
            wrap_angle(res.phi_mle - phi_true), res.b_mle, res.n_resources,
            res.total_time, int(res.degenerate), int(res.aliased),
            "".join(str(u) for u in res.binary_bits), res.phi_binary)


def _aggregate_pea_common(columns, rows) -> dict:
    phi_true = _column(columns, rows, "phi_true")[0]
    phi_mle = np.array(_column(columns, rows, "phi_mle"))
    errs = np.array(_column(columns, rows, "phi_err"))
    n_res = _column(columns, rows, "n_resources", cast=_i)[0]
    var = phase_variance(phi_mle, phi_true)
    return {
        "n_rows": len(rows),
        "phi_true": phi_true,
        "mean_phi_err": _circular_mean(errs),
        "var_phi": float(var),
        "var_phi_times_n": float(var) * n_res,
        "n_resources": n_res,
        "total_time": _column(columns, rows, "total_time")[0],
        "degenerate_count": sum(_column(columns, rows, "degenerate", cast=_i)),
    }


def aggregate_napea(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    return _aggregate_pea_common(columns, rows)


def aggregate_qpea(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    out = _aggregate_pea_common(columns, rows)
    phi_mle = np.array(_column(columns, rows, "phi_mle"))
    phi_bin = np.array(_column(columns, rows, "phi_binary"))
    # fraction of trials where the grid MLE lands on the binary readout value
    close = np.abs(wrap_angle(phi_mle - phi_bin)) <= math.pi / 64.0
    out["binary_match_fraction"] = float(np.mean(close))
    return out


def _build_pea(spec: ExperimentSpec, algorithm: str) -> RunReport:
    cfg = spec.config
    columns = QPEA_COLUMNS if algorithm == "qpea" else PEA_COLUMNS
    aggregate = aggregate_qpea if algorithm == "qpea" else aggregate_napea
    config = _pea_config(cfg, algorithm)
    if spec.trials == 0:
        return RunReport(spec, columns, [], aggregate(columns, []))
    model = _readout_model(cfg)
    b_ext = _default_b_ext(cfg)
    task = _qpea_task if algorithm == "qpea" else _napea_task
    args = [(spec.master_seed, t, config, model, b_ext)
            for t in range(spec.trials)]
    rows = map_tasks(task, args, spec.threads)
    report = RunReport(spec, columns, rows, aggregate(columns, rows))
    # re-run trial 0 in-process to export its posterior for inspection
    rng = derive_trial_rng(spec.master_seed, 0)
    if algorithm == "qpea":
        from .pea import run_qpea
        res0 = run_qpea(config, b_ext, model, rng)
    else:
        from .pea import run_napea
        res0 = run_napea(config, b_ext, model, rng)
    grid = res0.final_grid
    report.artifacts[f"{algorithm}_grid.csv"] = (
        lambda path, g=grid: export_grid_csv(g, path))
    return report


def build_napea(spec: ExperimentSpec) -> RunReport:
    return _build_pea(spec, "napea")


def build_qpea(spec: ExperimentSpec) -> RunReport:
    return _build_pea(spec, "qpea")


# ----------------------------------------------------------------- scaling


SCALING_COLUMNS = ["k_total", "n_resources", "total_time", "phi_true",
                   "n_trials", "var_phi", "var_times_n", "sql_ref", "heis_ref"]


def _scaling_task(arg):
    seed, base_trial, n_trials, config, model, unit_phase, algorithm = arg
    phis = np.empty(n_trials)
    total_time = 0.0
    for t in range(n_trials):
        rng = derive_trial_rng(seed, base_trial + t)
        if algorithm == "qpea":
            res = run_qpea_phase(config, unit_phase, model, rng,
                                 convert_field=False)
        else:
            res = run_napea_phase(config, unit_phase, model, rng,
                                  convert_field=False)
        phis[t] = res.phi_mle
        total_time = res.total_time
    var = phase_variance(phis, unit_phase)
    return (config.k_total, resource_count(config.k_total, config.m_k, config.f),
            total_time, unit_phase, n_trials, float(var))


def aggregate_scaling(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    n_res = np.array(_column(columns, rows, "n_resources"))
    var = np.array(_column(columns, rows, "var_phi"))
    order = np.argsort(n_res)
    n_sorted, var_sorted = n_res[order], var[order]
    c_sql = float(var_sorted[0] * n_sorted[0])
    c_heis = float(var_sorted[0] * n_sorted[0] ** 2)
    slope = float(np.polyfit(np.log(n_sorted), np.log(var_sorted), 1)[0]) \
        if len(rows) > 1 else math.nan
    return {"n_rows": len(rows), "c_sql": c_sql, "c_heis": c_heis,
            "loglog_slope": slope}


def build_scaling(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, SCALING_COLUMNS, [],
                         aggregate_scaling(SCALING_COLUMNS, []))
    algorithm = cfg.get("scaling", "algorithm")
    model = None if cfg.get("scaling", "ideal") else _readout_model(cfg)
    unit_phase = BENCHMARK_PHASES[2]
    ks = range(cfg.get("scaling", "k_lo"), cfg.get("scaling", "k_hi") + 1)
    base = _pea_config(cfg, algorithm)
    args = []
    for i, k in enumerate(ks):
        config = PEAConfig(k_total=k, m_k=base.m_k, f=base.f, t_min=base.t_min,
                           t2_star=base.t2_star, phase_set=base.phase_set,
                           n_grid=base.n_grid, refine_mle=base.refine_mle)
        args.append((spec.master_seed, i * spec.trials, spec.trials, config,
                     model, unit_phase, algorithm))
    partial = map_tasks(_scaling_task, args, spec.threads)
    order = sorted(range(len(partial)), key=lambda j: partial[j][1])
    n0 = partial[order[0]][1]
    var0 = partial[order[0]][5]
    rows = [p + (float(p[5]) * p[1],
                 var0 * n0 / p[1], var0 * n0 ** 2 / p[1] ** 2)
            for p in partial]
    return RunReport(spec, SCALING_COLUMNS, rows,
                     aggregate_scaling(SCALING_COLUMNS, rows))


# -------------------------------------------------------- variance-profile


VARIANCE_COLUMNS = ["phase_set", "phi_index", "phi_true", "n_trials", "var_phi"]


def _variance_task(arg):
    seed, base_trial, n_trials, config, model, set_name, phi_index, phi = arg
    phis = np.empty(n_trials)
    for t in range(n_trials):
        rng = derive_trial_rng(seed, base_trial + t)
        res = run_napea_phase(config, phi, model, rng, convert_field=False)
        phis[t] = res.phi_mle
    return (set_name, phi_index, phi, n_trials,
            float(phase_variance(phis, phi)))


def aggregate_variance_profile(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    names = _column(columns, rows, "phase_set", cast=str)
    var = _column(columns, rows, "var_phi")
    per_set: dict = {}
    for name, v in zip(names, var):
        per_set.setdefault(name, []).append(v)
    means = {name: float(np.mean(vals)) for name, vals in per_set.items()}
    # the spread of the profile measures how consistent the estimator is
    # across phases; small sets fail near the symmetric points and show a
    # large spread even when their mean variance looks fine
    stds = {name: float(np.std(vals)) for name, vals in per_set.items()}
    return {"n_rows": len(rows), "mean_var_by_set": means,
            "std_var_by_set": stds}


def build_variance_profile(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, VARIANCE_COLUMNS, [],
                         aggregate_variance_profile(VARIANCE_COLUMNS, []))
    model = _readout_model(cfg)
    set_names = _names(cfg.get("variance", "phase_sets"))
    n_phi = cfg.get("variance", "n_phi")
    # mid-cell grid: sample near 0, +/-pi/2 and -pi but never exactly on
    # them; the mirror partner phi -> -phi (and phi -> pi - phi) that the
    # small sets resolve poorly sits a finite distance away only off the
    # symmetric points, so on-point sampling would null the very peaks the
    # profile spread is meant to capture
    phis = [-math.pi + 2.0 * math.pi * (i + 0.5) / n_phi for i in range(n_phi)]
    base = _pea_config(cfg, "napea")
    depth = cfg.get("variance", "k_total")
    args = []
    task_id = 0
    for set_name in set_names:
        config = PEAConfig(k_total=depth, m_k=base.m_k, f=base.f,
                           t_min=base.t_min, t2_star=base.t2_star,
                           phase_set=set_name, n_grid=base.n_grid,
                           refine_mle=base.refine_mle)
        for i, phi in enumerate(phis):
            args.append((spec.master_seed, task_id * spec.trials, spec.trials,
                         config, model, set_name, i, phi))
            task_id += 1
    rows = map_tasks(_variance_task, args, spec.threads)
    return RunReport(spec, VARIANCE_COLUMNS, rows,
                     aggregate_variance_profile(VARIANCE_COLUMNS, rows))


# ------------------------------------------------------- field-sensitivity


SENSITIVITY_COLUMNS = ["algorithm", "field_index", "b_true", "n_trials",
                       "var_b", "total_time", "eta2"]


def _sensitivity_task(arg):
    seed, base_trial, n_trials, config, model, algorithm, field_index, b_true = arg
    runner = run_qpea_phase if algorithm == "qpea" else run_napea_phase
    unit_phase = GAMMA_E * b_true * config.t_min
    bs = np.empty(n_trials)
    total_time = 0.0
    for t in range(n_trials):
        rng = derive_trial_rng(seed, base_trial + t)
        res = runner(config, unit_phase, model, rng)
        bs[t] = res.b_mle
        total_time = res.total_time
    var_b = float(np.var(bs - b_true) + np.mean(bs - b_true) ** 2)
    return (algorithm, field_index, b_true, n_trials, var_b, total_time,
            var_b * total_time)


def aggregate_field_sensitivity(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    names = _column(columns, rows, "algorithm", cast=str)
    eta2 = _column(columns, rows, "eta2")
    times = _column(columns, rows, "total_time")
    out: dict = {"n_rows": len(rows)}
    for alg in sorted(set(names)):
        vals = [e for n, e in zip(names, eta2) if n == alg]
        t = [x for n, x in zip(names, times) if n == alg][0]
        out[alg] = {"mean_eta2": float(np.mean(vals)),
                    "std_eta2": float(np.std(vals)),
                    "total_time": t}
    if "napea" in out and "qpea" in out:
        out["napea_better"] = bool(
            out["napea"]["mean_eta2"] < out["qpea"]["mean_eta2"])
        out["napea_more_consistent"] = bool(
            out["napea"]["std_eta2"] < out["qpea"]["std_eta2"])
    return out


def _sensitivity_config(cfg: Config, algorithm: str) -> tuple:
    s = "sensitivity"
    if algorithm == "napea":
        config = PEAConfig(k_total=cfg.get(s, "napea_k"),
                           m_k=cfg.get(s, "napea_m_k"), f=cfg.get(s, "napea_f"),
                           t_min=cfg.get("pea", "t_min"),
                           t2_star=cfg.get("pea", "t2_star"),
                           phase_set=cfg.get(s, "napea_phase_set"),
                           n_grid=cfg.get("estimation", "n_grid"))
        mult = cfg.get(s, "napea_mult")
    else:
        config = PEAConfig(k_total=cfg.get(s, "qpea_k"),
                           m_k=cfg.get(s, "qpea_m_k"), f=cfg.get(s, "qpea_f"),
                           t_min=cfg.get("pea", "t_min"),
                           t2_star=cfg.get("pea", "t2_star"),
                           phase_set=None,
                           n_grid=cfg.get("estimation", "n_grid"))
        mult = cfg.get(s, "qpea_mult")
    alpha0 = cfg.get("readout", "alpha0")
    alpha1 = cfg.get("readout", "alpha1")
    model = ReadoutModel(alpha0=alpha0, alpha1=alpha1,
                         kappa=kappa_for_multiple(mult, alpha0=alpha0,
                                                  alpha1=alpha1))
    return config, model


def _snap_to_support(phi: float, k_total: int) -> float:
    # hard-decision estimates live on the 2^K binary-fraction points
    # phi = -pi + m * 2pi / 2^K; best-case sensitivity is defined on fields
    # those bit strings represent exactly, so digitization noise from
    # off-grid fields does not enter the comparison
    cell = 2.0 * math.pi / 2 ** k_total
    m = round((phi + math.pi) / cell)
    m = min(max(m, 0), 2 ** k_total - 1)
    return -math.pi + m * cell


def build_field_sensitivity(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, SENSITIVITY_COLUMNS, [],
                         aggregate_field_sensitivity(SENSITIVITY_COLUMNS, []))
    n_fields = cfg.get("sensitivity", "n_fields")
    fill = cfg.get("sensitivity", "fill")
    t_min = cfg.get("pea", "t_min")
    k_q = cfg.get("sensitivity", "qpea_k")
    b_max = math.pi / (GAMMA_E * t_min)
    targets = np.linspace(-fill * b_max, fill * b_max, n_fields)
    fields = np.array([_snap_to_support(GAMMA_E * b * t_min, k_q)
                       / (GAMMA_E * t_min) for b in targets])
    args = []
    task_id = 0
    for alg in ("napea", "qpea"):
        config, model = _sensitivity_config(cfg, alg)
        for i, b in enumerate(fields):
            args.append((spec.master_seed, task_id * spec.trials, spec.trials,
                         config, model, alg, i, float(b)))
            task_id += 1
    rows = map_tasks(_sensitivity_task, args, spec.threads)
    return RunReport(spec, SENSITIVITY_COLUMNS, rows,
                     aggregate_field_sensitivity(SENSITIVITY_COLUMNS, rows))


# ----------------------------------------------------------- dynamic-range


DR_COLUMNS = ["config_index", "t_min_ns", "k_total", "m_k", "n_resources",
              "total_time", "phi_true", "n_trials", "var_phi", "dynamic_range"]


def _dr_task(arg):
    seed, base_trial, n_trials, config, model, config_index, unit_phase = arg
    phis = np.empty(n_trials)
    total_time = 0.0
    for t in range(n_trials):
        rng = derive_trial_rng(seed, base_trial + t)
        res = run_napea_phase(config, unit_phase, model, rng,
                              convert_field=False)
        phis[t] = res.phi_mle
        total_time = res.total_time
    var = float(phase_variance(phis, unit_phase))
    return (config_index, config.t_min * 1e9, config.k_total, config.m_k,
            resource_count(config.k_total, config.m_k, config.f), total_time,
            unit_phase, n_trials, var, math.pi / math.sqrt(var))


def aggregate_dynamic_range(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    t_min = _column(columns, rows, "t_min_ns")
    m_k = _column(columns, rows, "m_k", cast=_i)
    dr = _column(columns, rows, "dynamic_range")
    times = _column(columns, rows, "total_time")
    m_high = max(m_k)
    high = sorted((t, d) for t, m, d in zip(t_min, m_k, dr) if m == m_high)
    out: dict = {"n_rows": len(rows),
                 "dr_by_t_min": {f"{t:g}": d for t, d in high}}
    # shorter base unit must never lose dynamic range
    out["monotone"] = bool(all(high[i][1] >= high[i + 1][1]
                               for i in range(len(high) - 1)))
    low = [(t, m, d, x) for t, m, d, x in zip(t_min, m_k, dr, times)
           if m != m_high]
    if low:
        t_low, m_low, dr_low, time_low = low[0]
        match = [(d, x) for t, m, d, x in zip(t_min, m_k, dr, times)
                 if m == m_high and t == t_low]
        if match:
            dr_high, time_high = match[0]
            out["m_low"] = int(m_low)
            out["time_ratio_low_over_high"] = time_low / time_high
            out["dr_loss_fraction"] = 1.0 - dr_low / dr_high
    return out


def build_dynamic_range(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, DR_COLUMNS, [],
                         aggregate_dynamic_range(DR_COLUMNS, []))
    model = _readout_model(cfg)
    base = _pea_config(cfg, "napea")
    t_mins = [t * 1e-9 for t in _floats(cfg.get("dynamic_range", "t_mins_ns"))]
    longest = cfg.get("dynamic_range", "longest_ns") * 1e-9
    m_high = cfg.get("dynamic_range", "m_high")
    m_low = cfg.get("dynamic_range", "m_low")
    b_ref = to_field(BENCHMARK_PHASES[2], max(t_mins))
    combos = []
    for t_min in t_mins:
        ratio = longest / t_min
        k = round(math.log2(ratio)) + 1
        if abs(2.0 ** (k - 1) - ratio) > 1e-9:
            raise ValueError(
                f"longest_ns must be a power-of-two multiple of {t_min * 1e9:g} ns")
        combos.append((t_min, k, m_high))
    combos.append((min(t_mins), combos[t_mins.index(min(t_mins))][1], m_low))
    args = []
    for idx, (t_min, k, m) in enumerate(combos):
        config = PEAConfig(k_total=k, m_k=m, f=m, t_min=t_min,
                           t2_star=base.t2_star, phase_set=base.phase_set,
                           n_grid=base.n_grid)
        unit_phase = GAMMA_E * b_ref * t_min
        args.append((spec.master_seed, idx * spec.trials, spec.trials, config,
                     model, idx, unit_phase))
    rows = map_tasks(_dr_task, args, spec.threads)
    return RunReport(spec, DR_COLUMNS, rows,
                     aggregate_dynamic_range(DR_COLUMNS, rows))


# ----------------------------------------------------------------- imaging


IMAGING_COLUMNS = ["quantity", "value"]


def _parse_dipoles(text: str) -> list:
    dipoles = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        species, _, coords = chunk.partition(":")
        x, y, z = _floats(coords)
        dipoles.append(Dipole.of_species(species.strip(),
                                         (x * 1e-9, y * 1e-9, z * 1e-9)))
    return dipoles


def aggregate_imaging(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    names = _column(columns, rows, "quantity", cast=str)
    values = _column(columns, rows, "value")
    out = {name: value for name, value in zip(names, values)}
    out["n_rows"] = len(rows)
    return out


def build_imaging(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, IMAGING_COLUMNS, [],
                         aggregate_imaging(IMAGING_COLUMNS, []))
    sec = "imaging"
    dipoles = _parse_dipoles(cfg.get(sec, "dipoles"))
    height = cfg.get(sec, "scan_height_nm") * 1e-9
    extent = cfg.get(sec, "extent_nm") * 1e-9
    center = tuple(v * 1e-9 for v in _floats(cfg.get(sec, "center_nm")))
    nv_axis = tuple(_floats(cfg.get(sec, "nv_axis")))
    scene = DipoleScene(dipoles=tuple(dipoles), scan_height=height,
                        extent=extent, pixels=cfg.get(sec, "pixels"),
                        nv_axis=nv_axis, center=center)
    target = cfg.get(sec, "target_field")
    linewidth = cfg.get(sec, "linewidth")
    t2 = cfg.get(sec, "t2_s")
    field = scene.field_map()
    contour = resonance_contour(scene, target, linewidth=linewidth)
    xs, ys = scene.grid_coords()
    rows = []
    moment = float(np.linalg.norm(dipoles[0].moment))
    grad = field_gradient(moment, height)
    err = position_error(height, t2, moment)
    rows.append(("scan_height_m", height))
    rows.append(("gradient_t_per_m", grad))
    rows.append(("resolution_m", resolution(linewidth, grad)))
    rows.append(("position_error_m", err.nominal))
    rows.append(("position_error_band_low_m", err.band_low))
    rows.append(("position_error_band_high_m", err.band_high))
    rows.append(("reference_resolution_m", REFERENCE_RESOLUTION_M))
    rows.append(("reference_position_error_m", REFERENCE_POSITION_ERROR_M))
    rows.append(("field_min_t", float(field.min())))
    rows.append(("field_max_t", float(field.max())))
    rows.append(("contour_pixel_count", float(contour.sum())))
    if contour.any():
        gx, gy = np.meshgrid(xs, ys)
        cx = gx[contour]
        cy = gy[contour]
        for i, dipole in enumerate(dipoles):
            d = np.hypot(cx - dipole.position[0], cy - dipole.position[1])
            rows.append((f"contour_min_distance_dipole{i}_m", float(d.min())))
    report = RunReport(spec, IMAGING_COLUMNS, rows,
                       aggregate_imaging(IMAGING_COLUMNS, rows))
    report.artifacts["imaging_field.csv"] = (
        lambda path, m=field: write_raster_csv(m, path))
    report.artifacts["imaging_contour.csv"] = (
        lambda path, m=contour: write_raster_csv(m, path))
    report.artifacts["imaging_contour.pgm"] = (
        lambda path, m=contour: write_raster_pgm(m, path))
    return report


# ---------------------------------------------------------------------- ac


AC_COLUMNS = ["theta_index", "trial", "theta_true", "b_true", "phi_i_true",
              "phi_q_true", "phi_i_est", "phi_q_est", "b_est", "theta_est",
              "theta_err", "b_rel_err"]


def _ac_task(arg):
    (seed, base_trial, n_trials, config, model, algorithm, theta_index,
     theta, b_ac, omega) = arg
    field = ACField(amplitude=b_ac, omega=omega, theta=theta)
    phi_i_true = accumulated_phase(field, EchoSequence("I"))
    phi_q_true = accumulated_phase(field, EchoSequence("Q"))
    rows = []
    for t in range(n_trials):
        rng = derive_trial_rng(seed, base_trial + t)
        pair = run_ac_pea(config, field, model, rng, algorithm=algorithm)
        b_est, theta_est = extract_ac_field(pair.phi_i, pair.phi_q, omega)
        rows.append((theta_index, t, theta, b_ac, phi_i_true, phi_q_true,
                     pair.phi_i, pair.phi_q, b_est, theta_est,
                     float(wrap_angle(theta_est - theta)),
                     (b_est - b_ac) / b_ac))
    return rows


def aggregate_ac(columns, rows) -> dict:
    if not rows:
        return {"n_rows": 0}
    theta_err = _column(columns, rows, "theta_err")
    b_rel = _column(columns, rows, "b_rel_err")
    return {"n_rows": len(rows),
            "max_abs_theta_err": float(max(abs(e) for e in theta_err)),
            "max_abs_b_rel_err": float(max(abs(e) for e in b_rel)),
            "b_true": _column(columns, rows, "b_true")[0]}


def build_ac(spec: ExperimentSpec) -> RunReport:
    cfg = spec.config
    if spec.trials == 0:
        return RunReport(spec, AC_COLUMNS, [], aggregate_ac(AC_COLUMNS, []))
    omega = cfg.get("ac", "omega")
    b_ac = cfg.get("ac", "b_ac")
    if b_ac is None:
        # amplitude giving a 2 rad quadrature phase per echo unit
        b_ac = 2.0 * omega / (4.0 * GAMMA_E)
    algorithm = cfg.get("ac", "algorithm")
    config = _pea_config(cfg, algorithm)
    if cfg.get("ac", "ideal"):
        # ideal projective readout and no dephasing over the echo train
        model = None
        config = dataclasses.replace(config, t2_star=None)
    else:
        model = _readout_model(cfg)
    theta_fixed = cfg.get("ac", "theta")
    if theta_fixed is None:
        n_theta = cfg.get("ac", "n_theta")
        thetas = [-math.pi + 2.0 * math.pi * (i + 0.5) / n_theta
                  for i in range(n_theta)]
    else:
        thetas = [theta_fixed]
    args = [(spec.master_seed, i * spec.trials, spec.trials, config, model,
             algorithm, i, theta, b_ac, omega)
            for i, theta in enumerate(thetas)]
    chunks = map_tasks(_ac_task, args, spec.threads)
    rows = [row for chunk in chunks for row in chunk]
    return RunReport(spec, AC_COLUMNS, rows, aggregate_ac(AC_COLUMNS, rows))


# ---------------------------------------------------------------- registry


EXPERIMENTS = {
    "fidelity": build_fidelity,
    "ramsey": build_ramsey,
    "napea": build_napea,
    "qpea": build_qpea,
    "scaling": build_scaling,
    "variance-profile": build_variance_profile,
    "field-sensitivity": build_field_sensitivity,
    "dynamic-range": build_dynamic_range,
    "imaging": build_imaging,
    "ac": build_ac,
}

AGGREGATORS = {
    "fidelity": (FIDELITY_COLUMNS, aggregate_fidelity),
    "ramsey": (RAMSEY_COLUMNS, aggregate_ramsey),
    "napea": (PEA_COLUMNS, aggregate_napea),
    "qpea": (QPEA_COLUMNS, aggregate_qpea),
    "scaling": (SCALING_COLUMNS, aggregate_scaling),
    "variance-profile": (VARIANCE_COLUMNS, aggregate_variance_profile),
    "field-sensitivity": (SENSITIVITY_COLUMNS, aggregate_field_sensitivity),
    "dynamic-range": (DR_COLUMNS, aggregate_dynamic_range),
    "imaging": (IMAGING_COLUMNS, aggregate_imaging),
    "ac": (AC_COLUMNS, aggregate_ac),
}
