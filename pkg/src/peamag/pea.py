"""Adaptive and non-adaptive quantum phase-estimation drivers.

Both algorithms estimate the phase a field imprints over the shortest free
evolution unit. Bit k (k = K .. 1, most magnified first) evolves the probe
for 2^(k-1) units, so the unknown phase is magnified by 2^(k-1) before a
control rotation and the X-basis readout pulse. Each measured bit feeds a
Bayesian grid; the adaptive variant (NAPEA) additionally cycles the control
phase through a fixed set, while the hard-decision variant (QPEA) sets the
control phase from the bits already decided and majority-votes each round.

Bit k runs M(K, k) = M_K + F (K - k) times, so the most magnified (least
significant) round gets M_K repetitions and every halving of the
magnification adds F more. Total unitary applications follow the closed
form N = M_K (2^K - 1) + F (2^K - K - 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import GAMMA_E, N_GRID_DEFAULT, T2_STAR_DEFAULT, T_MIN_DEFAULT
from .estimation import (LikelihoodGrid, MLEResult, bayes_update, mle,
                         to_field, uniform_prior, wrap_angle)
from .readout import BitRecord, ReadoutModel, sample_bit
from .spinops import (DephasingModel, apply_dephasing, apply_unitary,
                      feedback_rotation, phase_evolution, plus_state, rotation)

_RY90 = rotation((0.0, 1.0, 0.0), math.pi / 2)

PHASE_SET_NAMES = ("DUAL", "QUAD", "OCT", "VAR", "SINGLE")

# fixed non-representable test phases, spread over the unwrapped interval
BENCHMARK_PHASES = tuple(math.pi / d for d in (9.789, 7.789, 5.789, 3.789, 1.789))


def control_phase_set(name: str, n_reps: Optional[int] = None) -> np.ndarray:
    """Control-phase list for one round.

    DUAL {0, pi/2}, QUAD {0 .. 3pi/2 by pi/2}, OCT {0 .. 7pi/4 by pi/4},
    VAR {j pi / m : j < m} with m = n_reps (the round's repetition count),
    SINGLE {0} (diagnostic; leaves the grid mirror-symmetric).
    """
    if name == "DUAL":
        return np.array([0.0, math.pi / 2])
    if name == "QUAD":
        return np.arange(4) * (math.pi / 2)
    if name == "OCT":
        return np.arange(8) * (math.pi / 4)
    if name == "SINGLE":
        return np.array([0.0])
    if name == "VAR":
        if n_reps is None or n_reps < 1:
            raise ValueError("VAR needs the round's repetition count")
        return np.arange(n_reps) * (math.pi / n_reps)
    raise ValueError(f"unknown phase set {name!r}; choose from {PHASE_SET_NAMES}")


def measurement_schedule(k_total: int, m_k: int, f: int) -> list[tuple[int, int]]:
    """(k, repetitions) pairs in execution order k = K .. 1."""
    _validate_schedule_args(k_total, m_k, f)
    return [(k, m_k + f * (k_total - k)) for k in range(k_total, 0, -1)]


def resource_count(k_total: int, m_k: int, f: int) -> int:
    """Closed-form total number of elementary unitary applications."""
    _validate_schedule_args(k_total, m_k, f)
    return m_k * (2 ** k_total - 1) + f * (2 ** k_total - k_total - 1)


def _validate_schedule_args(k_total, m_k, f):
    if not (isinstance(k_total, (int, np.integer)) and k_total >= 1):
        raise ValueError("k_total must be a positive integer")
    if not (isinstance(m_k, (int, np.integer)) and m_k >= 1):
        raise ValueError("m_k must be a positive integer")
    if not (isinstance(f, (int, np.integer)) and f >= 0):
        raise ValueError("f must be a nonnegative integer")


@dataclass(frozen=True)
class PEAConfig:
    """Depth, weighting, timing, and grid settings for one estimation run."""

    k_total: int
    m_k: int = 4
    f: int = 4
    t_min: float = T_MIN_DEFAULT
    t2_star: Optional[float] = T2_STAR_DEFAULT
    phase_set: Optional[str] = "OCT"
    n_grid: int = N_GRID_DEFAULT
    refine_mle: bool = False

    def __post_init__(self):
        _validate_schedule_args(self.k_total, self.m_k, self.f)
        if self.t_min <= 0:
            raise ValueError("t_min must be positive")
        if self.phase_set is not None and self.phase_set not in PHASE_SET_NAMES:
            raise ValueError(
                f"unknown phase set {self.phase_set!r}; choose from {PHASE_SET_NAMES}")
        if self.t2_star is not None:
            if self.t2_star <= 0:
                raise ValueError("t2_star must be positive")
            longest = 2 ** (self.k_total - 1) * self.t_min
            if longest > 3.0 * self.t2_star:
                warnings.warn(
                    f"longest evolution {longest:g} s exceeds 3x T2* "
                    f"({self.t2_star:g} s); contrast is essentially gone",
                    stacklevel=2)

    @property
    def longest_evolution(self) -> float:
        return 2 ** (self.k_total - 1) * self.t_min


@dataclass(frozen=True)
class PEAResult:
    """Outcome of one estimation run."""

    algorithm: str
    bits: tuple
    phi_mle: float
    b_mle: Optional[float]
    n_resources: int
    total_time: float
    final_grid: LikelihoodGrid
    aliased: bool
    degenerate: bool
    binary_bits: Optional[tuple] = None  # QPEA only, (u_1 .. u_K)
    phi_binary: Optional[float] = None  # QPEA only, wrapped


def _measure_bit(unit_phase: float, k: int, phi_ctrl: float, t_k: float,
                 dephasing: Optional[DephasingModel],
                 model: Optional[ReadoutModel],
                 rng: np.random.Generator) -> BitRecord:
    """One full round: prepare |+>, magnify the phase, dephase, rotate by the
    control phase, pulse into the X basis, read out."""
    state = plus_state()
    state = phase_evolution(state, unit_phase, 2 ** (k - 1))
    if dephasing is not None:
        state = apply_dephasing(state, t_k, dephasing)
    state = apply_unitary(state, feedback_rotation(phi_ctrl))
    state = apply_unitary(state, _RY90)
    if model is None:
        # ideal single-shot projective readout
        u = int(rng.random() < state.prob_zero)
        return BitRecord(u=u, raw_counts=u, k_index=k, phi_control=phi_ctrl)
    return sample_bit(state, model, rng, k_index=k, phi_control=phi_ctrl)


def run_napea_phase(config: PEAConfig, unit_phase: float,
                    model: Optional[ReadoutModel], rng: np.random.Generator,
                    unit_time: Optional[float] = None,
                    convert_field: bool = True) -> PEAResult:
    """Adaptive run on an arbitrary per-unit phase.

    The control phase cycles through the configured set, restarting the cycle
    at every new bit index. model = None means ideal projective readout
    (kappa = 1); unit_time defaults to config.t_min and sets both the
    dephasing envelope and the total-time accounting.
    """
    if config.phase_set is None:
        raise ValueError("NAPEA needs a control phase set")
    if unit_time is None:
        unit_time = config.t_min
    dephasing = None if config.t2_star is None else DephasingModel(config.t2_star)
    grid = uniform_prior(config.n_grid)
    bits = []
    n_res = 0
    for k, m in measurement_schedule(config.k_total, config.m_k, config.f):
        t_k = 2 ** (k - 1) * unit_time
        phases = control_phase_set(config.phase_set, m)
        for rep in range(m):
            phi_ctrl = float(phases[rep % phases.size])
            rec = _measure_bit(unit_phase, k, phi_ctrl, t_k, dephasing,
                               model, rng)
            grid = bayes_update(grid, rec.u, k, phi_ctrl, t_k, config.t2_star)
            bits.append(rec)
        n_res += m * 2 ** (k - 1)
    return _finish("napea", config, unit_phase, model, grid, bits, n_res,
                   unit_time, convert_field)


def run_qpea_phase(config: PEAConfig, unit_phase: float,
                   model: Optional[ReadoutModel], rng: np.random.Generator,
                   unit_time: Optional[float] = None,
                   convert_field: bool = True) -> PEAResult:
    """Hard-decision run on an arbitrary per-unit phase.

    Each round repeats at a fixed control phase computed from the bits
    already decided, Phi_k = pi sum_{j>k} u_j / 2^(j-k); the round's bit is
    the majority vote, ties (even repetition counts) resolving to 0. The
    Bayesian grid is still accumulated for analysis alongside the binary
    estimate. The configured phase_set must be None.
    """
    if config.phase_set is not None:
        raise ValueError("QPEA computes its control phases; set phase_set=None")
    if unit_time is None:
        unit_time = config.t_min
    dephasing = None if config.t2_star is None else DephasingModel(config.t2_star)
    grid = uniform_prior(config.n_grid)
    bits = []
    decided: dict[int, int] = {}
    n_res = 0
    for k, m in measurement_schedule(config.k_total, config.m_k, config.f):
        phi_ctrl = math.pi * sum(u / 2 ** (j - k) for j, u in decided.items())
        t_k = 2 ** (k - 1) * unit_time
        ones = 0
        for _ in range(m):
            rec = _measure_bit(unit_phase, k, phi_ctrl, t_k,
                               dephasing, model, rng)
            grid = bayes_update(grid, rec.u, k, phi_ctrl, t_k, config.t2_star)
            bits.append(rec)
            ones += rec.u
        decided[k] = 1 if 2 * ones > m else 0
        n_res += m * 2 ** (k - 1)
    binary_bits = tuple(decided[k] for k in range(1, config.k_total + 1))
    return _finish("qpea", config, unit_phase, model, grid, bits, n_res,
                   unit_time, convert_field, binary_bits=binary_bits,
                   phi_binary=qpea_binary_estimate(binary_bits))


def _finish(algorithm, config, unit_phase, model, grid, bits, n_res,
            unit_time, convert_field, binary_bits=None, phi_binary=None):
    est: MLEResult = mle(grid, refine=config.refine_mle)
    kappa = 1 if model is None else model.kappa
    return PEAResult(
        algorithm=algorithm,
        bits=tuple(bits),
        phi_mle=est.phi,
        b_mle=to_field(est.phi, config.t_min) if convert_field else None,
        n_resources=n_res,
        total_time=n_res * unit_time * kappa,
        final_grid=grid,
        aliased=abs(unit_phase) > math.pi,
        degenerate=est.degenerate,
        binary_bits=binary_bits,
        phi_binary=phi_binary,
    )


def run_napea(config: PEAConfig, b_ext: float,
              model: Optional[ReadoutModel],
              rng: np.random.Generator) -> PEAResult:
    """Adaptive estimation of a static field (tesla)."""
    return run_napea_phase(config, GAMMA_E * b_ext * config.t_min, model, rng)


def run_qpea(config: PEAConfig, b_ext: float,
             model: Optional[ReadoutModel],
             rng: np.random.Generator) -> PEAResult:
    """Hard-decision estimation of a static field (tesla)."""
    return run_qpea_phase(config, GAMMA_E * b_ext * config.t_min, model, rng)


def qpea_binary_estimate(bit_list: Sequence[int], wrap: bool = True) -> float:
    """Phase from the binary expansion phi = 2 pi sum u_k / 2^k.

    bit_list is (u_1 .. u_K), most significant first. wrap=True maps the
    result into (-pi, pi] by subtracting 2 pi when above pi.
    """
    phi = 2 * math.pi * sum(u / 2 ** (k + 1) for k, u in enumerate(bit_list))
    if wrap and phi > math.pi:
        phi -= 2 * math.pi
    return phi
