"""Density-matrix operations for the driven two-level (pseudo-spin-1/2) probe.

Conventions used throughout the package:

* states are 2x2 density matrices in the {|0>, |1>} basis, |0> the bright
  (optically detected) level;
* rotations are R_n(theta) = exp(-i (sigma . n) theta / 2), so two pi/2
  pulses about the same axis compose to a pi pulse;
* free evolution at detuning phase phi applies U(phi) = diag(1, e^{-i phi}),
  i.e. the accumulated phase rides on |1>;
* the feedback (control) rotation advances the |1> phase the opposite way,
  R(Phi) = diag(1, e^{+i Phi});
* Gaussian dephasing over time t multiplies the coherences by
  D(t) = exp(-(t / T2*)^2).

With these choices the standard sequence pi/2 - evolve - control - pi/2 on
|0><0| ends with populations (1 -/+ D cos(phi - Phi)) / 2 on |0> / |1>, and
bright-state detection therefore fires with probability
(1 - D cos(phi - Phi)) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_ATOL = 1e-12  # construction-time validation tolerance
_AXIS_ATOL = 1e-9

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class QubitState:
    """Immutable 2x2 density matrix, validated on construction."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError(f"density matrix must be 2x2, got {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > _ATOL:
            raise ValueError("density matrix is not Hermitian")
        tr = rho.trace().real
        if abs(tr - 1.0) > _ATOL:
            raise ValueError(f"trace must be 1, got {tr!r}")
        # closed-form eigenvalue bound for a 2x2 Hermitian matrix
        a = rho[0, 0].real
        b = rho[1, 1].real
        lam_min = 0.5 * (a + b) - math.hypot(0.5 * (a - b), abs(rho[0, 1]))
        if lam_min < -_ATOL:
            raise ValueError(f"density matrix not positive, min eigenvalue {lam_min:g}")
        purity = (a * a + b * b + 2.0 * abs(rho[0, 1]) ** 2)
        if purity > 1.0 + _ATOL:
            raise ValueError(f"purity {purity!r} exceeds 1")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def populations(self) -> tuple[float, float]:
        return self.rho[0, 0].real, self.rho[1, 1].real

    @property
    def prob_zero(self) -> float:
        """Probability of projecting onto the bright |0> level."""
        return self.rho[0, 0].real

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


@dataclass(frozen=True)
class UnitaryOp:
    """Immutable 2x2 unitary, validated on construction."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError(f"unitary must be 2x2, got {u.shape}")
        if np.abs(u @ u.conj().T - np.eye(2)).max() > _ATOL:
            raise ValueError("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class DephasingModel:
    """Gaussian free-induction decay envelope D(t) = exp(-(t/T2*)^2)."""

    t2_star: float

    def __post_init__(self):
        if not self.t2_star > 0:
            raise ValueError("t2_star must be positive")

    def envelope(self, t: float) -> float:
        if t < 0:
            raise ValueError("evolution time must be nonnegative")
        return math.exp(-((t / self.t2_star) ** 2))


@dataclass(frozen=True)
class DriveParams:
    """Microwave drive: Rabi and qubit angular frequencies (rad/s)."""

    rabi_freq: float
    qubit_freq: float

    def __post_init__(self):
        if self.rabi_freq < 0 or self.qubit_freq <= 0:
            raise ValueError("frequencies must be positive (rabi_freq may be 0)")


def ground_state() -> QubitState:
    return QubitState(np.array([[1, 0], [0, 0]], dtype=complex))


def plus_state() -> QubitState:
    """(|0> + |1>)/sqrt(2) as a density matrix."""
    return QubitState(np.full((2, 2), 0.5, dtype=complex))


def rotation(axis, angle: float) -> UnitaryOp:
    """exp(-i (sigma . axis) angle / 2) for a unit 3-vector axis.

    Uses the closed form cos(a/2) I - i sin(a/2) (sigma . n); the matrix for
    (y, pi/2) is [[c, -s], [s, c]] with c = s = 1/sqrt(2).
    """
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,):
        raise ValueError("axis must be a 3-vector")
    norm = math.sqrt(float(n @ n))
    if abs(norm - 1.0) > _AXIS_ATOL:
        raise ValueError(f"axis must be a unit vector, |axis| = {norm!r}")
    half = 0.5 * angle
    gen = n[0] * _SIGMA_X + n[1] * _SIGMA_Y + n[2] * _SIGMA_Z
    return UnitaryOp(math.cos(half) * np.eye(2) - 1j * math.sin(half) * gen)


def apply_unitary(state: QubitState, op: UnitaryOp) -> QubitState:
    return QubitState(op.u @ state.rho @ op.u.conj().T)


def phase_evolution(state: QubitState, phi: float, power: int = 1) -> QubitState:
    """Apply U(phi)^power with U = diag(1, e^{-i phi}).

    power counts repeated applications of the elementary unitary, so the net
    effect is a single phase phi * power on |1>; any nonnegative integer is
    accepted.
    """
    if not isinstance(power, (int, np.integer)):
        raise ValueError("power must be an integer")
    if power < 0:
        raise ValueError("power must be nonnegative")
    phase = np.exp(-1j * (phi * power))
    rho = state.rho
    out = np.array(
        [[rho[0, 0], rho[0, 1] * np.conj(phase)],
         [rho[1, 0] * phase, rho[1, 1]]]
    )
    return QubitState(out)


def feedback_rotation(phi_control: float) -> UnitaryOp:
    """Control rotation R(Phi) = diag(1, e^{+i Phi}) used before readout."""
    return UnitaryOp(np.array([[1, 0], [0, np.exp(1j * phi_control)]], dtype=complex))


def apply_dephasing(state: QubitState, t: float, model: DephasingModel) -> QubitState:
    """Damp the coherences by the Gaussian envelope for evolution time t."""
    d = model.envelope(t)
    rho = state.rho
    out = np.array(
        [[rho[0, 0], rho[0, 1] * d],
         [rho[1, 0] * d, rho[1, 1]]]
    )
    return QubitState(out)
