"""Point-dipole field maps and single-spin imaging estimates.

A scene is a set of point dipoles under a scan plane; the probe reads the
field component along its quantization axis on a square raster. Resonance
imaging thresholds that map against a target field within a linewidth,
giving the familiar ring contours whose sharpness sets the lateral
resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import DIPOLE_MOMENTS, GAMMA_E, MU0_OVER_4PI


@dataclass(frozen=True)
class Dipole:
    """Point dipole: position (m) and moment vector (J/T)."""

    position: tuple
    moment: tuple
    species: str = ""

    def __post_init__(self):
        if len(self.position) != 3 or len(self.moment) != 3:
            raise ValueError("position and moment must be 3-vectors")

    @classmethod
    def of_species(cls, species: str, position, direction=(0.0, 0.0, 1.0)) -> "Dipole":
        """Dipole with the tabulated moment magnitude along direction."""
        if species not in DIPOLE_MOMENTS:
            raise ValueError(f"unknown species {species!r}")
        d = np.asarray(direction, dtype=float)
        norm = math.sqrt(float(d @ d))
        if norm == 0:
            raise ValueError("direction must be nonzero")
        m = DIPOLE_MOMENTS[species] * d / norm
        return cls(position=tuple(float(x) for x in position),
                   moment=tuple(float(x) for x in m), species=species)


def dipole_field(moment, displacement) -> np.ndarray:
    """B(r) = (mu0/4pi) [3 (m . rhat) rhat - m] / r^3 for displacement r.

    displacement may carry leading broadcast axes (..., 3). A zero
    displacement raises rather than returning NaN.
    """
    m = np.asarray(moment, dtype=float)
    r = np.asarray(displacement, dtype=float)
    r2 = np.sum(r * r, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("field requested at a dipole location")
    rnorm = np.sqrt(r2)
    rhat = r / rnorm[..., None]
    mdotr = np.sum(m * rhat, axis=-1)
    return MU0_OVER_4PI * (3.0 * mdotr[..., None] * rhat - m) / (r2 * rnorm)[..., None]


@dataclass(frozen=True)
class DipoleScene:
    """Dipoles plus scan geometry: plane height, square window, pixel count."""

    dipoles: Sequence[Dipole]
    scan_height: float
    extent: float
    pixels: int = 256
    nv_axis: tuple = (0.0, 0.0, 1.0)
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.scan_height <= 0 or self.extent <= 0:
            raise ValueError("scan_height and extent must be positive")
        if self.pixels < 2:
            raise ValueError("need at least 2 pixels per side")
        axis = np.asarray(self.nv_axis, dtype=float)
        if abs(math.sqrt(float(axis @ axis)) - 1.0) > 1e-9:
            raise ValueError("nv_axis must be a unit vector")

    def grid_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centered pixel coordinates, symmetric about the center."""
        n = self.pixels
        offsets = (np.arange(n) + 0.5 - n / 2) * (self.extent / n)
        return self.center[0] + offsets, self.center[1] + offsets

    def field_map(self) -> np.ndarray:
        """Projected field B . nv_axis on the raster, shape (pixels, pixels),
        row index = y, column index = x."""
        xs, ys = self.grid_coords()
        gx, gy = np.meshgrid(xs, ys)
        probe = np.stack(
            [gx, gy, np.full_like(gx, self.scan_height)], axis=-1)
        axis = np.asarray(self.nv_axis, dtype=float)
        total = np.zeros_like(probe)
        for dip in self.dipoles:
            total = total + dipole_field(dip.moment,
                                         probe - np.asarray(dip.position))
        return total @ axis


def resonance_contour(scene: DipoleScene, target_field: float,
                      linewidth: float = 30e-12) -> np.ndarray:
    """Boolean raster: pixels whose projected field sits within the
    resonance linewidth of the target."""
    if linewidth <= 0:
        raise ValueError("linewidth must be positive")
    return np.abs(scene.field_map() - target_field) < linewidth


def field_gradient(moment_mag: float, r: float) -> float:
    """Lateral dipole-field gradient scale 3 (mu0/4pi) m / r^4 (T/m)."""
    if moment_mag <= 0 or r <= 0:
        raise ValueError("moment and distance must be positive")
    return 3.0 * MU0_OVER_4PI * moment_mag / r ** 4


def resolution(delta_b: float, gradient: float) -> float:
    """Lateral resolution delta_x = delta_B / gradient."""
    if delta_b < 0:
        raise ValueError("delta_b must be nonnegative")
    if not gradient > 0:
        raise ValueError("gradient must be positive")
    return delta_b / gradient


@dataclass(frozen=True)
class PositionErrorBounds:
    """Localization error: printed-formula value and the fractional band."""

    nominal: float
    band_low: float
    band_high: float


def position_error(r: float, t2: float, moment_mag: float) -> PositionErrorBounds:
    """delta_r = 2 pi^2 r^4 / (3 gamma mu0 m T2), with the 30-50% fractional
    working-point band of B_max / grad B (the two coincide up to the
    fraction, so the band is 0.3-0.5 of the nominal value)."""
    if r <= 0 or t2 <= 0 or moment_mag <= 0:
        raise ValueError("r, t2, moment must be positive")
    mu0 = 4.0 * math.pi * MU0_OVER_4PI
    nominal = 2.0 * math.pi ** 2 * r ** 4 / (3.0 * GAMMA_E * mu0 * moment_mag * t2)
    return PositionErrorBounds(nominal=nominal, band_low=0.3 * nominal,
                               band_high=0.5 * nominal)


def write_raster_csv(raster: np.ndarray, path) -> None:
    """Comma-separated grid; booleans as 0/1, fields at full precision."""
    arr = np.asarray(raster)
    with open(path, "w") as fh:
        for row in arr:
            if arr.dtype == bool:
                fh.write(",".join("1" if v else "0" for v in row) + "\n")
            else:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_raster_pgm(raster: np.ndarray, path) -> None:
    """Plain-text PGM (P2). Boolean rasters map to 0/1 with maxval 1;
    numeric maps are scaled to 0..255."""
    arr = np.asarray(raster)
    if arr.dtype == bool:
        levels, maxval = arr.astype(int), 1
    else:
        lo, hi = float(arr.min()), float(arr.max())
        span = hi - lo if hi > lo else 1.0
        levels, maxval = np.round(255 * (arr - lo) / span).astype(int), 255
    with open(path, "w") as fh:
        fh.write(f"P2\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n")
        for row in levels:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")
