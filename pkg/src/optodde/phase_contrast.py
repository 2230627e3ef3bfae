"""Phase-contrast imaging of membrane modes.

The image plane carries ``u0 = i u_in`` and ``us = 2i psi u_in`` at unit
magnification, so intensity follows the mode shape directly. Two detector
schemes are modelled: a 1-D photodiode array with two elements per
mechanical period (optionally with gaps) and a single detector behind a
binary threshold mask.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import weights
from .detection import DetectionBudget, OptimizationResult, budget, scan_1d
from .errors import DegenerateWeightingError, PreconditionError
from .fields import (FieldPair, MembraneConfig, OpticalParams, gaussian_input, membrane_mode,
                     phase_contrast_image)
from .quadrature import CartesianGrid2D

GRATING_THRESHOLD = 2.0  # k_m w0 below this is outside the grating limit


def _grating_check(value: float, label: str, threshold: float):
    if value < threshold:
        warnings.warn(f"{label} = {value:.3g} is below the diffraction-grating limit "
                      f"({threshold}); finite-envelope corrections apply", stacklevel=3)


def array_grid(cfg: MembraneConfig, samples_per_pitch: int = 200, ny: int = 128,
               span: float = 6.0) -> CartesianGrid2D:
    """Image grid with cell boundaries on every array element edge.

    The half-width is a whole number of pitches ``pi/k_m`` covering ``span*w0``.
    """
    if samples_per_pitch < 2 or samples_per_pitch % 2:
        raise PreconditionError("samples_per_pitch must be an even integer >= 2")
    pitch = math.pi / cfg.k_m
    n_half = int(math.ceil(span * cfg.w0 / pitch))
    half_y = span * cfg.w0
    return CartesianGrid2D.symmetric(n_half * pitch, half_y, 2 * n_half * samples_per_pitch, ny)


def image_fields(cfg: MembraneConfig, grid: CartesianGrid2D) -> FieldPair:
    u_in = gaussian_input(cfg, grid)
    return phase_contrast_image(u_in, membrane_mode(cfg, grid), grid)


def snap_gap(gap: float, samples_per_pitch: int) -> float:
    """Nearest gap fraction whose element edges land on cell boundaries."""
    step = 2.0 / samples_per_pitch
    return step * round(gap / step)


def array_budget(cfg: MembraneConfig, gap: float = 0.0, params: OpticalParams = OpticalParams(),
                 samples_per_pitch: int = 200, ny: int = 128,
                 threshold: float = GRATING_THRESHOLD, fields: FieldPair | None = None) -> DetectionBudget:
    """Budget for alternating +-1 elements centred on the mode antinodes."""
    if cfg.n != 1:
        raise PreconditionError("the 1-D array scheme applies to n = 1 modes")
    _grating_check(cfg.k_m * cfg.w0, "k_m w0", threshold)
    if fields is None:
        fields = image_fields(cfg, array_grid(cfg, samples_per_pitch, ny))
    g = snap_gap(gap, samples_per_pitch)
    fw = weights.array_1d(math.pi / cfg.k_m, g)
    return budget(fields, fw, params)


def limit_array_eta(gap: float | np.ndarray) -> float | np.ndarray:
    """Grating-limit efficiency ``(8/pi^2) cos^2(g pi/2) / (1 - g)``.

    With a gap fraction ``g`` the active part of each half period keeps
    ``int |sin|`` over ``cos(g pi/2)`` and a noise share ``1 - g``.
    """
    g = np.asarray(gap, dtype=float)
    return 8 / np.pi ** 2 * np.cos(g * np.pi / 2) ** 2 / (1 - g)


@dataclass(frozen=True)
class GapResult:
    scan: OptimizationResult
    gap: float
    eta: float
    eta_no_gap: float


def optimize_gap(cfg: MembraneConfig, params: OpticalParams = OpticalParams(),
                 samples_per_pitch: int = 200, ny: int = 128, g_max: float = 0.6) -> GapResult:
    fields = image_fields(cfg, array_grid(cfg, samples_per_pitch, ny))
    step = 2.0 / samples_per_pitch
    gaps = step * np.arange(int(round(g_max / step)) + 1)
    scan = scan_1d(lambda g: array_budget(cfg, g, params, samples_per_pitch, fields=fields).eta,
                   samples=gaps)
    return GapResult(scan, scan.argmax, float(scan.values.max()), float(scan.values[0]))


# ---------------------------------------------------------------------------
# threshold mask
# ---------------------------------------------------------------------------

def mask_grid(cfg: MembraneConfig, n: int = 1024, span: float = 6.0) -> CartesianGrid2D:
    half = span * cfg.w0
    return CartesianGrid2D.symmetric(half, half, n, n)


def _psi(cfg):
    return lambda X, Y: np.sin(cfg.k_m * X) * np.cos(cfg.k_n * Y)


def threshold_mask_budget(cfg: MembraneConfig, psi_threshold: float,
                          params: OpticalParams = OpticalParams(), n: int = 1024,
                          threshold: float = GRATING_THRESHOLD,
                          fields: FieldPair | None = None) -> DetectionBudget:
    """Single detector behind a mask that is open where ``psi > psi_threshold``."""
    if psi_threshold >= 1.0:
        raise DegenerateWeightingError("threshold >= 1 closes the whole mask")
    _grating_check(min(cfg.k_m, cfg.k_n) * cfg.w0, "min(k_m, k_n) w0", threshold)
    if fields is None:
        fields = image_fields(cfg, mask_grid(cfg, n))
    return budget(fields, weights.threshold_mask(_psi(cfg), psi_threshold), params)


def optimize_threshold(cfg: MembraneConfig, params: OpticalParams = OpticalParams(), n: int = 1024,
                       lo: float = 0.0, hi: float = 0.6, n_samples: int = 121) -> OptimizationResult:
    fields = image_fields(cfg, mask_grid(cfg, n))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return scan_1d(lambda t: threshold_mask_budget(cfg, t, params, fields=fields).eta,
                       lo, hi, n_samples)


def emit_mask(cfg: MembraneConfig, psi_threshold: float, grid: CartesianGrid2D | None = None) -> np.ndarray:
    """Binary raster, 1 = transparent, indexed ``[ix, iy]`` like the grid."""
    grid = mask_grid(cfg) if grid is None else grid
    X, Y = grid.mesh
    return (_psi(cfg)(X, Y) > psi_threshold).astype(np.uint8)


def write_pgm(path: str | Path, mask: np.ndarray) -> None:
    """Binary PGM, rows = y (top = +y), white = open."""
    img = (np.flipud(mask.T) * 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_mask_csv(path: str | Path, mask: np.ndarray) -> None:
    np.savetxt(path, mask.T, fmt="%d", delimiter=",")
