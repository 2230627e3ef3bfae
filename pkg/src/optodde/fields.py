"""Scalar optical mode functions for reflection from a vibrating membrane.

The reflected field is linearised in the mode amplitude ``A``::

    u_out = u0 + k A us,      us = (1/k) du_out/dA

and every builder here returns the pair ``(u0, us)`` sampled on a grid. The
membrane imprints a phase ``2 k A psi_mn`` on the Gaussian input, so at the
device plane ``us = 2i psi_mn u_in``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import kernels
from .errors import (DimensionError, DomainError, LimitInvalidError, PreconditionError,
                     TruncationError, UnsupportedModeError)
from .quadrature import CartesianGrid2D, integrate

HBAR = 1.054571817e-34  # J s


@dataclass(frozen=True)
class OpticalParams:
    """Probe light.

    ``alpha`` is the coherent amplitude (sqrt(photons/s)) of the stationary
    field. ``alpha_signal`` is the amplitude carried by the signal field; it
    defaults to ``alpha`` (reflection) and differs for a dipole scatterer,
    where the signal rides on the scattered amplitude.
    """

    wavelength: float = 1064e-9
    alpha: float = 1.0
    alpha_signal: float | None = None
    hbar: float = HBAR

    def __post_init__(self):
        if not self.wavelength > 0:
            raise PreconditionError("wavelength must be positive")
        if self.alpha < 0 or (self.alpha_signal is not None and self.alpha_signal < 0):
            raise PreconditionError("amplitudes must be non-negative")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def alpha_s(self) -> float:
        return self.alpha if self.alpha_signal is None else self.alpha_signal


@dataclass(frozen=True)
class MembraneConfig:
    """Rectangular membrane, probe waist and detector distance (SI units).

    The default detection distance puts the far-field waist at 560 um for a
    100 um waist at 1064 nm.
    """

    Lx: float = 1.5e-3
    Ly: float = 3.5e-3
    m: int = 2
    n: int = 1
    w0: float = 100e-6
    z_d: float = 0.33069
    lever_threshold: float = 0.25

    def __post_init__(self):
        for name in ("Lx", "Ly", "w0", "z_d"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be positive")
        if self.m < 1 or self.n < 1:
            raise PreconditionError("mode indices must be positive integers")

    @property
    def k_m(self) -> float:
        return np.pi * self.m / self.Lx

    @property
    def k_n(self) -> float:
        return np.pi * self.n / self.Ly

    def w_d(self, k: float) -> float:
        """Far-field waist ``z_d / (k w0)``."""
        return self.z_d / (k * self.w0)

    def with_mode(self, m: int, n: int = 1) -> "MembraneConfig":
        return replace(self, m=m, n=n)

    @classmethod
    def for_detector_waist(cls, w_d: float, k: float, **kw) -> "MembraneConfig":
        w0 = kw.get("w0", cls.w0)
        return cls(z_d=w_d * k * w0, **kw)

    def check_mode(self):
        if self.m % 2 or not self.n % 2:
            raise UnsupportedModeError(
                f"mode ({self.m},{self.n}): only m even, n odd modes are implemented")


@dataclass(frozen=True, eq=False)
class FieldPair:
    """Stationary field ``u0`` and signal field ``us`` on a common grid.

    Scalar fields have the grid's shape. Vector far fields (sphere grids)
    carry a leading component axis ``(theta_hat, phi_hat)``.
    """

    u0: np.ndarray
    us: np.ndarray
    grid: object
    plane: str = "far"

    def __post_init__(self):
        shape = tuple(self.grid.shape)
        for name in ("u0", "us"):
            a = getattr(self, name)
            if tuple(a.shape[-2:]) != shape or a.ndim not in (2, 3):
                raise DimensionError(f"{name} shape {a.shape} does not match grid {shape}")
        if self.u0.shape != self.us.shape:
            raise DimensionError("u0 and us must have the same shape")

    @property
    def is_vector(self) -> bool:
        return self.u0.ndim == 3

    def _sum_components(self, a):
        return a.sum(axis=0) if self.is_vector else a

    @cached_property
    def cross(self) -> np.ndarray:
        """``Re[u0 . us*]`` per node."""
        return self._sum_components((self.u0 * np.conj(self.us)).real)

    @cached_property
    def stationary_density(self) -> np.ndarray:
        return self._sum_components(np.abs(self.u0) ** 2)

    @cached_property
    def signal_density(self) -> np.ndarray:
        return self._sum_components(np.abs(self.us) ** 2)

    def norm0(self) -> float:
        return integrate(self.stationary_density, self.grid)

    def signal_norm(self) -> float:
        return integrate(self.signal_density, self.grid)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def device_grid(cfg: MembraneConfig, n: int = 256, span: float = 6.0) -> CartesianGrid2D:
    """Square grid of ``+-span*w0`` at the membrane."""
    half = span * cfg.w0
    return CartesianGrid2D.symmetric(half, half, n, n)


def far_grid(cfg: MembraneConfig, k: float, nx: int = 1024, ny: int = 256,
             span: float = 6.0) -> CartesianGrid2D:
    """Detector-plane grid wide enough for the first diffraction orders."""
    wd = cfg.w_d(k)
    half_x = cfg.z_d * cfg.k_m / k + span * wd
    half_y = cfg.z_d * cfg.k_n / k + span * wd
    return CartesianGrid2D.symmetric(half_x, half_y, nx, ny)


# ---------------------------------------------------------------------------
# mode functions
# ---------------------------------------------------------------------------

def gaussian_input(cfg: MembraneConfig, grid: CartesianGrid2D) -> np.ndarray:
    """Normalised Gaussian ``sqrt(1/(pi w0^2)) exp(-(x^2+y^2)/(2 w0^2))``."""
    reach = 6.0 * cfg.w0 * (1 - 1e-9)
    if (grid.x_min > -reach or grid.x_max < reach
            or grid.y_min > -reach or grid.y_max < reach):
        raise TruncationError("grid must span at least +-6 w0 around the beam centre")
    X, Y = grid.mesh
    w0 = cfg.w0
    return (np.sqrt(1.0 / (np.pi * w0 ** 2))
            * np.exp(-(X ** 2 + Y ** 2) / (2 * w0 ** 2))).astype(np.complex128)


def membrane_mode(cfg: MembraneConfig, grid: CartesianGrid2D) -> np.ndarray:
    """``psi_mn = sin(k_m x) cos(k_n y)`` with the beam on the x node line."""
    cfg.check_mode()
    X, Y = grid.mesh
    return np.sin(cfg.k_m * X) * np.cos(cfg.k_n * Y)


def reflect(u_in: np.ndarray, psi: np.ndarray, grid: CartesianGrid2D) -> FieldPair:
    if u_in.shape != psi.shape:
        raise DimensionError("input field and mode shape must share a grid")
    return FieldPair(u0=u_in, us=2j * psi * u_in, grid=grid, plane="device")


def phase_contrast_image(u_in: np.ndarray, psi: np.ndarray, grid: CartesianGrid2D) -> FieldPair:
    """Unit-magnification image with a pi/2 phase plate on the zero order."""
    if u_in.shape != psi.shape:
        raise DimensionError("input field and mode shape must share a grid")
    return FieldPair(u0=1j * u_in, us=2j * psi * u_in, grid=grid, plane="image")


def intensity(pair: FieldPair, params: OpticalParams, amplitude: float) -> np.ndarray:
    """First-order intensity ``alpha^2 (|u0|^2 + 2 k A Re[u0 us*])``."""
    return params.alpha ** 2 * (pair.stationary_density + 2 * params.k * amplitude * pair.cross)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def fraunhofer(u: np.ndarray, grid_in: CartesianGrid2D, cfg: MembraneConfig, k: float,
               grid_out: CartesianGrid2D) -> np.ndarray:
    """Far field at ``z_d`` by direct quadrature of the Fraunhofer integral.

    ``u(x, y) = e^{ikz}/(i lambda z) * int u(x', y') e^{ik(x x' + y y')/z} da'``
    """
    if u.shape != grid_in.shape:
        raise DimensionError("field does not match the input grid")
    wd = cfg.w_d(k)
    need_x = cfg.z_d * cfg.k_m / k + 4 * wd
    if max(-grid_out.x_min, grid_out.x_max) < need_x:
        raise DomainError(
            f"output grid half-width {grid_out.x_max:.3e} m < {need_x:.3e} m needed "
            "to hold the diffraction orders")
    if cfg.z_d < 5 * k * cfg.w0 ** 2:
        warnings.warn("z_d is within a few Rayleigh ranges; Fraunhofer result is approximate",
                      stacklevel=2)
    scale = k / cfg.z_d
    # y pass then x pass; kernel is separable
    tmp = kernels.dft_last_axis(u, grid_in.y, grid_out.y, scale, grid_in.dy)
    out = kernels.dft_last_axis(np.ascontiguousarray(tmp.T), grid_in.x, grid_out.x,
                                scale, grid_in.dx).T
    wavelength = 2 * np.pi / k
    prefactor = np.exp(1j * k * cfg.z_d) / (1j * wavelength * cfg.z_d)
    return np.ascontiguousarray(prefactor * out)


def propagate(pair: FieldPair, cfg: MembraneConfig, k: float,
              grid_out: CartesianGrid2D) -> FieldPair:
    return FieldPair(u0=fraunhofer(pair.u0, pair.grid, cfg, k, grid_out),
                     us=fraunhofer(pair.us, pair.grid, cfg, k, grid_out),
                     grid=grid_out, plane="far")


def membrane_far_field(cfg: MembraneConfig, params: OpticalParams, device_n: int = 256,
                       far_nx: int = 1024, far_ny: int = 256,
                       grid_out: CartesianGrid2D | None = None) -> FieldPair:
    """Reflect the Gaussian from mode ``(m, n)`` and propagate to the detector."""
    gin = device_grid(cfg, device_n)
    u_in = gaussian_input(cfg, gin)
    pair = reflect(u_in, membrane_mode(cfg, gin), gin)
    if grid_out is None:
        grid_out = far_grid(cfg, params.k, far_nx, far_ny)
    return propagate(pair, cfg, params.k, grid_out)


def optical_lever_fields(cfg: MembraneConfig, k: float, grid: CartesianGrid2D,
                         threshold: float | None = None) -> FieldPair:
    """Analytic far field of a tilting flat mirror (HG10 signal mode)."""
    threshold = cfg.lever_threshold if threshold is None else threshold
    for name, kw in (("k_m w0", cfg.k_m * cfg.w0), ("k_n w0", cfg.k_n * cfg.w0)):
        if kw >= threshold:
            raise LimitInvalidError(
                f"{name} = {kw:.3g} is not small (threshold {threshold}); "
                "propagate the reflected field instead")
    wd = cfg.w_d(k)
    X, Y = grid.mesh
    u0 = (-1j * np.exp(1j * k * cfg.z_d) / (np.sqrt(np.pi) * wd)
          * np.exp(-(X ** 2 + Y ** 2) / (2 * wd ** 2)))
    us = -2 * cfg.k_m * cfg.w0 * (X / wd) * u0
    return FieldPair(u0=u0, us=us, grid=grid, plane="far")


def beam_waist(values: np.ndarray, grid: CartesianGrid2D, axis: str = "x") -> float:
    """Waist ``w`` of a field assuming ``|u|^2 ~ exp(-x^2/w^2)`` (second moment)."""
    X, Y = grid.mesh
    c = X if axis == "x" else Y
    p = np.abs(values) ** 2
    return float(np.sqrt(2 * integrate(c ** 2 * p, grid) / integrate(p, grid)))
