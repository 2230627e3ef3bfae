"""Deterministic quadrature on Cartesian and solid-angle grids.

One rule is used throughout: the composite midpoint rule. Samples sit at cell
centres, so every cell boundary is a place where a weight function may jump
without spoiling convergence. Builders that place detector edges (QPD split,
block edges, wire edges) snap them onto these boundaries.

On the sphere the nodes are cell centres of a uniform (theta, phi) lattice and
each node carries the exact solid angle of its cell,
``2 sin(theta_i) sin(dtheta/2) dphi``. Those weights telescope, so the total
is exactly ``2 pi (1 - cos theta_max)`` and the pole needs no special casing.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import kernels
from .errors import ConvergenceError, DimensionError, PreconditionError


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise PreconditionError("grid needs at least 2 samples")
        if not self.x_max > self.x_min:
            raise PreconditionError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n) + 0.5) * self.dx

    @cached_property
    def edges(self) -> np.ndarray:
        return self.x_min + np.arange(self.n + 1) * self.dx

    def snap(self, value: float) -> float:
        """Nearest cell boundary to ``value``."""
        j = round((value - self.x_min) / self.dx)
        return self.x_min + min(max(j, 0), self.n) * self.dx

    def is_boundary(self, value: float, rtol: float = 1e-9) -> bool:
        j = (value - self.x_min) / self.dx
        return abs(j - round(j)) <= rtol * max(1.0, abs(j))


@dataclass(frozen=True)
class CartesianGrid2D:
    """Uniform midpoint grid; arrays are indexed ``[ix, iy]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        Grid1D(self.x_min, self.x_max, self.nx)
        Grid1D(self.y_min, self.y_max, self.ny)

    @classmethod
    def symmetric(cls, half_x: float, half_y: float, nx: int, ny: int) -> "CartesianGrid2D":
        return cls(-half_x, half_x, -half_y, half_y, nx, ny)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @cached_property
    def xgrid(self) -> Grid1D:
        return Grid1D(self.x_min, self.x_max, self.nx)

    @cached_property
    def ygrid(self) -> Grid1D:
        return Grid1D(self.y_min, self.y_max, self.ny)

    @property
    def dx(self) -> float:
        return self.xgrid.dx

    @property
    def dy(self) -> float:
        return self.ygrid.dx

    @property
    def x(self) -> np.ndarray:
        return self.xgrid.nodes

    @property
    def y(self) -> np.ndarray:
        return self.ygrid.nodes

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.x, self.y, indexing="ij"))

    @cached_property
    def row_weights(self) -> np.ndarray:
        return np.full(self.nx, self.dx * self.dy)

    def refined(self, factor: int = 2) -> "CartesianGrid2D":
        return CartesianGrid2D(self.x_min, self.x_max, self.y_min, self.y_max,
                               self.nx * factor, self.ny * factor)


@dataclass(frozen=True)
class SolidAngleGrid:
    """Uniform (theta, phi) midpoint lattice over the cap ``theta < theta_max``.

    ``theta_max`` may go up to pi to cover the whole sphere; collection caps
    use ``arcsin(NA) <= pi/2``. Arrays are indexed ``[itheta, iphi]``.
    """

    theta_max: float
    n_theta: int
    n_phi: int

    def __post_init__(self):
        if not 0.0 < self.theta_max <= np.pi:
            raise PreconditionError("theta_max must lie in (0, pi]")
        if self.n_theta < 2 or self.n_phi < 2:
            raise PreconditionError("grid needs at least 2 samples per axis")

    @classmethod
    def collection_cap(cls, na: float, n_theta: int, n_phi: int) -> "SolidAngleGrid":
        if not 0.0 < na <= 1.0:
            raise PreconditionError("numerical aperture must lie in (0, 1]")
        return cls(float(np.arcsin(na)), n_theta, n_phi)

    @classmethod
    def full_sphere(cls, n_theta: int, n_phi: int) -> "SolidAngleGrid":
        return cls(np.pi, n_theta, n_phi)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def dtheta(self) -> float:
        return self.theta_max / self.n_theta

    @property
    def dphi(self) -> float:
        return 2 * np.pi / self.n_phi

    @cached_property
    def theta(self) -> np.ndarray:
        return (np.arange(self.n_theta) + 0.5) * self.dtheta

    @cached_property
    def phi(self) -> np.ndarray:
        return (np.arange(self.n_phi) + 0.5) * self.dphi

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.theta, self.phi, indexing="ij"))

    @cached_property
    def row_weights(self) -> np.ndarray:
        return 2.0 * np.sin(self.theta) * np.sin(0.5 * self.dtheta) * self.dphi

    @cached_property
    def weights(self) -> np.ndarray:
        return np.repeat(self.row_weights[:, None], self.n_phi, axis=1)

    @property
    def solid_angle(self) -> float:
        return 2 * np.pi * (1 - np.cos(self.theta_max))

    def refined(self, factor: int = 2) -> "SolidAngleGrid":
        return SolidAngleGrid(self.theta_max, self.n_theta * factor, self.n_phi * factor)


def _check_shape(f, grid):
    f = np.asarray(f)
    if np.iscomplexobj(f):
        raise TypeError("integrands must be real; take Re/abs first")
    if f.shape != grid.shape:
        raise DimensionError(f"sample shape {f.shape} does not match grid {grid.shape}")
    return f


def integrate_2d(f, grid: CartesianGrid2D, parallel: bool = False) -> float:
    """Composite midpoint integral of samples ``f`` over ``grid``."""
    f = _check_shape(f, grid)
    return kernels.row_weighted_sum(f, grid.row_weights, parallel)


def integrate_sphere(f, grid: SolidAngleGrid, parallel: bool = False) -> float:
    """Solid-angle integral of samples ``f``; the sin(theta) Jacobian is in the weights."""
    f = _check_shape(f, grid)
    return kernels.row_weighted_sum(f, grid.row_weights, parallel)


def integrate(f, grid, parallel: bool = False) -> float:
    if isinstance(grid, SolidAngleGrid):
        return integrate_sphere(f, grid, parallel)
    return integrate_2d(f, grid, parallel)


def integrate_1d(f, grid: Grid1D) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise DimensionError(f"sample shape {f.shape} does not match grid ({grid.n},)")
    return kernels.row_weighted_sum(f[:, None], np.full(grid.n, grid.dx))


def refine_until(evaluate: Callable, make_grid: Callable[[int], object], rel_tol: float,
                 n_start: int = 16, max_levels: int = 10):
    """Double the resolution until successive values agree to ``rel_tol``.

    ``make_grid(n)`` builds the grid at base resolution ``n``;
    ``evaluate(grid)`` returns the integral on it. Returns
    ``(value, grid, levels)`` where ``value`` is the finer estimate.
    """
    if not rel_tol > 0:
        raise PreconditionError("rel_tol must be positive")
    n = n_start
    grid = make_grid(n)
    previous = evaluate(grid)
    for level in range(1, max_levels + 1):
        n *= 2
        grid = make_grid(n)
        current = evaluate(grid)
        if abs(current - previous) <= rel_tol * abs(current):
            return current, grid, level
        if level == max_levels:
            raise ConvergenceError(f"no convergence after {max_levels} refinements", previous, current)
        previous = current
    raise ConvergenceError("max_levels must be at least 1", previous, previous)
