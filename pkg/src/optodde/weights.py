"""Detector weight functions ``f_w``.

A :class:`WeightFunction` is a named, parameterised evaluator. Planar weights
are evaluated at Cartesian nodes ``(x, y)``; spherical ones at ``(theta,
phi)`` nodes of a collection cap. Piecewise weights record the x positions of
their jumps in ``edges`` so callers can check they sit on cell boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, DomainError, PreconditionError
from .quadrature import CartesianGrid2D, Grid1D, SolidAngleGrid


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle; leave the y bounds open for a full-height strip."""

    x_lo: float
    x_hi: float
    y_lo: float = -np.inf
    y_hi: float = np.inf

    def contains(self, X, Y):
        return (X > self.x_lo) & (X < self.x_hi) & (Y > self.y_lo) & (Y < self.y_hi)

    @property
    def is_strip(self) -> bool:
        return np.isinf(self.y_lo) and np.isinf(self.y_hi)


@dataclass(frozen=True)
class WeightFunction:
    kind: str
    evaluator: Callable = field(repr=False, compare=False)
    domain: str = "plane"
    params: tuple = ()
    edges: tuple = ()
    y_independent: bool = True

    def sample(self, grid) -> np.ndarray:
        if isinstance(grid, SolidAngleGrid):
            if self.domain != "sphere":
                raise DomainError(f"{self.kind} is a planar weight; grid is a solid-angle grid")
        elif self.domain != "plane":
            raise DomainError(f"{self.kind} is a spherical weight; grid is Cartesian")
        a, b = grid.mesh
        out = np.asarray(self.evaluator(a, b), dtype=float)
        return np.broadcast_to(out, grid.shape).copy()

    def scaled(self, c: float) -> "WeightFunction":
        ev = self.evaluator
        return WeightFunction(f"{self.kind}*{c:g}", lambda a, b: c * ev(a, b), self.domain,
                              self.params + (("scale", c),), self.edges, self.y_independent)

    def excluding(self, region: Region) -> "WeightFunction":
        """Same weighting with ``region`` blocked (``f_w = 0`` there)."""
        if self.domain != "plane":
            raise DomainError("regions are defined on planar detectors")
        ev = self.evaluator
        edges = tuple(sorted(set(self.edges) | {region.x_lo, region.x_hi}))
        return WeightFunction(f"{self.kind}-excl", lambda X, Y: np.where(region.contains(X, Y), 0.0, ev(X, Y)),
                              self.domain, self.params + (("excluded", region),), edges,
                              self.y_independent and region.is_strip)

    def aligned_to(self, grid: CartesianGrid2D | Grid1D) -> bool:
        g = grid.xgrid if isinstance(grid, CartesianGrid2D) else grid
        return all(g.is_boundary(e) for e in self.edges if g.x_min < e < g.x_max)


# ---------------------------------------------------------------------------
# planar weights
# ---------------------------------------------------------------------------

def qpd(axis: str = "x") -> WeightFunction:
    """Split detector: +1 on the positive half, -1 on the negative half."""
    i = _axis(axis)
    return WeightFunction("qpd", lambda X, Y: np.sign((X, Y)[i]), params=(("axis", axis),),
                          edges=(0.0,) if i == 0 else (), y_independent=(i == 0))


def blocked_qpd(B: float, axis: str = "x") -> WeightFunction:
    """Split detector with a centred opaque strip of full width ``B``."""
    if B < 0:
        raise PreconditionError("block width must be non-negative")
    if B == 0:
        wf = qpd(axis)
        return WeightFunction("blocked_qpd", wf.evaluator, params=(("B", 0.0), ("axis", axis)),
                              edges=wf.edges, y_independent=wf.y_independent)
    i = _axis(axis)
    h = 0.5 * B

    def ev(X, Y):
        c = (X, Y)[i]
        return np.where(np.abs(c) > h, np.sign(c), 0.0)

    return WeightFunction("blocked_qpd", ev, params=(("B", float(B)), ("axis", axis)),
                          edges=(-h, h) if i == 0 else (), y_independent=(i == 0))


def snap_block(B: float, grid: CartesianGrid2D) -> float:
    """Block width whose edges land on cell boundaries of a symmetric grid."""
    if not np.isclose(grid.x_min, -grid.x_max) or grid.nx % 2:
        raise DomainError("block snapping needs a symmetric grid with an even node count")
    return 2.0 * grid.dx * round(B / (2.0 * grid.dx))


def linear(scale: float, axis: str = "x") -> WeightFunction:
    """Position-sensing weight ``f_w = x / scale``."""
    i = _axis(axis)
    return WeightFunction("linear", lambda X, Y: (X, Y)[i] / scale,
                          params=(("scale", scale), ("axis", axis)), y_independent=(i == 0))


def array_1d(pitch: float, gap: float = 0.0, offset: float = 0.0) -> WeightFunction:
    """Photodiode array with alternating +-1 elements of period ``pitch``.

    Element ``j`` covers ``[offset + j*pitch, offset + (j+1)*pitch]`` shrunk
    symmetrically about its centre by the gap fraction ``gap``; it carries
    sign ``(-1)**j``, i.e. ``sign(sin(pi (x - offset)/pitch))``.
    """
    if not 0.0 <= gap < 1.0:
        raise PreconditionError("gap fraction must lie in [0, 1)")

    def ev(X, Y):
        t = (X - offset) / pitch
        j = np.floor(t)
        frac = t - j
        active = (frac >= 0.5 * gap) & (frac <= 1.0 - 0.5 * gap)
        return np.where(active, 1.0 - 2.0 * (j % 2), 0.0)

    return WeightFunction("array_1d", ev, params=(("pitch", pitch), ("gap", gap), ("offset", offset)))


def threshold_mask(psi: Callable, threshold: float) -> WeightFunction:
    """Single detector behind a mask open where ``psi(x, y) > threshold``."""
    return WeightFunction("threshold_mask", lambda X, Y: (psi(X, Y) > threshold).astype(float),
                          params=(("threshold", threshold),), y_independent=False)


def custom(values: np.ndarray, grid) -> WeightFunction:
    """Per-node weights frozen on one grid."""
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(grid.shape):
        raise DimensionError("custom weights must match the grid")
    domain = "sphere" if isinstance(grid, SolidAngleGrid) else "plane"

    def ev(a, b):
        if a.shape != values.shape:
            raise DimensionError("custom weights were sampled for a different grid")
        return values

    return WeightFunction("custom", ev, domain=domain, params=(("grid", grid),), y_independent=False)


def _axis(axis: str) -> int:
    if axis not in ("x", "y"):
        raise PreconditionError(f"unknown axis {axis!r}")
    return 0 if axis == "x" else 1


# ---------------------------------------------------------------------------
# weights on the collection sphere
# ---------------------------------------------------------------------------

def sphere_qpd(axis: str = "y0") -> WeightFunction:
    """QPD behind an aplanatic collection lens.

    The lens maps direction ``(theta, phi)`` to the pupil point
    ``f sin(theta) (cos phi, sin phi)``; the split line therefore follows the
    sign of ``sin(phi)`` for y detection and ``cos(phi)`` for x detection.
    """
    trig = _sphere_trig(axis)
    return WeightFunction(f"sphere_qpd_{axis}", lambda t, p: np.sign(trig(p)), domain="sphere",
                          params=(("axis", axis),), y_independent=False)


def sphere_blocked_qpd(theta_b: float, axis: str = "y0", geometry: str = "strip") -> WeightFunction:
    """QPD with a central block parameterised by an angle ``theta_b``.

    ``strip``: blocks directions within ``theta_b`` of the split plane, i.e.
    a pupil strip ``|sin(theta) sin(phi)| < sin(theta_b)`` for y0 (``cos``
    for x0). ``cap``: blocks the cone ``theta < theta_b`` about the axis.
    """
    if theta_b < 0:
        raise PreconditionError("block angle must be non-negative")
    trig = _sphere_trig(axis)
    s = np.sin(theta_b)
    if geometry == "strip":
        def ev(t, p):
            c = np.sin(t) * trig(p)
            return np.where(np.abs(c) >= s, np.sign(c), 0.0)
    elif geometry == "cap":
        def ev(t, p):
            return np.where(t >= theta_b, np.sign(trig(p)), 0.0)
    else:
        raise PreconditionError(f"unknown block geometry {geometry!r}")
    return WeightFunction(f"sphere_blocked_qpd_{geometry}", ev, domain="sphere",
                          params=(("theta_b", float(theta_b)), ("axis", axis), ("geometry", geometry)),
                          y_independent=False)


def sphere_linear(axis: str = "y0") -> WeightFunction:
    """Pupil-linear weighting ``sin(theta) sin(phi)`` (y0) or ``cos`` (x0)."""
    trig = _sphere_trig(axis)
    return WeightFunction(f"sphere_linear_{axis}", lambda t, p: np.sin(t) * trig(p), domain="sphere",
                          params=(("axis", axis),), y_independent=False)


def _sphere_trig(axis):
    if axis == "y0":
        return np.sin
    if axis == "x0":
        return np.cos
    raise PreconditionError(f"unsupported axis {axis!r} (z0 is not modelled)")
