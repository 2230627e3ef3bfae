"""Rayleigh scatterer position detection on the collection sphere.

Far fields are vectors with ``(theta_hat, phi_hat)`` components, sampled on
a :class:`~optodde.quadrature.SolidAngleGrid`. The input beam is polarised
along x and propagates along +z. Because ``alpha0 >> alpha_dip`` the
stationary field is the unscattered beam ``u_inf`` alone, and the signal
fields for transverse displacements are

    u_s,x0 = (r.x) u_dip,     u_s,y0 = (r.y) u_dip

with ``u_dip = sqrt(3/8pi) (r (r.x) - x)`` in phase with ``u_inf`` after the
Gouy shift.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import weights
from .detection import (DdeProfile, DetectionBudget, OptimizationResult, budget, dde_map,
                        ideal_dde, ideal_homodyne_budget, scan_1d)
from .errors import PreconditionError
from .fields import FieldPair, OpticalParams
from .quadrature import SolidAngleGrid, integrate
from .weights import WeightFunction

AXES = ("x0", "y0")


@dataclass(frozen=True)
class DipoleConfig:
    """Collection optics and scatterer. ``gouy`` only enters the axial signal, which is not modelled."""

    NA: float = 1.0
    alpha0: float = 1.0
    alpha_dip: float = 1e-3
    wavelength: float = 1064e-9
    axis: str = "y0"
    gouy: float = 1.0
    n_theta: int = 400
    n_phi: int = 512

    def __post_init__(self):
        if not 0 < self.NA <= 1:
            raise PreconditionError("collection NA must lie in (0, 1]")
        if self.alpha0 < 0 or self.alpha_dip < 0:
            raise PreconditionError("amplitudes must be non-negative")
        if self.axis not in AXES:
            raise PreconditionError(f"axis {self.axis!r} is not supported; use x0 or y0")

    @property
    def params(self) -> OpticalParams:
        return OpticalParams(self.wavelength, self.alpha0, self.alpha_dip)

    @property
    def theta_max(self) -> float:
        return float(np.arcsin(self.NA))

    def cap_grid(self) -> SolidAngleGrid:
        return SolidAngleGrid.collection_cap(self.NA, self.n_theta, self.n_phi)

    def sphere_grid(self) -> SolidAngleGrid:
        return SolidAngleGrid.full_sphere(2 * self.n_theta, self.n_phi)


# ---------------------------------------------------------------------------
# vector far fields, shape (2, n_theta, n_phi)
# ---------------------------------------------------------------------------

def u_infinity(theta, phi) -> np.ndarray:
    """Collimated input beam mapped onto the reference sphere; zero behind the focus."""
    amp = np.sqrt(np.clip(np.cos(theta), 0.0, None) / np.pi)
    return np.stack([np.cos(phi) * amp, -np.sin(phi) * amp]).astype(np.complex128)


def u_dip(theta, phi) -> np.ndarray:
    c = np.sqrt(3 / (8 * np.pi))
    return np.stack([-c * np.cos(theta) * np.cos(phi), c * np.sin(phi)
                     * np.ones_like(theta)]).astype(np.complex128)


def u_signal(theta, phi, axis: str) -> np.ndarray:
    if axis == "x0":
        proj = np.sin(theta) * np.cos(phi)
    elif axis == "y0":
        proj = np.sin(theta) * np.sin(phi)
    else:
        raise PreconditionError(f"axis {axis!r} is not supported (axial detection is out of scope)")
    return proj * u_dip(theta, phi)


def build_fields(cfg: DipoleConfig, grid: SolidAngleGrid | None = None) -> FieldPair:
    grid = cfg.cap_grid() if grid is None else grid
    T, P = grid.mesh
    return FieldPair(u_infinity(T, P), u_signal(T, P, cfg.axis), grid, plane="sphere")


def full_information(cfg: DipoleConfig) -> float:
    """``4 k^2 alpha_dip^2 int_4pi |u_s|^2 dOmega`` by quadrature."""
    grid = cfg.sphere_grid()
    T, P = grid.mesh
    dens = (np.abs(u_signal(T, P, cfg.axis)) ** 2).sum(axis=0)
    p = cfg.params
    return 4 * p.k ** 2 * p.alpha_s ** 2 * integrate(dens, grid)


def analytic_information(cfg: DipoleConfig) -> float:
    p = cfg.params
    return (4 / 5 if cfg.axis == "x0" else 8 / 5) * p.k ** 2 * p.alpha_s ** 2


# ---------------------------------------------------------------------------
# budgets
# ---------------------------------------------------------------------------

def default_weight(cfg: DipoleConfig) -> WeightFunction:
    return weights.sphere_qpd(cfg.axis)


def dipole_budget(cfg: DipoleConfig, fw: WeightFunction | None = None,
                  fields: FieldPair | None = None, information: float | None = None) -> DetectionBudget:
    fields = build_fields(cfg) if fields is None else fields
    I = full_information(cfg) if information is None else information
    return budget(fields, default_weight(cfg) if fw is None else fw, cfg.params, I)


def irp_analytic(theta, phi, axis: str = "y0") -> np.ndarray:
    s2 = np.sin(theta) ** 2
    cx2 = np.cos(phi) ** 2
    if axis == "y0":
        return 15 / (16 * np.pi) * (1 - s2 * cx2) * s2 * np.sin(phi) ** 2
    if axis == "x0":
        return 15 / (8 * np.pi) * (1 - s2 * cx2) * s2 * cx2
    raise PreconditionError(f"axis {axis!r} is not supported")


def irp(cfg: DipoleConfig, grid: SolidAngleGrid | None = None) -> DdeProfile:
    """Information radiation pattern, i.e. the ideal DDE per steradian (full sphere by default)."""
    grid = cfg.sphere_grid() if grid is None else grid
    T, P = grid.mesh
    fields = FieldPair(u_infinity(T, P), u_signal(T, P, cfg.axis), grid, plane="sphere")
    return ideal_dde(fields, cfg.params, full_information(cfg))


def collection_efficiency(cfg: DipoleConfig) -> float:
    grid = cfg.cap_grid()
    T, P = grid.mesh
    return integrate(irp_analytic(T, P, cfg.axis), grid)


@dataclass(frozen=True)
class Factorization:
    eta: float
    eta_col: float
    eta_qpd: float
    budget: DetectionBudget


def eta_factorization(cfg: DipoleConfig, fw: WeightFunction | None = None) -> Factorization:
    """Split ``eta`` into collected information and detector efficiency on the cap."""
    fields = build_fields(cfg)
    I = full_information(cfg)
    b = dipole_budget(cfg, fw, fields, I)
    eta_col = ideal_information_fraction(fields, cfg, I)
    return Factorization(b.eta, eta_col, b.eta / eta_col, b)


def ideal_information_fraction(fields: FieldPair, cfg: DipoleConfig, information: float) -> float:
    p = cfg.params
    return 4 * p.k ** 2 * p.alpha_s ** 2 * fields.signal_norm() / information


def ideal_cap_budget(cfg: DipoleConfig) -> DetectionBudget:
    """Ideal homodyne on the collected light only; its eta equals ``eta_col``."""
    return ideal_homodyne_budget(build_fields(cfg), cfg.params, information=full_information(cfg))


def dipole_dde(cfg: DipoleConfig, fw: WeightFunction | None = None) -> DdeProfile:
    fields = build_fields(cfg)
    fw = default_weight(cfg) if fw is None else fw
    b = dipole_budget(cfg, fw, fields)
    return dde_map(fields, fw, cfg.params, b)


# ---------------------------------------------------------------------------
# block optimisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DipoleBlockResult:
    scan: OptimizationResult
    theta_b: float
    eta_star: float
    eta_standard: float
    blocked_fraction: float
    fractions: np.ndarray = field(repr=False)


def block_angle_optimization(cfg: DipoleConfig, geometry: str = "strip", n_samples: int = 201,
                             theta_b_max: float | None = None) -> DipoleBlockResult:
    """Scan the block angle ``theta_b`` of a centre-blocked QPD.

    ``strip`` blocks a band about the split plane, ``cap`` a cone about the
    optical axis (see :func:`optodde.weights.sphere_blocked_qpd`).
    """
    limit = cfg.theta_max
    hi = limit if theta_b_max is None else theta_b_max
    if hi > limit * (1 + 1e-12):
        raise PreconditionError("block exceeds the collection cap")
    fields = build_fields(cfg)
    I = full_information(cfg)
    total = fields.norm0()
    xs = np.linspace(0.0, hi, n_samples)
    if hi >= limit:
        xs = xs[:-1]  # fully blocked detector is degenerate
    cache = {}

    def eta_at(tb):
        fw = weights.sphere_blocked_qpd(tb, cfg.axis, geometry)
        f = fw.sample(fields.grid)
        cache[tb] = 1 - integrate(f * f * fields.stationary_density, fields.grid) / total
        return budget(fields, f, cfg.params, I).eta

    scan = scan_1d(eta_at, samples=xs)
    best = float(scan.samples[scan.best_index])
    return DipoleBlockResult(scan=scan, theta_b=scan.argmax, eta_star=float(scan.values.max()),
                             eta_standard=float(scan.values[0]), blocked_fraction=cache[best],
                             fractions=np.array([cache[float(x)] for x in scan.samples]))


def na_sweep(cfg: DipoleConfig, nas=(0.5, 0.7, 0.9, 1.0), geometry: str = "strip",
             n_samples: int = 101) -> list[dict]:
    rows = []
    for na in nas:
        c = replace(cfg, NA=na)
        r = block_angle_optimization(c, geometry, n_samples)
        rows.append({"NA": na, "eta_standard": r.eta_standard, "eta_blocked": r.eta_star,
                     "eta_col": collection_efficiency(c), "theta_b_rad": r.theta_b,
                     "blocked_fraction": r.blocked_fraction})
    return rows
