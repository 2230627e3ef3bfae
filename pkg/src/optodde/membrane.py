"""Membrane measurement scenarios.

Covers the closed-form QPD budget, the numeric far-field pipeline, centre
block optimisation, sweeps relative to a single-mode interferometer, and a
simulated wire scan that estimates the DDE by finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erf

from . import weights
from .detection import (DdeProfile, DetectionBudget, OptimizationResult, assemble_budget,
                        budget, dde_by_exclusion, dde_map, scan_1d)
from .errors import DomainError, PreconditionError
from .fields import (FieldPair, MembraneConfig, OpticalParams, device_grid,
                     gaussian_input, membrane_far_field, membrane_mode, optical_lever_fields)
from .quadrature import CartesianGrid2D, integrate
from .weights import Region


# ---------------------------------------------------------------------------
# closed forms and benchmarks
# ---------------------------------------------------------------------------

def analytic_sums(cfg: MembraneConfig, params: OpticalParams) -> tuple[float, float, float]:
    """``(S, N, I)`` for a standard QPD on the far field of mode ``(m, n)``."""
    cfg.check_mode()
    a2, k = params.alpha * params.alpha_s, params.k
    xm, xn = cfg.k_m * cfg.w0, cfg.k_n * cfg.w0
    S = -4 * a2 * k * erf(xm / 2) * math.exp(-xm * xm / 4) * math.exp(-xn * xn / 4)
    N = params.alpha ** 2
    I = 4 * params.alpha_s ** 2 * k * k * (-math.expm1(-xm * xm)) * (1 + math.exp(-xn * xn))
    return S, N, I


def analytic_budget(cfg: MembraneConfig, params: OpticalParams) -> DetectionBudget:
    return assemble_budget(*analytic_sums(cfg, params), params)


def optical_lever_eta(B_over_wd: float | np.ndarray) -> float | np.ndarray:
    """Blocked-QPD efficiency in the optical lever limit.

    Derived from the HG10 signal mode: ``S ~ exp(-b^2/4)``,
    ``N ~ 1 - erf(b/2)``, giving ``(2/pi) exp(-b^2/2) / (1 - erf(b/2))``.
    """
    b = np.asarray(B_over_wd, dtype=float)
    return (2 / np.pi) * np.exp(-b * b / 2) / (1 - erf(b / 2))


def interferometer_benchmark(params: OpticalParams, lo_amplitude: float = 1.0) -> DetectionBudget:
    """Mode-matched homodyne on a beam focused onto an antinode (``psi = 1``).

    The output field is ``alpha u0 (1 + 2ikA) + i alpha_LO u0``, so
    ``S = 4 alpha alpha_LO k`` and ``N = alpha_LO^2``; the LO amplitude cancels.
    """
    k, a = params.k, params.alpha
    S = 4 * a * lo_amplitude * k
    N = lo_amplitude ** 2
    I = 16 * a * a * k * k
    return assemble_budget(S, N, I, params)


# ---------------------------------------------------------------------------
# numeric pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineGrid:
    device_n: int = 256
    far_nx: int = 1024
    far_ny: int = 256


@lru_cache(maxsize=32)
def _far_fields(cfg: MembraneConfig, params: OpticalParams, res: PipelineGrid,
                grid_out: CartesianGrid2D | None) -> FieldPair:
    return membrane_far_field(cfg, params, res.device_n, res.far_nx, res.far_ny, grid_out)


def far_fields(cfg: MembraneConfig, params: OpticalParams, res: PipelineGrid = PipelineGrid(),
               grid_out: CartesianGrid2D | None = None) -> FieldPair:
    """Propagated ``(u0, us)`` at the detector; cached per configuration."""
    return _far_fields(cfg, params, res, grid_out)


def optical_lever_scenario(cfg: MembraneConfig, params: OpticalParams, nx: int = 1600,
                           ny: int = 256, span: float = 6.0) -> FieldPair:
    """Analytic HG10 far field on a ``+-span*w_d`` grid."""
    wd = cfg.w_d(params.k)
    grid = CartesianGrid2D.symmetric(span * wd, span * wd, nx, ny)
    return optical_lever_fields(cfg, params.k, grid)


def numeric_budget(cfg: MembraneConfig, params: OpticalParams, fw=None,
                   res: PipelineGrid = PipelineGrid()) -> DetectionBudget:
    fields = far_fields(cfg, params, res)
    return budget(fields, weights.qpd() if fw is None else fw, params)


# ---------------------------------------------------------------------------
# centre block optimisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockResult:
    scan: OptimizationResult
    B_star: float
    w_d: float
    eta_star: float
    eta_standard: float
    blocked_fraction: float
    budget: DetectionBudget
    B_lattice: float

    @property
    def B_over_wd(self) -> float:
        return self.B_star / self.w_d

    @property
    def improvement(self) -> float:
        return self.eta_star / self.eta_standard


def _x_profiles(fields: FieldPair) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = fields.grid
    cross = fields.cross.sum(axis=1) * g.dy
    power = fields.stationary_density.sum(axis=1) * g.dy
    return g.x, cross, power


def blocked_eta(fields: FieldPair, params: OpticalParams, B_values: Sequence[float]) -> np.ndarray:
    """eta of a centre-blocked x split for each block width, via x profiles."""
    x, cross, power = _x_profiles(fields)
    I = 4 * params.k ** 2 * params.alpha_s ** 2 * fields.signal_norm()
    dx = fields.grid.dx
    pref = 2 * params.alpha * params.alpha_s * params.k
    sx = np.sign(x)
    out = np.empty(len(B_values))
    for j, B in enumerate(B_values):
        keep = np.abs(x) > 0.5 * B
        S = pref * dx * math.fsum((sx * cross)[keep])
        N = params.alpha ** 2 * dx * math.fsum(power[keep])
        out[j] = S * S / (N * I) if N > 0 else 0.0
    return out


def blocked_power_fraction(fields: FieldPair, B: float) -> float:
    x, _, power = _x_profiles(fields)
    return math.fsum(power[np.abs(x) < 0.5 * B]) / math.fsum(power)


def block_lattice(grid: CartesianGrid2D, B_max: float) -> np.ndarray:
    """Block widths ``2 j dx`` whose edges fall on cell boundaries."""
    step = 2 * grid.dx
    weights.snap_block(0.0, grid)  # validates symmetry
    return step * np.arange(int(math.floor(B_max / step + 1e-9)) + 1)


def optimize_block(fields: FieldPair, params: OpticalParams, w_d: float,
                   B_values: Sequence[float] | None = None, B_max_over_wd: float = 4.0) -> BlockResult:
    grid = fields.grid
    if B_values is None:
        B_values = block_lattice(grid, B_max_over_wd * w_d)
    B_values = np.unique([weights.snap_block(b, grid) for b in B_values])
    if B_values.size == 0:
        raise PreconditionError("empty block range")
    etas = blocked_eta(fields, params, B_values)
    lookup = dict(zip(B_values.tolist(), etas.tolist()))
    scan = scan_1d(lambda b: lookup[b], samples=B_values)
    B_lat = float(B_values[scan.best_index])
    b_star = budget(fields, weights.blocked_qpd(B_lat), params)
    eta0 = budget(fields, weights.qpd(), params).eta
    return BlockResult(scan=scan, B_star=scan.argmax, w_d=w_d, eta_star=b_star.eta,
                       eta_standard=eta0, blocked_fraction=blocked_power_fraction(fields, B_lat),
                       budget=b_star, B_lattice=B_lat)


def block_optimization(cfg: MembraneConfig, params: OpticalParams,
                       B_values: Sequence[float] | None = None, B_max_over_wd: float = 4.0,
                       res: PipelineGrid = PipelineGrid(), fields: FieldPair | None = None) -> BlockResult:
    """Optimise the centre block width for mode ``(m, n)``."""
    fields = far_fields(cfg, params, res) if fields is None else fields
    return optimize_block(fields, params, cfg.w_d(params.k), B_values, B_max_over_wd)


def is_single_peaked(values: Sequence[float], tol: float = 1e-4) -> bool:
    d = np.diff(np.asarray(values, dtype=float))
    s = np.sign(np.where(np.abs(d) <= tol, 0.0, d))
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s) != 0)) <= 1


# ---------------------------------------------------------------------------
# sweeps relative to the interferometer
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("m", "n", "km_w0", "eta", "S_imp_ratio", "S_ba_ratio", "eta_blocked",
                 "S_imp_blocked_ratio", "B_star_over_wd", "blocked_fraction", "optical_lever")


def relative_sensitivity_sweep(modes: Iterable[tuple[int, int]], cfg: MembraneConfig,
                               params: OpticalParams, block: bool = True,
                               res: PipelineGrid = PipelineGrid()) -> list[dict]:
    """Standard and blocked QPD figures relative to a single-mode interferometer."""
    ref = interferometer_benchmark(params)
    rows = []
    for m, n in sorted(set(modes), key=lambda mn: (mn[0] / cfg.Lx, mn)):
        c = cfg.with_mode(m, n)
        c.check_mode()
        fields = far_fields(c, params, res)
        b = budget(fields, weights.qpd(), params)
        row = {"m": m, "n": n, "km_w0": c.k_m * c.w0, "eta": b.eta,
               "S_imp_ratio": b.S_imp / ref.S_imp, "S_ba_ratio": b.S_ba / ref.S_ba}
        if block:
            r = optimize_block(fields, params, c.w_d(params.k))
            row.update(eta_blocked=r.eta_star, S_imp_blocked_ratio=r.budget.S_imp / ref.S_imp,
                       B_star_over_wd=r.B_over_wd, blocked_fraction=r.blocked_fraction)
        else:
            row.update(eta_blocked=b.eta, S_imp_blocked_ratio=row["S_imp_ratio"],
                       B_star_over_wd=0.0, blocked_fraction=0.0)
        row["optical_lever"] = bool(c.k_m * c.w0 < c.lever_threshold
                                    and c.k_n * c.w0 < c.lever_threshold)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# wire scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WireScan:
    positions: np.ndarray
    measured: np.ndarray
    convolved: np.ndarray
    ideal_convolved: np.ndarray
    width: float
    profile: DdeProfile
    budget: DetectionBudget

    @property
    def max_deviation_over_peak(self) -> float:
        peak = np.max(np.abs(self.convolved))
        return float(np.max(np.abs(self.measured - self.convolved)) / peak)


def wire_grid(cfg: MembraneConfig, k: float, width: float, cells_per_wire: int = 12,
              ny: int = 256, span: float = 6.0) -> CartesianGrid2D:
    """Far grid whose spacing divides the wire width so wire edges sit on boundaries."""
    if cells_per_wire < 2 or cells_per_wire % 2:
        raise PreconditionError("cells_per_wire must be an even integer >= 2")
    dx = width / cells_per_wire
    wd = cfg.w_d(k)
    half_x = cfg.z_d * cfg.k_m / k + span * wd
    half_cells = int(math.ceil(half_x / dx))
    half_y = cfg.z_d * cfg.k_n / k + span * wd
    return CartesianGrid2D.symmetric(half_cells * dx, half_y, 2 * half_cells, ny)


def wire_scan_sim(cfg: MembraneConfig, params: OpticalParams, width: float,
                  positions: Sequence[float] | None = None, fw=None, cells_per_wire: int = 12,
                  device_n: int = 256, ny: int = 256, fields: FieldPair | None = None) -> WireScan:
    """Scan an opaque wire of width ``width`` across the detector.

    The default ``fw`` is the standard QPD. Positions are wire centres; they
    are snapped to cell boundaries. The measured profile is compared with the
    analytic DDE averaged over the wire width.
    """
    wd = cfg.w_d(params.k)
    if not 0 < width < wd:
        raise PreconditionError("wire width must be positive and below w_d")
    if fields is None:
        grid = wire_grid(cfg, params.k, width, cells_per_wire, ny)
        fields = far_fields(cfg, params, PipelineGrid(device_n, grid.nx, grid.ny), grid)
    grid = fields.grid
    dx = grid.dx
    K = int(round(width / dx))
    if not math.isclose(K * dx, width, rel_tol=1e-9):
        raise DomainError("grid spacing must divide the wire width")
    fw = weights.qpd() if fw is None else fw
    if positions is None:
        step = (K // 2) * dx
        n = int(math.floor(3 * wd / step))
        positions = step * np.arange(-n, n + 1)
    pos = np.array([grid.xgrid.snap(p) if K % 2 == 0 else grid.xgrid.snap(p - dx / 2) + dx / 2
                    for p in positions])
    if np.any(pos - width / 2 < grid.x_min - 1e-12 * dx) or np.any(pos + width / 2 > grid.x_max + 1e-12 * dx):
        raise DomainError("wire positions fall outside the detector grid")

    ref = budget(fields, fw, params)
    measured = np.array([dde_by_exclusion(fields, fw, params, Region(p - width / 2, p + width / 2),
                                          reference=ref) for p in pos])
    prof = dde_map(fields, fw, params, ref).reduce_to_x()
    conv = _box_average(prof.values, grid, pos, K)
    ideal = _box_average(prof.ideal, grid, pos, K)
    return WireScan(pos, measured, conv, ideal, width, prof, ref)


def _box_average(profile: np.ndarray, grid: CartesianGrid2D, centres: np.ndarray, K: int) -> np.ndarray:
    edges = np.concatenate([[0.0], np.cumsum(profile)])
    lo = np.rint((centres - K * grid.dx / 2 - grid.x_min) / grid.dx).astype(int)
    return (edges[lo + K] - edges[lo]) / K


# ---------------------------------------------------------------------------
# back action at the membrane
# ---------------------------------------------------------------------------

def back_action_device_plane(cfg: MembraneConfig, params: OpticalParams, n: int = 256,
                             psi: np.ndarray | float | None = None) -> float:
    """``4 alpha^2 (hbar k)^2 int |u_in|^2 psi^2 da`` evaluated at the membrane."""
    grid = device_grid(cfg, n)
    u_in = gaussian_input(cfg, grid)
    mode = membrane_mode(cfg, grid) if psi is None else np.broadcast_to(psi, grid.shape)
    dens = np.abs(u_in) ** 2 * mode ** 2
    return 4 * params.alpha_s ** 2 * (params.hbar * params.k) ** 2 * integrate(dens, grid)


def interferometer_fields(cfg: MembraneConfig, n: int = 256) -> FieldPair:
    """Device-plane fields for a beam focused on an antinode (``psi = 1``)."""
    grid = device_grid(cfg, n)
    u_in = gaussian_input(cfg, grid)
    return FieldPair(u0=u_in, us=2j * u_in, grid=grid, plane="device")
