"""Detection functionals, efficiency budgets and differential efficiency maps.

For a weighting ``f_w`` on the detection domain ``D``::

    S = 2 a0 as k  int f_w Re[u0 us*] da        sensitivity
    N = a0^2       int |u0|^2 f_w^2 da          shot-noise power
    I = 4 k^2 as^2 int |us|^2 da                ideal information rate

with ``a0 = as = alpha`` for reflection. Then ``S_imp = N / S^2``,
``S_ideal = 1 / I``, ``eta = S_ideal / S_imp`` and the back-action force
noise ``S_ba = (hbar/2)^2 / S_ideal``.

The differential detection efficiency (DDE) is the change in ``eta`` from
removing one area element::

    deta/da = S_ideal * (2 (S/N) dS/da - (S/N)^2 dN/da)

which integrates to ``eta`` over ``D``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import DegenerateWeightingError, DomainError, PreconditionError
from .fields import FieldPair, OpticalParams
from .quadrature import CartesianGrid2D, Grid1D, SolidAngleGrid, integrate, integrate_1d
from .weights import Region, WeightFunction

# |S| below this fraction of its Cauchy-Schwarz bound counts as zero
DEGENERATE_RTOL = 1e-10


@dataclass(frozen=True)
class DetectionBudget:
    S: float
    N: float
    I: float
    S_imp: float
    S_ideal: float
    eta: float
    S_ba: float
    hbar: float

    @property
    def heisenberg_product(self) -> float:
        return self.S_imp * self.S_ba

    def as_dict(self) -> dict:
        return {
            "eta": self.eta,
            "S": self.S,
            "abs_S": abs(self.S),
            "N": self.N,
            "I": self.I,
            "S_imp": self.S_imp,
            "S_ideal": self.S_ideal,
            "S_ba": self.S_ba,
            "heisenberg_product_over_hbar2": self.S_ideal * self.S_ba / self.hbar ** 2,
            "imprecision_backaction_over_hbar2": self.heisenberg_product / self.hbar ** 2,
        }


@dataclass(frozen=True, eq=False)
class DdeProfile:
    """Sampled DDE next to its ideal counterpart.

    ``values`` and ``ideal`` are densities per unit area (planes), per unit
    solid angle (spheres) or per unit length after :meth:`reduce_to_x`.
    """

    values: np.ndarray
    ideal: np.ndarray
    grid: object
    domain: str

    @property
    def integral_check(self) -> float:
        return self._integrate(self.values)

    @property
    def ideal_integral(self) -> float:
        return self._integrate(self.ideal)

    def _integrate(self, a):
        if isinstance(self.grid, Grid1D):
            return integrate_1d(a, self.grid)
        return integrate(a, self.grid)

    @property
    def x(self) -> np.ndarray:
        if isinstance(self.grid, Grid1D):
            return self.grid.nodes
        return self.grid.x

    def reduce_to_x(self) -> "DdeProfile":
        """Integrate both maps over y to get ``deta/dx``."""
        if not isinstance(self.grid, CartesianGrid2D):
            raise DomainError("only planar maps reduce to 1-D profiles")
        dy = self.grid.dy
        return DdeProfile(self.values.sum(axis=1) * dy, self.ideal.sum(axis=1) * dy,
                          self.grid.xgrid, "x")


@dataclass(frozen=True)
class OptimizationResult:
    argmax: float
    value: float
    samples: np.ndarray
    values: np.ndarray
    best_index: int


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

def _weights(fields: FieldPair, fw) -> np.ndarray:
    if isinstance(fw, WeightFunction):
        return fw.sample(fields.grid)
    fw = np.asarray(fw, dtype=float)
    if fw.shape != tuple(fields.grid.shape):
        raise DomainError("weight samples do not match the field grid")
    return fw


def _sums(fields: FieldPair, f: np.ndarray) -> tuple[float, float]:
    return kernels.fused_budget_sums(fields.cross, fields.stationary_density, f,
                                     fields.grid.row_weights)


def sensitivity(fields: FieldPair, fw, params: OpticalParams) -> float:
    cross_sum, _ = _sums(fields, _weights(fields, fw))
    return 2 * params.alpha * params.alpha_s * params.k * cross_sum


def noise(fields: FieldPair, fw, params: OpticalParams) -> float:
    _, noise_sum = _sums(fields, _weights(fields, fw))
    return params.alpha ** 2 * noise_sum


def ideal_information(fields: FieldPair, params: OpticalParams) -> float:
    return 4 * params.k ** 2 * params.alpha_s ** 2 * fields.signal_norm()


def back_action(fields: FieldPair, params: OpticalParams) -> float:
    """Force noise ``as^2 hbar^2 int |du/dA|^2 da`` with ``du/dA = k us``."""
    du = params.k * fields.us
    dens = np.abs(du) ** 2
    if fields.is_vector:
        dens = dens.sum(axis=0)
    return params.alpha_s ** 2 * params.hbar ** 2 * integrate(dens, fields.grid)


def assemble_budget(S: float, N: float, I: float, params: OpticalParams) -> DetectionBudget:
    if I <= 0:
        raise DegenerateWeightingError("signal field carries no information")
    if S == 0 or N <= 0:
        raise DegenerateWeightingError("sensitivity vanishes; imprecision and eta are undefined")
    S_imp = N / S ** 2
    S_ideal = 1.0 / I
    hbar = params.hbar
    return DetectionBudget(S=S, N=N, I=I, S_imp=S_imp, S_ideal=S_ideal,
                           eta=S_ideal * S ** 2 / N, S_ba=(hbar / 2) ** 2 / S_ideal, hbar=hbar)


def budget(fields: FieldPair, fw, params: OpticalParams, information: float | None = None,
           eta_qe: float | None = None) -> DetectionBudget:
    """Full budget; ``information`` overrides ``I`` when part of the light misses ``D``."""
    f = _weights(fields, fw)
    cross_sum, noise_sum = _sums(fields, f)
    S = 2 * params.alpha * params.alpha_s * params.k * cross_sum
    N = params.alpha ** 2 * noise_sum
    I = ideal_information(fields, params) if information is None else information
    _check_degenerate(S, N, fields, params)
    b = assemble_budget(S, N, I, params)
    return b if eta_qe is None else apply_quantum_efficiency(b, eta_qe)


def _check_degenerate(S, N, fields, params):
    bound = 2 * params.alpha * params.alpha_s * params.k * np.sqrt(
        max(N, 0.0) / params.alpha ** 2 * fields.signal_norm()) if params.alpha > 0 else 0.0
    if N <= 0 or abs(S) <= DEGENERATE_RTOL * bound:
        raise DegenerateWeightingError(
            "sensitivity vanishes for this weighting (check the split axis or mask)")


def apply_quantum_efficiency(b: DetectionBudget, eta_qe: float) -> DetectionBudget:
    """Detector conversion efficiency scales detected signal and shot noise alike."""
    if not 0 < eta_qe <= 1:
        raise PreconditionError("eta_qe must lie in (0, 1]")
    S, N = b.S * eta_qe, b.N * eta_qe
    return replace(b, S=S, N=N, S_imp=N / S ** 2, eta=b.S_ideal * S ** 2 / N)


def ideal_homodyne_budget(fields: FieldPair, params: OpticalParams,
                          lo_amplitude: float | None = None,
                          information: float | None = None) -> DetectionBudget:
    """Spatially resolved homodyne with ``f_w = |us|`` against a strong LO.

    Pass the full ``information`` when ``fields`` cover only part of the light.
    """
    alpha_lo = 1e3 * max(params.alpha, 1.0) if lo_amplitude is None else lo_amplitude
    us2 = fields.signal_norm()
    S = 2 * params.alpha_s * alpha_lo * params.k * us2
    N = alpha_lo ** 2 * us2
    I = ideal_information(fields, params) if information is None else information
    return assemble_budget(S, N, I, params)


# ---------------------------------------------------------------------------
# differential detection efficiency
# ---------------------------------------------------------------------------

def dde_map(fields: FieldPair, fw, params: OpticalParams, b: DetectionBudget) -> DdeProfile:
    f = _weights(fields, fw)
    ratio = b.S / b.N
    dS = 2 * params.alpha * params.alpha_s * params.k * f * fields.cross
    dN = params.alpha ** 2 * f * f * fields.stationary_density
    values = b.S_ideal * (2 * ratio * dS - ratio ** 2 * dN)
    ideal = 4 * params.alpha_s ** 2 * params.k ** 2 * b.S_ideal * fields.signal_density
    return DdeProfile(values, ideal, fields.grid, _domain(fields.grid))


def ideal_dde(fields: FieldPair, params: OpticalParams, information: float | None = None) -> DdeProfile:
    I = ideal_information(fields, params) if information is None else information
    ideal = 4 * params.alpha_s ** 2 * params.k ** 2 * fields.signal_density / I
    return DdeProfile(ideal, ideal, fields.grid, _domain(fields.grid))


def _domain(grid) -> str:
    return "sphere" if isinstance(grid, SolidAngleGrid) else "plane"


def dde_by_exclusion(fields: FieldPair, fw: WeightFunction, params: OpticalParams,
                     element: Region, information: float | None = None,
                     reference: DetectionBudget | None = None) -> float:
    """Finite-difference DDE ``(eta - eta_without_element) / size(element)``.

    For a full-height strip the size is its width (result is ``deta/dx``);
    otherwise its area. Sizes are the discrete measure of the excluded cells.
    """
    grid = fields.grid
    if not isinstance(grid, CartesianGrid2D):
        raise DomainError("exclusion elements are defined on planar grids")
    if (element.x_lo < grid.x_min or element.x_hi > grid.x_max
            or (not element.is_strip and (element.y_lo < grid.y_min or element.y_hi > grid.y_max))):
        raise DomainError("element lies outside the detection domain")
    X, Y = grid.mesh
    inside = element.contains(X, Y)
    if element.is_strip:
        size = inside[:, 0].sum() * grid.dx
    else:
        size = inside.sum() * grid.dx * grid.dy
    if size == 0:
        raise DomainError("element covers no grid cells")
    f = _weights(fields, fw)
    full = reference if reference is not None else budget(fields, f, params, information)
    reduced = budget(fields, np.where(inside, 0.0, f), params, full.I)
    return (full.eta - reduced.eta) / size


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

def scan_1d(objective: Callable[[float], float], lo: float | None = None, hi: float | None = None,
            n_samples: int = 201, samples: Sequence[float] | None = None) -> OptimizationResult:
    """Grid search with parabolic refinement around the best sample.

    A flat objective returns the midpoint of the range; a best sample on the
    range boundary is returned as is.
    """
    if samples is None:
        if lo is None or hi is None or hi < lo:
            raise PreconditionError("empty scan range")
        if n_samples < 3:
            raise PreconditionError("need at least 3 samples")
        xs = np.linspace(lo, hi, n_samples)
    else:
        xs = np.unique(np.asarray(samples, dtype=float))
        if xs.size == 0:
            raise PreconditionError("empty scan range")
    vals = np.array([objective(float(x)) for x in xs])
    i = int(np.argmax(vals))
    spread = vals.max() - vals.min()
    if spread <= 1e-14 * max(1.0, abs(vals.max())):
        mid = 0.5 * (xs[0] + xs[-1])
        return OptimizationResult(float(mid), float(vals[i]), xs, vals, i)
    if i == 0 or i == len(xs) - 1:
        return OptimizationResult(float(xs[i]), float(vals[i]), xs, vals, i)
    x0, x1, x2 = xs[i - 1:i + 2]
    y0, y1, y2 = vals[i - 1:i + 2]
    # vertex of the parabola through the three points
    d0, d2 = x0 - x1, x2 - x1
    denom = d0 * d2 * (d0 - d2)
    a = (d2 * (y0 - y1) - d0 * (y2 - y1)) / denom
    b = (d0 ** 2 * (y2 - y1) - d2 ** 2 * (y0 - y1)) / denom
    if a >= 0:
        return OptimizationResult(float(x1), float(y1), xs, vals, i)
    dx = -b / (2 * a)
    dx = min(max(dx, d0), d2)
    return OptimizationResult(float(x1 + dx), float(y1 + b * dx + a * dx * dx), xs, vals, i)
