import numpy as np
import pytest

from optodde import dipole
from optodde.errors import ConvergenceError, DimensionError, PreconditionError
from optodde.quadrature import (CartesianGrid2D, Grid1D, SolidAngleGrid, integrate, integrate_1d,
                                integrate_2d, integrate_sphere, refine_until)


def test_constant_unit_square():
    g = CartesianGrid2D(0, 1, 0, 1, 64, 64)
    assert integrate_2d(np.ones(g.shape), g) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_matches_pi():
    g = CartesianGrid2D.symmetric(6, 6, 256, 256)
    X, Y = g.mesh
    assert integrate_2d(np.exp(-(X ** 2 + Y ** 2)), g) == pytest.approx(np.pi, abs=1e-6)


def test_odd_integrand_vanishes():
    g = CartesianGrid2D(-1, 1, 0, 1, 64, 32)
    assert abs(integrate_2d(g.mesh[0], g)) < 1e-12


def test_hemisphere_area():
    g = SolidAngleGrid(np.pi / 2, 64, 64)
    assert integrate_sphere(np.ones(g.shape), g) == pytest.approx(2 * np.pi, abs=1e-9)


@pytest.mark.parametrize("na", [0.3, 0.7, 0.95, 1.0])
def test_lens_photon_rate(na):
    g = SolidAngleGrid.collection_cap(na, 1000, 64)
    T, _ = g.mesh
    assert integrate_sphere(np.cos(T) / np.pi, g) == pytest.approx(na ** 2, abs=1e-6)


@pytest.mark.parametrize("axis", ["x0", "y0"])
def test_dipole_irp_full_sphere(axis):
    g = SolidAngleGrid.full_sphere(400, 256)
    T, P = g.mesh
    assert integrate(dipole.irp_analytic(T, P, axis), g) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("theta_max", [0.1, 1.0, np.pi / 2, 2.5])
def test_sphere_weights_sum_exactly(theta_max):
    g = SolidAngleGrid(theta_max, 37, 19)
    total = g.weights.sum()
    assert total == pytest.approx(2 * np.pi * (1 - np.cos(theta_max)), rel=1e-12)


def test_sphere_grid_rejects_bad_cap():
    with pytest.raises(PreconditionError):
        SolidAngleGrid(0.0, 8, 8)
    with pytest.raises(PreconditionError):
        SolidAngleGrid.collection_cap(1.2, 8, 8)


def test_refine_gaussian_converges_quickly():
    def make(n):
        return CartesianGrid2D.symmetric(6, 6, n, n)

    def ev(g):
        X, Y = g.mesh
        return integrate_2d(np.exp(-(X ** 2 + Y ** 2)), g)

    value, grid, levels = refine_until(ev, make, 1e-6)
    assert levels <= 4
    assert value == pytest.approx(np.pi, rel=1e-6)


def test_refine_step_aligned_converges():
    # sign step at x = 0 falls on a cell boundary of every symmetric grid
    def ev(g):
        X, Y = g.mesh
        return integrate_2d(np.sign(X) * np.exp(-(X - 0.3) ** 2 - Y ** 2), g)

    value, _, _ = refine_until(ev, lambda n: CartesianGrid2D.symmetric(6, 6, n, n), 1e-4)
    from scipy.special import erf
    assert value == pytest.approx(np.sqrt(np.pi) * np.sqrt(np.pi) * erf(0.3), rel=1e-4)


def test_refine_rejects_zero_tolerance():
    with pytest.raises(PreconditionError):
        refine_until(lambda g: 1.0, lambda n: Grid1D(0, 1, n), 0)


def test_refine_reports_both_values():
    with pytest.raises(ConvergenceError) as info:
        refine_until(lambda g: float(g.n), lambda n: Grid1D(0, 1, n), 1e-6, max_levels=3)
    assert info.value.previous == 64 and info.value.current == 128


def test_dimension_mismatch():
    g = CartesianGrid2D(0, 1, 0, 1, 8, 8)
    with pytest.raises(DimensionError):
        integrate_2d(np.ones((8, 7)), g)
    with pytest.raises(DimensionError):
        integrate_1d(np.ones(5), Grid1D(0, 1, 4))


def test_complex_rejected():
    g = CartesianGrid2D(0, 1, 0, 1, 4, 4)
    with pytest.raises(TypeError):
        integrate_2d(np.ones(g.shape, complex), g)


def test_linearity():
    g = CartesianGrid2D.symmetric(3, 3, 64, 48)
    X, Y = g.mesh
    f, h = np.exp(-X ** 2 - Y ** 2), np.cos(X) * Y ** 2
    a, b = 2.5, -0.75
    lhs = integrate_2d(a * f + b * h, g)
    rhs = a * integrate_2d(f, g) + b * integrate_2d(h, g)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_monotone_convergence_on_gaussian():
    errs = []
    for n in (8, 16, 32, 64, 128):
        g = CartesianGrid2D.symmetric(6, 6, n, n)
        X, Y = g.mesh
        errs.append(integrate_2d(np.exp(-(X ** 2 + Y ** 2) / 2), g))
    diffs = np.abs(np.diff(errs))
    assert np.all(np.diff(diffs) < 0)


@pytest.mark.parametrize("grid", [CartesianGrid2D.symmetric(2, 1, 333, 71), SolidAngleGrid(1.2, 211, 97)])
def test_parallel_bitwise_equal(grid):
    rng = np.random.default_rng(5)
    f = rng.standard_normal(grid.shape)
    assert integrate(f, grid, parallel=True) == integrate(f, grid, parallel=False)


def test_grid1d_snap_and_boundary():
    g = Grid1D(-1, 1, 10)
    assert g.snap(0.13) == pytest.approx(0.2)
    assert g.is_boundary(0.2)
    assert not g.is_boundary(0.25)
    assert np.allclose(g.nodes[:2], [-0.9, -0.7])


def test_grid_preconditions():
    with pytest.raises(PreconditionError):
        Grid1D(0, 1, 1)
    with pytest.raises(PreconditionError):
        CartesianGrid2D(1, 0, 0, 1, 4, 4)


def test_refined_grid_doubles():
    g = CartesianGrid2D(0, 1, 0, 2, 4, 6).refined()
    assert g.shape == (8, 12)
    assert SolidAngleGrid(1.0, 4, 6).refined(3).shape == (12, 18)
