import warnings

import numpy as np
import pytest

from optodde import fields as F
from optodde.errors import (DimensionError, DomainError, LimitInvalidError, PreconditionError,
                            TruncationError, UnsupportedModeError)
from optodde.fields import MembraneConfig, OpticalParams
from optodde.quadrature import CartesianGrid2D, integrate


@pytest.fixture(scope="module")
def cfg():
    return MembraneConfig()


@pytest.fixture(scope="module")
def dev(cfg):
    return F.device_grid(cfg, 256)


def odd_grid(half, n):
    """Grid with a node exactly at the origin."""
    return CartesianGrid2D.symmetric(half, half, n, n)


class TestGaussian:
    def test_peak(self, cfg):
        g = odd_grid(6 * cfg.w0, 255)
        u = F.gaussian_input(cfg, g)
        assert abs(u[127, 127]) == pytest.approx(np.sqrt(1 / (np.pi * cfg.w0 ** 2)), rel=1e-12)

    def test_normalised(self, cfg, dev):
        u = F.gaussian_input(cfg, dev)
        assert integrate(np.abs(u) ** 2, dev) == pytest.approx(1.0, abs=1e-9)

    def test_value_at_sqrt2_w0(self, cfg):
        x = np.sqrt(2) * cfg.w0
        g = CartesianGrid2D(x - 8 * cfg.w0, x + 8 * cfg.w0, -8 * cfg.w0, 8 * cfg.w0, 7, 7)
        u = F.gaussian_input(cfg, g)
        peak = np.sqrt(1 / (np.pi * cfg.w0 ** 2))
        assert abs(u[3, 3]) == pytest.approx(peak * np.exp(-1), rel=1e-12)

    def test_truncation(self, cfg):
        with pytest.raises(TruncationError):
            F.gaussian_input(cfg, CartesianGrid2D.symmetric(3 * cfg.w0, 6 * cfg.w0, 32, 32))


class TestModes:
    def test_antinode(self):
        c = MembraneConfig(m=2, n=1)
        g = CartesianGrid2D(c.Lx / 4 - 1e-9, c.Lx / 4 + 1e-9, -1e-9, 1e-9, 2, 2)
        assert np.allclose(F.membrane_mode(c, g), 1.0, atol=1e-9)

    def test_node_line(self, cfg):
        g = CartesianGrid2D(-1e-12, 1e-12, -cfg.Ly / 2, cfg.Ly / 2, 2, 50)
        assert np.max(np.abs(F.membrane_mode(cfg, g))) < 1e-8

    def test_bounded(self, cfg, dev):
        assert np.max(np.abs(F.membrane_mode(cfg.with_mode(6, 3), dev))) <= 1.0

    def test_zero_count_m10(self):
        c = MembraneConfig(m=10)
        x = np.linspace(-c.Lx / 2, c.Lx / 2, 20000)[1:-1]
        psi = np.sin(c.k_m * x)
        assert np.count_nonzero(np.diff(np.sign(psi)) != 0) == 9

    @pytest.mark.parametrize("m,n", [(3, 1), (2, 2), (1, 4)])
    def test_unsupported(self, m, n, dev):
        with pytest.raises(UnsupportedModeError):
            F.membrane_mode(MembraneConfig(m=m, n=n), dev)

    def test_derived_wavenumbers(self):
        c = MembraneConfig(Lx=2e-3, m=4)
        assert c.k_m == pytest.approx(np.pi * 4 / 2e-3)
        assert c.with_mode(8).k_m == pytest.approx(2 * c.k_m)


class TestReflect:
    def test_zero_mode(self, cfg, dev):
        u = F.gaussian_input(cfg, dev)
        assert not F.reflect(u, np.zeros(dev.shape), dev).us.any()

    def test_bound(self, cfg, dev):
        u = F.gaussian_input(cfg, dev)
        p = F.reflect(u, F.membrane_mode(cfg, dev), dev)
        assert np.all(np.abs(p.us) <= 2 * np.abs(u) + 1e-15)

    @pytest.mark.parametrize("m,n", [(2, 1), (6, 1), (10, 3), (4, 5)])
    def test_signal_norm_closed_form(self, m, n, dev):
        c = MembraneConfig(m=m, n=n)
        u = F.gaussian_input(c, dev)
        p = F.reflect(u, F.membrane_mode(c, dev), dev)
        xm, xn = c.k_m * c.w0, c.k_n * c.w0
        expected = (1 - np.exp(-xm ** 2)) * (1 + np.exp(-xn ** 2))
        assert p.signal_norm() == pytest.approx(expected, abs=1e-4)

    def test_pure_phase_modulation(self, cfg, dev):
        u = F.gaussian_input(cfg, dev)
        p = F.reflect(u, F.membrane_mode(cfg.with_mode(4, 3), dev), dev)
        assert abs(integrate(p.cross, dev)) < 1e-9

    def test_mismatched(self, cfg, dev):
        with pytest.raises(DimensionError):
            F.reflect(np.ones((4, 4)), np.ones((5, 4)), dev)


class TestFraunhofer:
    def test_far_waist(self, cfg, params, far):
        f = far(2)
        w = F.beam_waist(f.u0, f.grid, "x")
        assert w == pytest.approx(560e-6, rel=0.01)
        assert cfg.w_d(params.k) == pytest.approx(560e-6, rel=1e-4)

    @pytest.mark.parametrize("m", [2, 6, 10])
    def test_parseval(self, m, far):
        f = far(m)
        assert f.norm0() == pytest.approx(1.0, rel=1e-4)

    @pytest.mark.parametrize("m,n", [(2, 1), (8, 1), (6, 3)])
    def test_signal_norm_preserved(self, m, n, far, dev):
        c = MembraneConfig(m=m, n=n)
        u = F.gaussian_input(c, dev)
        device = F.reflect(u, F.membrane_mode(c, dev), dev)
        assert far(m, n).signal_norm() == pytest.approx(device.signal_norm(), rel=1e-4)

    def test_diffraction_lobes(self, params, far):
        c = MembraneConfig(m=14)
        f = far(14)
        prof = f.signal_density.sum(axis=1)
        x = f.grid.x
        expected = c.z_d * c.k_m / params.k
        right = x[np.argmax(np.where(x > 0, prof, 0))]
        left = x[np.argmax(np.where(x < 0, prof, 0))]
        tol = 2 * f.grid.dx
        assert right == pytest.approx(expected, abs=tol)
        assert left == pytest.approx(-expected, abs=tol)

    def test_undersized_output(self, cfg, params, dev):
        u = F.gaussian_input(cfg, dev)
        small = CartesianGrid2D.symmetric(2 * cfg.w_d(params.k), 6 * cfg.w_d(params.k), 64, 64)
        with pytest.raises(DomainError):
            F.fraunhofer(u, dev, cfg, params.k, small)

    def test_near_field_warning(self, params):
        c = MembraneConfig(z_d=0.05)
        g = F.device_grid(c, 64)
        out = F.far_grid(c, params.k, 64, 32)
        with pytest.warns(UserWarning):
            F.fraunhofer(F.gaussian_input(c, g), g, c, params.k, out)

    def test_matches_optical_lever(self, params):
        c = MembraneConfig(m=2)
        c = MembraneConfig(m=2, w0=0.05 / c.k_m)
        out = F.far_grid(c, params.k, 512, 128)
        num = F.membrane_far_field(c, params, 256, grid_out=out)
        ana = F.optical_lever_fields(c, params.k, out)
        peak_s = np.max(np.abs(ana.us))
        assert np.max(np.abs(num.us - ana.us)) < 0.01 * peak_s
        assert np.max(np.abs(num.u0 - ana.u0)) < 0.01 * np.max(np.abs(ana.u0))


class TestOpticalLever:
    def test_signal_norm(self, lever_cfg, lever_fields):
        assert lever_fields.signal_norm() == pytest.approx(2 * (lever_cfg.k_m * lever_cfg.w0) ** 2, rel=1e-6)

    def test_odd_in_x(self, lever_cfg, params):
        wd = lever_cfg.w_d(params.k)
        p = F.optical_lever_fields(lever_cfg, params.k, odd_grid(6 * wd, 101))
        assert np.max(np.abs(p.us[50, :])) < 1e-12 * np.max(np.abs(p.us))

    def test_threshold(self, params):
        with pytest.raises(LimitInvalidError):
            F.optical_lever_fields(MembraneConfig(m=10), params.k, odd_grid(1e-3, 11))
        with pytest.raises(LimitInvalidError):
            F.optical_lever_fields(MembraneConfig(w0=25e-6), params.k, odd_grid(1e-3, 11), threshold=0.05)


class TestPhaseContrast:
    def test_intensity_coefficient(self, cfg, dev, params):
        u = F.gaussian_input(cfg, dev)
        psi = F.membrane_mode(cfg, dev)
        p = F.phase_contrast_image(u, psi, dev)
        A = 1e-12
        first = F.intensity(p, params, A) - F.intensity(p, params, 0.0)
        expected = 4 * params.k * A * psi * params.alpha ** 2 * np.abs(u) ** 2
        assert np.max(np.abs(first - expected)) <= 1e-9 * np.max(np.abs(expected))

    def test_no_mode_plain_intensity(self, cfg, dev, params):
        u = F.gaussian_input(cfg, dev)
        p = F.phase_contrast_image(u, np.zeros(dev.shape), dev)
        assert np.array_equal(F.intensity(p, params, 1e-9), params.alpha ** 2 * np.abs(u) ** 2)

    def test_sign_flip(self, cfg, dev, params):
        u = F.gaussian_input(cfg, dev)
        psi = F.membrane_mode(cfg, dev)
        a = F.intensity(F.phase_contrast_image(u, psi, dev), params, 1e-10)
        b = F.intensity(F.phase_contrast_image(u, -psi, dev), params, 1e-10)
        base = params.alpha ** 2 * np.abs(u) ** 2
        assert np.allclose(a - base, -(b - base), atol=1e-12 * base.max())


def test_params_validation():
    with pytest.raises(PreconditionError):
        OpticalParams(wavelength=0)
    with pytest.raises(PreconditionError):
        OpticalParams(alpha=-1)
    with pytest.raises(PreconditionError):
        MembraneConfig(w0=0)
    assert OpticalParams(alpha=2.0).alpha_s == 2.0
    assert OpticalParams(alpha=2.0, alpha_signal=0.5).alpha_s == 0.5


def test_field_pair_shape_checks(dev):
    with pytest.raises(DimensionError):
        F.FieldPair(np.ones((3, 3)), np.ones((3, 3)), dev)


def test_no_warning_at_default_distance(cfg, params, dev):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        F.fraunhofer(F.gaussian_input(cfg, dev), dev, cfg, params.k, F.far_grid(cfg, params.k, 64, 32))
