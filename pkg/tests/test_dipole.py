import numpy as np
import pytest

from optodde import dipole, weights as W
from optodde.dipole import DipoleConfig
from optodde.errors import PreconditionError
from optodde.quadrature import SolidAngleGrid, integrate


@pytest.fixture(scope="module")
def cfg():
    return DipoleConfig()


@pytest.fixture(scope="module")
def strip(cfg):
    return dipole.block_angle_optimization(cfg, "strip")


def _norm(vec, grid):
    return integrate((np.abs(vec) ** 2).sum(axis=0), grid)


class TestFields:
    def test_input_beam_normalised(self):
        g = SolidAngleGrid.full_sphere(800, 256)
        T, P = g.mesh
        assert _norm(dipole.u_infinity(T, P), g) == pytest.approx(1.0, abs=1e-5)

    def test_input_zero_behind(self):
        u = dipole.u_infinity(np.array([2.0]), np.array([0.3]))
        assert not u.any()

    def test_dipole_pattern_normalised(self):
        g = SolidAngleGrid.full_sphere(400, 256)
        T, P = g.mesh
        assert _norm(dipole.u_dip(T, P), g) == pytest.approx(1.0, abs=1e-5)

    def test_dipole_null_along_polarisation(self):
        u = dipole.u_dip(np.array([np.pi / 2]), np.array([0.0]))
        assert np.allclose(u, 0, atol=1e-16)

    def test_axial_unsupported(self):
        with pytest.raises(PreconditionError):
            dipole.u_signal(0.1, 0.2, "z0")
        with pytest.raises(PreconditionError):
            DipoleConfig(axis="z0")

    def test_config_validation(self):
        with pytest.raises(PreconditionError):
            DipoleConfig(NA=1.2)
        with pytest.raises(PreconditionError):
            DipoleConfig(alpha_dip=-1)


class TestInformation:
    @pytest.mark.parametrize("axis,coef", [("x0", 4 / 5), ("y0", 8 / 5)])
    def test_closed_form(self, axis, coef):
        c = DipoleConfig(axis=axis)
        p = c.params
        assert dipole.full_information(c) == pytest.approx(coef * p.k ** 2 * c.alpha_dip ** 2, rel=1e-4)

    def test_scales_with_alpha_dip(self):
        a = dipole.full_information(DipoleConfig(alpha_dip=1e-3, n_theta=100, n_phi=128))
        b = dipole.full_information(DipoleConfig(alpha_dip=2e-3, n_theta=100, n_phi=128))
        assert b == pytest.approx(4 * a, rel=1e-12)

    def test_irp_matches_closed_form(self, cfg):
        prof = dipole.irp(cfg)
        T, P = prof.grid.mesh
        ref = dipole.irp_analytic(T, P, cfg.axis)
        assert np.max(np.abs(prof.values - ref)) < 1e-3 * ref.max()

    @pytest.mark.parametrize("axis", ["x0", "y0"])
    def test_irp_integral(self, axis):
        assert dipole.irp(DipoleConfig(axis=axis)).integral_check == pytest.approx(1.0, abs=1e-4)


class TestBudget:
    def test_collection_efficiency(self, cfg):
        assert dipole.collection_efficiency(cfg) == pytest.approx(0.5, abs=0.005)

    def test_collection_grows_with_na(self):
        vals = [dipole.collection_efficiency(DipoleConfig(NA=na, n_theta=200)) for na in (0.3, 0.6, 0.9, 1)]
        assert np.all(np.diff(vals) > 0)

    def test_standard_qpd(self, cfg):
        assert dipole.dipole_budget(cfg).eta == pytest.approx(0.25, abs=0.01)

    def test_factorization(self, cfg):
        f = dipole.eta_factorization(cfg)
        assert f.eta == pytest.approx(f.eta_col * f.eta_qpd, rel=1e-12)
        assert f.eta_col == pytest.approx(dipole.collection_efficiency(cfg), abs=1e-4)
        assert 0 < f.eta_qpd <= 1

    def test_ideal_cap_budget(self, cfg):
        assert dipole.ideal_cap_budget(cfg).eta == pytest.approx(dipole.collection_efficiency(cfg), abs=1e-4)

    def test_dde_integral(self, cfg):
        prof = dipole.dipole_dde(cfg)
        assert prof.integral_check == pytest.approx(dipole.dipole_budget(cfg).eta, abs=1e-4)

    def test_x0_qpd_uses_x_split(self):
        c = DipoleConfig(axis="x0", n_theta=200, n_phi=256)
        assert dipole.default_weight(c).kind == W.sphere_qpd("x0").kind
        assert dipole.dipole_budget(c).eta > 0

    def test_heisenberg(self, cfg):
        b = dipole.dipole_budget(cfg)
        assert b.S_imp * b.S_ba >= b.hbar ** 2 / 4


class TestBlock:
    def test_strip_optimum(self, strip):
        assert strip.eta_star == pytest.approx(0.34, abs=0.01)
        assert strip.eta_standard == pytest.approx(0.25, abs=0.01)
        assert 0 < strip.theta_b < np.pi / 2

    def test_fractions_monotone(self, strip):
        assert strip.fractions[0] == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.diff(strip.fractions) >= -1e-12)

    def test_cap_worse_than_strip(self, cfg, strip):
        cap = dipole.block_angle_optimization(cfg, "cap", n_samples=61)
        assert cap.eta_star >= cap.eta_standard - 1e-12
        assert cap.eta_star < strip.eta_star

    def test_block_beyond_cap(self):
        with pytest.raises(PreconditionError):
            dipole.block_angle_optimization(DipoleConfig(NA=0.5, n_theta=50, n_phi=64), theta_b_max=1.0)

    def test_na_sweep(self):
        rows = dipole.na_sweep(DipoleConfig(n_theta=120, n_phi=128), nas=(0.5, 0.8, 1.0), n_samples=41)
        assert [r["NA"] for r in rows] == [0.5, 0.8, 1.0]
        for r in rows:
            assert r["eta_blocked"] >= r["eta_standard"] - 1e-12
            assert r["eta_blocked"] <= r["eta_col"] + 1e-3
