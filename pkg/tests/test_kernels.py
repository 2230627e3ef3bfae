import os
import subprocess
import sys

import numpy as np
import pytest

from optodde import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(11)
    shape = (173, 91)
    return (rng.standard_normal(shape), rng.random(shape), np.sign(rng.standard_normal(shape)),
            rng.random(shape[0]))


@needs_numba
def test_row_sum_matches_numpy(data):
    values, _, _, w = data
    a = kernels._nb_row_weighted_sum(values, w)
    b = kernels._np_row_weighted_sum(values, w)
    assert a == pytest.approx(b, rel=1e-12)


@needs_numba
def test_fused_matches_numpy(data):
    cross, noise, f, w = data
    a = kernels._nb_fused_budget_sums(cross, noise, f, w)
    b = kernels._np_fused_budget_sums(cross, noise, f, w)
    assert np.allclose(a, b, rtol=1e-12)


@needs_numba
@pytest.mark.parametrize("fn", ["_nb_row_weighted_sum", "_nb_fused_budget_sums"])
def test_parallel_bitwise(data, fn):
    cross, noise, f, w = data
    k = getattr(kernels, fn)
    args = (cross, w) if "row" in fn else (cross, noise, f, w)
    assert k(*args, parallel=True) == k(*args, parallel=False)


@needs_numba
def test_dft_matches_numpy():
    rng = np.random.default_rng(3)
    u = rng.standard_normal((7, 40)) + 1j * rng.standard_normal((7, 40))
    x_in, x_out = np.linspace(-1, 1, 40), np.linspace(-2, 2, 55)
    a = kernels._nb_dft_last_axis(u, x_in, x_out, 3.7, 0.05)
    b = kernels._np_dft_last_axis(u, x_in, x_out, 3.7, 0.05)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-13)


def test_dispatch_returns_python_floats(data):
    cross, noise, f, w = data
    s, q = kernels.fused_budget_sums(cross, noise, f, w)
    assert type(s) is float and type(q) is float
    assert kernels.backend() in ("numba", "numpy")


def _child(env_extra):
    env = dict(os.environ, **env_extra)
    code = ("import numpy as np; from optodde import kernels; "
            "from optodde.fields import MembraneConfig, OpticalParams; "
            "from optodde import membrane, weights; from optodde.detection import budget; "
            "p = OpticalParams(); f = membrane.far_fields(MembraneConfig(m=4), p, "
            "membrane.PipelineGrid(96, 256, 64)); "
            "print(kernels.backend(), repr(budget(f, weights.qpd(), p).eta))")
    r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    backend, eta = r.stdout.split()
    return backend, float(eta)


def test_env_flag_selects_numpy():
    backend, eta_np = _child({"OPTODDE_DISABLE_NUMBA": "1"})
    assert backend == "numpy"
    if kernels.HAVE_NUMBA:
        backend_nb, eta_nb = _child({"OPTODDE_DISABLE_NUMBA": "0", "OPTODDE_THREADS": "2"})
        assert backend_nb == "numba"
        assert eta_nb == pytest.approx(eta_np, rel=1e-10)
