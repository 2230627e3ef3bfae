"""Hot numeric kernels.

Every kernel has a numba implementation and a pure-numpy twin with the same
signature. The numba path is used when numba imports cleanly and the
environment variable ``OPTODDE_DISABLE_NUMBA`` is unset (or ``0``).
``OPTODDE_THREADS`` caps numba's thread pool (``0`` or unset = numba default).

Reductions are written so that results do not depend on thread scheduling:
parallel loops only ever fill per-row partial arrays, and the final sum over
rows runs serially in a fixed order. The serial and parallel numba variants
therefore agree bit for bit.
"""
from __future__ import annotations

import math
import os

import numpy as np

_FALSE = {"", "0", "false", "no", "off"}


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in _FALSE


try:  # pragma: no cover - import guard
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # prefer layers that do not probe for a possibly outdated TBB
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_flag("OPTODDE_DISABLE_NUMBA")


def _configure_threads() -> None:
    raw = os.environ.get("OPTODDE_THREADS", "").strip()
    if not raw or not USE_NUMBA:
        return
    n = int(raw)
    if n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def _np_row_weighted_sum(values, row_weights, parallel=False):
    partial = values.sum(axis=1)
    return math.fsum((partial * row_weights).tolist())


def _np_fused_budget_sums(cross, noise, f, row_weights, parallel=False):
    s_rows = (f * cross).sum(axis=1)
    n_rows = (f * f * noise).sum(axis=1)
    return (math.fsum((s_rows * row_weights).tolist()),
            math.fsum((n_rows * row_weights).tolist()))


def _np_dft_last_axis(u, x_in, x_out, scale, dx_in):
    kernel = np.exp(1j * scale * np.outer(x_out, x_in)) * dx_in
    return u @ kernel.T


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _opts = dict(cache=True, nogil=True, fastmath=False, error_model="numpy")

    @njit(**_opts)
    def _row_sum(values, i):
        acc = 0.0
        for j in range(values.shape[1]):
            acc += values[i, j]
        return acc

    @njit(**_opts)
    def _nb_row_weighted_sum_serial(values, row_weights):
        n = values.shape[0]
        partial = np.empty(n)
        for i in range(n):
            partial[i] = _row_sum(values, i) * row_weights[i]
        total = 0.0
        for i in range(n):
            total += partial[i]
        return total

    @njit(parallel=True, **_opts)
    def _nb_row_weighted_sum_parallel(values, row_weights):
        n = values.shape[0]
        partial = np.empty(n)
        for i in prange(n):
            partial[i] = _row_sum(values, i) * row_weights[i]
        total = 0.0
        for i in range(n):
            total += partial[i]
        return total

    @njit(**_opts)
    def _fused_row(cross, noise, f, i):
        s = 0.0
        q = 0.0
        for j in range(cross.shape[1]):
            fij = f[i, j]
            s += fij * cross[i, j]
            q += fij * fij * noise[i, j]
        return s, q

    @njit(**_opts)
    def _nb_fused_serial(cross, noise, f, row_weights):
        n = cross.shape[0]
        ps = np.empty(n)
        pq = np.empty(n)
        for i in range(n):
            s, q = _fused_row(cross, noise, f, i)
            ps[i] = s * row_weights[i]
            pq[i] = q * row_weights[i]
        ts = 0.0
        tq = 0.0
        for i in range(n):
            ts += ps[i]
            tq += pq[i]
        return ts, tq

    @njit(parallel=True, **_opts)
    def _nb_fused_parallel(cross, noise, f, row_weights):
        n = cross.shape[0]
        ps = np.empty(n)
        pq = np.empty(n)
        for i in prange(n):
            s, q = _fused_row(cross, noise, f, i)
            ps[i] = s * row_weights[i]
            pq[i] = q * row_weights[i]
        ts = 0.0
        tq = 0.0
        for i in range(n):
            ts += ps[i]
            tq += pq[i]
        return ts, tq

    @njit(parallel=True, **_opts)
    def _nb_dft_matrix(x_in, x_out, scale, dx_in):
        n_in = x_in.shape[0]
        n_out = x_out.shape[0]
        kernel = np.empty((n_out, n_in), dtype=np.complex128)
        for i in prange(n_out):
            for j in range(n_in):
                ph = scale * x_out[i] * x_in[j]
                kernel[i, j] = complex(math.cos(ph), math.sin(ph)) * dx_in
        return kernel

    def _nb_dft_last_axis(u, x_in, x_out, scale, dx_in):
        # the contraction itself is left to BLAS, which beats a hand loop
        return u @ _nb_dft_matrix(x_in, x_out, scale, dx_in).T

    def _nb_row_weighted_sum(values, row_weights, parallel=False):
        if parallel:
            return _nb_row_weighted_sum_parallel(values, row_weights)
        return _nb_row_weighted_sum_serial(values, row_weights)

    def _nb_fused_budget_sums(cross, noise, f, row_weights, parallel=False):
        if parallel:
            return _nb_fused_parallel(cross, noise, f, row_weights)
        return _nb_fused_serial(cross, noise, f, row_weights)


# ---------------------------------------------------------------------------
# public dispatch
# ---------------------------------------------------------------------------

def _c_real(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def row_weighted_sum(values, row_weights, parallel=False):
    """Return ``sum_i row_weights[i] * sum_j values[i, j]``."""
    values = _c_real(values)
    row_weights = _c_real(row_weights)
    if USE_NUMBA:
        return float(_nb_row_weighted_sum(values, row_weights, parallel))
    return _np_row_weighted_sum(values, row_weights)


def fused_budget_sums(cross, noise, f, row_weights, parallel=False):
    """Return ``(sum w f cross, sum w f**2 noise)`` in one pass."""
    args = tuple(_c_real(a) for a in (cross, noise, f, row_weights))
    if USE_NUMBA:
        s, q = _nb_fused_budget_sums(*args, parallel=parallel)
        return float(s), float(q)
    return _np_fused_budget_sums(*args)


def dft_last_axis(u, x_in, x_out, scale, dx_in):
    """Direct Fourier quadrature along the last axis.

    ``out[r, i] = dx_in * sum_j u[r, j] * exp(1j * scale * x_out[i] * x_in[j])``
    """
    u = np.ascontiguousarray(u, dtype=np.complex128)
    x_in = _c_real(x_in)
    x_out = _c_real(x_out)
    if USE_NUMBA:
        return _nb_dft_last_axis(u, x_in, x_out, float(scale), float(dx_in))
    return _np_dft_last_axis(u, x_in, x_out, scale, dx_in)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


_configure_threads()
