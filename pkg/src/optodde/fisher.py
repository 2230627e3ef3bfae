"""Quantum Fisher information of the scattered coherent state.

The signal field is split against the normalised stationary field ``u0^``::

    us = (phi_R + i phi_I) u0^ + us_perp,     int u0^* us_perp = 0

``phi_I`` is the interferometric (phase) part; ``phi_R`` is an amplitude
part that vanishes for pure phase modulation. For a coherent state
``F_Q = 4 k^2 alpha^2 int |us|^2 = 4 k^2 alpha^2 (phi_R^2 + phi_I^2 + n_perp)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .fields import FieldPair, OpticalParams
from .quadrature import integrate


@dataclass(frozen=True, eq=False)
class SignalDecomposition:
    phi_I: float
    phi_R: float
    us_perp: np.ndarray
    n_perp: float
    u0_hat: np.ndarray
    fields: FieldPair

    def reconstruct(self) -> np.ndarray:
        return (self.phi_R + 1j * self.phi_I) * self.u0_hat + self.us_perp

    def perp_overlap(self) -> complex:
        return _inner(self.u0_hat, self.us_perp, self.fields)


@dataclass(frozen=True)
class QfiResult:
    F_Q: float
    interferometric: float
    orthogonal: float

    def cramer_rao_bound(self, tau: float) -> float:
        return cramer_rao(self, tau)


def _inner(a: np.ndarray, b: np.ndarray, fields: FieldPair) -> complex:
    """``int a^* . b`` over the field grid."""
    prod = np.conj(a) * b
    if fields.is_vector:
        prod = prod.sum(axis=0)
    return complex(integrate(prod.real, fields.grid), integrate(prod.imag, fields.grid))


def decompose(fields: FieldPair) -> SignalDecomposition:
    n0 = fields.norm0()
    if n0 <= 0:
        raise PreconditionError("stationary field carries no power")
    u0_hat = fields.u0 / np.sqrt(n0)
    c = _inner(u0_hat, fields.us, fields)
    us_perp = fields.us - c * u0_hat
    dens = np.abs(us_perp) ** 2
    if fields.is_vector:
        dens = dens.sum(axis=0)
    return SignalDecomposition(phi_I=c.imag, phi_R=c.real, us_perp=us_perp,
                               n_perp=integrate(dens, fields.grid), u0_hat=u0_hat, fields=fields)


def qfi(fields: FieldPair, params: OpticalParams) -> QfiResult:
    """Coherent-state QFI rate; assumes all scattered light reaches the grid."""
    d = decompose(fields)
    pref = 4 * params.k ** 2 * params.alpha_s ** 2
    return QfiResult(F_Q=pref * fields.signal_norm(),
                     interferometric=pref * (d.phi_I ** 2 + d.phi_R ** 2),
                     orthogonal=pref * d.n_perp)


def cramer_rao(result: QfiResult, tau: float) -> float:
    """Lower bound ``1 / (tau F_Q)`` on the variance of the amplitude estimate."""
    if not tau > 0:
        raise PreconditionError("integration time must be positive")
    return 1.0 / (tau * result.F_Q)
