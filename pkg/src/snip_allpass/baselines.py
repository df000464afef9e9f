"""Geodesic interpolation of unitary matrices and precoder error metrics."""

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from . import _validation as V
from .exceptions import BranchAmbiguity

BRANCH_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class UnitarySample:
    omega: float
    U: np.ndarray


def unitary_log(U):
    """Principal logarithm of a unitary matrix, a skew-Hermitian matrix.

    Uses the complex Schur form, which for a normal matrix is a unitary
    diagonalization. Eigenvalue phases are taken in (-pi, pi]; an eigenvalue
    at -1 is assigned phase +pi and a :class:`BranchAmbiguity` warning is issued.
    """
    U = V.as_square(U, "U")
    T, Q = linalg.schur(U, output="complex")
    lam = np.diag(T)
    phase = np.angle(lam)
    near = np.abs(lam + 1) < BRANCH_TOL
    if np.any(near):
        warnings.warn("eigenvalue at -1: logarithm branch is ambiguous, using +pi", BranchAmbiguity)
        phase = np.where(near, np.pi, phase)
    return (Q * (1j * phase)) @ Q.conj().T


def skew_hermitian_exp(S):
    """``exp(S)`` for skew-Hermitian ``S`` via the eigendecomposition of ``-jS``."""
    lam, Q = np.linalg.eigh(-1j * S)
    return (Q * np.exp(1j * lam)) @ Q.conj().T


def geodesic_interpolate(a: UnitarySample, b: UnitarySample, omega):
    """Point on the unitary geodesic from ``a.U`` to ``b.U`` at frequency ``omega``.

    ``U(t) = Ua expm(t logm(Ua* Ub))`` with ``t = (omega - wa) / (wb - wa)``.
    """
    t = (omega - a.omega) / (b.omega - a.omega)
    if t == 0:
        return a.U.copy()
    if t == 1:
        return b.U.copy()
    S = unitary_log(a.U.conj().T @ b.U)
    return a.U @ skew_hermitian_exp(t * S)


def geodesic_track(samples: Sequence[UnitarySample], omegas, periodic=True):
    """Piecewise geodesic interpolation of sorted samples on a frequency grid.

    With ``periodic=True`` the gap between the last and first sample wraps
    around the unit circle.
    """
    samples = sorted(samples, key=lambda s: s.omega)
    ws = np.array([s.omega for s in samples])
    out = []
    for w in np.ravel(omegas):
        out.append(_interp_one(samples, ws, float(w), periodic))
    return np.stack(out)


def _interp_one(samples, ws, w, periodic):
    exact = np.flatnonzero(np.abs(ws - w) == 0)
    if exact.size:
        return samples[exact[0]].U.copy()
    j = np.searchsorted(ws, w)
    n = len(samples)
    if 0 < j < n:
        return geodesic_interpolate(samples[j - 1], samples[j], w)
    if not periodic or n == 1:
        return samples[0 if j == 0 else n - 1].U.copy()
    last, first = samples[-1], samples[0]
    wrapped = UnitarySample(first.omega + 2 * np.pi, first.U)
    if j == 0:
        w = w + 2 * np.pi
    return geodesic_interpolate(last, wrapped, w)


def frobenius_error(U, V_):
    return float(np.linalg.norm(np.asarray(U) - np.asarray(V_)))


def flag_distance(U, V_):
    """Frobenius distance modulo right multiplication by diagonal unitaries.

    ``min_Theta ||U - V Theta||_F`` over diagonal unitary ``Theta``. The
    minimizer aligns each column of ``V`` with the matching column of ``U``,
    ``Theta_ii = phase((V* U)_ii)``; the residual is then formed directly,
    which unlike ``sqrt(2m - 2 sum_i |(V* U)_ii|)`` keeps full relative
    accuracy for nearly equal inputs. Stacks of shape ``(..., m, m)`` are
    accepted.
    """
    U, V_ = np.asarray(U), np.asarray(V_)
    d = np.einsum("...ki,...ki->...i", V_.conj(), U)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1), 1)
    dist = np.linalg.norm(U - V_ * phase[..., None, :], axis=(-2, -1))
    return float(dist) if dist.ndim == 0 else dist


def frobenius_errors(Us, Vs):
    return np.linalg.norm(np.asarray(Us) - np.asarray(Vs), axis=(-2, -1))
