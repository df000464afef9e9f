"""Interpolation data sets: validation, neutral lifting and derotation.

A data set is a list of points ``(omega, A, gamma)`` where ``A`` is the
unitary response wanted at ``exp(j*omega)`` and ``gamma`` is the Hermitian
positive definite group-delay matrix wanted there. Internally each ``A`` is
replaced by a ``2m x m`` neutral lift ``B`` whose column span is the graph of
``A``; the reduction step of the construction produces lifts that are no
longer of the canonical form ``[I; A]``, so everything downstream works with
``B`` and recovers ``A = B2 @ inv(B1)`` when needed.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import _validation as V
from .exceptions import (
    DimensionMismatch,
    DuplicateFrequency,
    FrequencyAtPi,
    NonHermitianGamma,
    NonInvertibleTopBlock,
    NonPositiveGamma,
    ValidationError,
)

TOP_BLOCK_COND_LIMIT = 1e10


def signature_matrix(m):
    """Return ``J = diag(I_m, -I_m)``."""
    return np.diag(np.r_[np.ones(m), -np.ones(m)]).astype(complex)


@dataclass(frozen=True, eq=False)
class InterpolationPoint:
    """One raw constraint: response ``A`` and optional group delay ``gamma`` at ``omega``."""

    omega: float
    A: np.ndarray
    gamma: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class NeutralLift:
    """A ``2m x m`` matrix ``B`` with ``B* J B = 0``."""

    B: np.ndarray

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def block1(self):
        return self.B[: self.m]

    @property
    def block2(self):
        return self.B[self.m :]

    def neutrality_error(self):
        return float(np.linalg.norm(self.B.conj().T @ signature_matrix(self.m) @ self.B))

    def ratio(self, cond_limit=TOP_BLOCK_COND_LIMIT):
        """Return the unitary ``A = B2 inv(B1)`` spanned by this lift."""
        B1 = self.block1
        if not np.linalg.cond(B1) < cond_limit:
            raise NonInvertibleTopBlock(
                f"top block of neutral lift is singular (cond = {np.linalg.cond(B1):.3e})"
            )
        return np.linalg.solve(B1.T, self.block2.T).T


def lift_neutral(A, tol=V.UNITARY_TOL):
    """Lift a unitary ``A`` to the canonical neutral subspace basis ``[I; A]``."""
    A = V.check_unitary(A, tol, name="A")
    m = A.shape[0]
    return NeutralLift(np.vstack([np.eye(m, dtype=complex), A]))


@dataclass(frozen=True, eq=False)
class ValidatedDataSet:
    """An ordered, validated interpolation data set.

    Attributes
    ----------
    omegas : ndarray, shape (n,)
        Interpolation frequencies in (-pi, pi].
    lifts : tuple of NeutralLift
        Neutral lifts of the unitary responses.
    gammas : tuple of ndarray or None
        Group-delay matrices, expressed relative to the lift ``B`` (for the
        canonical lift ``[I; A]`` these are the group delays themselves).
    """

    omegas: np.ndarray
    lifts: tuple
    gammas: tuple = field(default=())

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float).reshape(-1)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "lifts", tuple(self.lifts))
        gammas = tuple(self.gammas) if len(self.gammas) else (None,) * len(omegas)
        object.__setattr__(self, "gammas", gammas)
        if not (len(omegas) == len(self.lifts) == len(gammas)):
            raise DimensionMismatch("omegas, lifts and gammas must have equal length")
        if len(omegas) == 0:
            raise ValidationError("a data set needs at least one point")
        ms = {lift.m for lift in self.lifts}
        if len(ms) != 1:
            raise DimensionMismatch(f"points have mixed dimensions {sorted(ms)}")

    @property
    def m(self):
        return self.lifts[0].m

    @property
    def n(self):
        return len(self.omegas)

    @property
    def has_gammas(self):
        return all(g is not None for g in self.gammas)

    @cached_property
    def ratios(self):
        """Unitary responses ``A_i = B_i2 inv(B_i1)``, one per point."""
        return tuple(lift.ratio() for lift in self.lifts)

    def canonical_gamma(self, i):
        """Group delay of point ``i`` re-expressed for the canonical lift ``[I; A_i]``.

        The Pick diagonal block for a lift ``[I; A] Y`` is ``Y* Gamma Y``, so
        the canonical value is ``inv(Y)* Gamma inv(Y)``.
        """
        Y = self.lifts[i].block1
        Yinv = np.linalg.inv(Y)
        G = Yinv.conj().T @ self.gammas[i] @ Yinv
        return (G + G.conj().T) / 2

    def with_gammas(self, gammas):
        gammas = tuple(V.as_square(g, "gamma", self.m) for g in gammas)
        return ValidatedDataSet(self.omegas, self.lifts, gammas)

    def raw_points(self):
        """Return the data set as a list of :class:`InterpolationPoint` (canonical form)."""
        pts = []
        for i, (w, A) in enumerate(zip(self.omegas, self.ratios)):
            g = None if self.gammas[i] is None else self.canonical_gamma(i)
            pts.append(InterpolationPoint(float(w), A, g))
        return pts


def validate_dataset(
    raw_points: Sequence[InterpolationPoint],
    *,
    unitary_tol=V.UNITARY_TOL,
    hermitian_tol=V.HERMITIAN_TOL,
    omega_separation=V.OMEGA_SEPARATION,
    pi_exclusion=V.PI_EXCLUSION,
) -> ValidatedDataSet:
    """Check the raw points and build the lifted data set.

    Raises
    ------
    DuplicateFrequency, NonUnitary, NonHermitianGamma, NonPositiveGamma, FrequencyAtPi
    """
    raw_points = list(raw_points)
    if not raw_points:
        raise ValidationError("a data set needs at least one point")
    m = V.as_square(raw_points[0].A, "A").shape[0]
    omegas, lifts, gammas = [], [], []
    for k, pt in enumerate(raw_points):
        A = V.as_square(pt.A, f"A[{k}]", m)
        w = float(V.wrap_angle(pt.omega))
        if abs(w - np.pi) < pi_exclusion:
            raise FrequencyAtPi(
                f"point {k} lies at omega = pi; shift the data with a frequency rotation"
            )
        lifts.append(lift_neutral(A, unitary_tol))
        gammas.append(None if pt.gamma is None else _check_gamma(pt.gamma, m, hermitian_tol, k))
        omegas.append(w)
    omegas = np.array(omegas)
    for i in range(len(omegas)):
        for k in range(i):
            if V.circular_distance(omegas[i], omegas[k]) < omega_separation:
                raise DuplicateFrequency(
                    f"points {k} and {i} share frequency {omegas[i]:.12g} within {omega_separation:g}"
                )
    return ValidatedDataSet(omegas, tuple(lifts), tuple(gammas))


def _check_gamma(gamma, m, tol, k):
    G = V.as_square(gamma, f"gamma[{k}]", m)
    if V.hermitian_error(G) > tol:
        raise NonHermitianGamma(f"gamma[{k}] is not Hermitian (||G - G*|| = {V.hermitian_error(G):.3e})")
    lam = np.linalg.eigvalsh((G + G.conj().T) / 2)[0]
    if not lam > 0:
        raise NonPositiveGamma(f"gamma[{k}] is not positive definite (min eigenvalue {lam:.3e})")
    return G


def derotate(ds: ValidatedDataSet, C) -> ValidatedDataSet:
    """Replace every response ``A_i`` by ``A_i @ C`` for a unitary ``C``.

    Group delays become ``C* Gamma_i C`` (unchanged for a scalar ``C``), which
    keeps the Pick matrix congruent to the original. A filter designed for
    the derotated set must be right-multiplied by ``C*`` to solve the
    original set.
    """
    C = V.check_unitary(V.as_square(C, "C", ds.m), name="C")
    lifts = []
    for lift in ds.lifts:
        # B2 B1^-1 C = (B2 B1^-1 C B1) B1^-1, so only the bottom block changes
        B1 = lift.block1
        B2 = lift.block2 @ np.linalg.solve(B1, C @ B1)
        lifts.append(NeutralLift(np.vstack([B1, B2])))
    gammas = ds.gammas
    if ds.has_gammas:
        # the Pick block for the lift [B1; B2'] is B1* C* (canonical) C B1
        gammas = []
        for lift, G in zip(ds.lifts, ds.gammas):
            B1 = lift.block1
            T = np.linalg.solve(B1, C @ B1)
            Gc = T.conj().T @ G @ T
            gammas.append((Gc + Gc.conj().T) / 2)
        gammas = tuple(gammas)
    return ValidatedDataSet(ds.omegas, tuple(lifts), gammas)


def points_from_arrays(omegas, As, gammas=None):
    """Zip frequency, response and (optional) group-delay arrays into points."""
    omegas = np.asarray(omegas, dtype=float).reshape(-1)
    As = V.as_matrix_stack(As, "As")
    if len(As) != len(omegas):
        raise DimensionMismatch("omegas and As must have equal length")
    if gammas is None:
        gammas = [None] * len(omegas)
    elif len(gammas) != len(omegas):
        raise DimensionMismatch("omegas and gammas must have equal length")
    return [InterpolationPoint(float(w), A, g) for w, A, g in zip(omegas, As, gammas)]
