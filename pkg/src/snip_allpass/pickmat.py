"""The modified Pick matrix of a boundary interpolation data set.

Diagonal blocks are the group-delay matrices; off-diagonal blocks are
``B_i* J B_k / (1 - exp(j(w_i - w_k)))``. Solvability of the all-pass
interpolation problem is equivalent to this matrix being positive definite.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import ValidatedDataSet, signature_matrix
from .exceptions import MissingGamma, NonHermitianInput, SingularLeadingBlock

HERMITIAN_RTOL = 1e-10
LEADING_BLOCK_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class PickMatrix:
    P: np.ndarray
    m: int
    n: int

    def block(self, i, k):
        m = self.m
        return self.P[i * m : (i + 1) * m, k * m : (k + 1) * m]

    def hermitian_part(self):
        return (self.P + self.P.conj().T) / 2


@dataclass(frozen=True)
class PDResult:
    """Outcome of a positive-definiteness test.

    ``witness`` is the smallest eigenvalue of the Hermitian part.
    """

    is_pd: bool
    witness: float
    margin: float

    def __bool__(self):
        return self.is_pd


def off_diagonal_block(Bi, Bk, wi, wk):
    J = signature_matrix(Bi.shape[1])
    return Bi.conj().T @ J @ Bk / (1 - np.exp(1j * (wi - wk)))


def pick_from_parts(omegas, lifts, gammas):
    n = len(omegas)
    m = lifts[0].shape[1]
    P = np.zeros((n * m, n * m), dtype=complex)
    for i in range(n):
        P[i * m : (i + 1) * m, i * m : (i + 1) * m] = gammas[i]
        for k in range(n):
            if k != i:
                P[i * m : (i + 1) * m, k * m : (k + 1) * m] = off_diagonal_block(
                    lifts[i], lifts[k], omegas[i], omegas[k]
                )
    return P


def build_pick(ds: ValidatedDataSet) -> PickMatrix:
    """Assemble the ``nm x nm`` Pick matrix of a data set with group delays."""
    missing = [i for i, g in enumerate(ds.gammas) if g is None]
    if missing:
        raise MissingGamma(f"points {missing} have no group-delay matrix")
    P = pick_from_parts(ds.omegas, [lift.B for lift in ds.lifts], ds.gammas)
    return PickMatrix(P, ds.m, ds.n)


def default_margin(P):
    P = P.P if isinstance(P, PickMatrix) else P
    return 1e-10 * float(np.real(np.trace(P))) / P.shape[0]


def is_positive_definite(P, margin=None, hermitian_rtol=HERMITIAN_RTOL) -> PDResult:
    """Test ``P > margin * I`` by Cholesky, reporting the smallest eigenvalue.

    ``margin`` defaults to ``1e-10 * trace(P) / (nm)``.
    """
    P = P.P if isinstance(P, PickMatrix) else np.asarray(P, dtype=complex)
    scale = np.linalg.norm(P)
    if np.linalg.norm(P - P.conj().T) > hermitian_rtol * max(scale, 1.0):
        raise NonHermitianInput("Pick matrix is not Hermitian")
    if margin is None:
        margin = default_margin(P)
    H = (P + P.conj().T) / 2
    witness = float(np.linalg.eigvalsh(H)[0])
    try:
        np.linalg.cholesky(H - margin * np.eye(H.shape[0]))
        chol_ok = True
    except np.linalg.LinAlgError:
        chol_ok = False
    return PDResult(bool(chol_ok and witness > margin), witness, float(margin))


def schur_reduce(P: PickMatrix) -> PickMatrix:
    """Schur complement of ``P`` with respect to its leading ``m x m`` block."""
    m = P.m
    G1 = P.P[:m, :m]
    if not np.linalg.cond(G1) < LEADING_BLOCK_COND_LIMIT:
        raise SingularLeadingBlock("leading block of the Pick matrix is singular")
    P21 = P.P[m:, :m]
    P12 = P.P[:m, m:]
    S = P.P[m:, m:] - P21 @ np.linalg.solve(G1, P12)
    return PickMatrix(S, m, P.n - 1)
