"""Group-delay selection by trace minimization over the Pick cone.

Minimizes ``sum_i trace(Gamma_i)`` subject to the Pick matrix being positive
definite, with the off-diagonal Pick blocks fixed by the data. Solved by a
log-det barrier path-following method: for decreasing ``mu`` the barrier
objective ``trace(P) - mu * log det(P - margin I)`` is minimized by damped
Newton steps on the Hermitian diagonal blocks.
"""

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import _validation as V
from .dataset import lift_neutral
from .exceptions import InfeasibleStart, NoConvergence
from .pickmat import pick_from_parts


@dataclass
class BarrierConfig:
    """Parameters of the barrier method.

    ``mu_init=None`` starts the path at ``trace(P_init) / (nm)``.
    """

    mu_init: Optional[float] = None
    mu_decay: float = 0.2
    mu_final: float = 1e-4
    pd_margin: float = 1e-6
    newton_tol: float = 1e-9
    max_newton: int = 100
    max_outer: int = 100

    def __post_init__(self):
        if not 0 < self.mu_decay < 1:
            raise ValueError("mu_decay must lie in (0, 1)")
        for name in ("mu_final", "pd_margin", "newton_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mu_init is not None and not self.mu_init > self.mu_final:
            raise ValueError("mu_init must exceed mu_final")
        if self.max_newton < 1 or self.max_outer < 1:
            raise ValueError("iteration budgets must be positive")


@dataclass
class GammaAssignment:
    gammas: List[np.ndarray]
    achieved_trace: float
    pd_witness: float
    converged: bool = True
    trace_history: List[float] = field(default_factory=list)
    mu_history: List[float] = field(default_factory=list)


def hermitian_basis(m):
    """Orthonormal basis of m x m Hermitian matrices under ``Re tr(X* Y)``."""
    basis = []
    for p in range(m):
        E = np.zeros((m, m), dtype=complex)
        E[p, p] = 1
        basis.append(E)
    s = 1 / np.sqrt(2)
    for p in range(m):
        for q in range(p + 1, m):
            E = np.zeros((m, m), dtype=complex)
            E[p, q] = E[q, p] = s
            basis.append(E)
            E = np.zeros((m, m), dtype=complex)
            E[p, q] = -1j * s
            E[q, p] = 1j * s
            basis.append(E)
    return np.stack(basis)


def _offdiag_pick(omegas, As):
    lifts = [lift_neutral(A).B for A in As]
    m = As[0].shape[0]
    return pick_from_parts(omegas, lifts, [np.zeros((m, m))] * len(omegas))


def feasible_initialization(omegas, As, margin=1e-6):
    """Scaled-identity group delays that make the Pick matrix diagonally dominant.

    ``Gamma_i = (sum_{k != i} ||P_ik||_2 + margin + 1) I``; by block Gershgorin
    the Pick matrix then exceeds ``margin * I``.
    """
    omegas = np.asarray(omegas, dtype=float)
    As = V.as_matrix_stack(As)
    n, m = len(omegas), As.shape[1]
    P0 = _offdiag_pick(omegas, As)
    gammas = []
    for i in range(n):
        radius = sum(
            np.linalg.norm(P0[i * m : (i + 1) * m, k * m : (k + 1) * m], 2)
            for k in range(n) if k != i
        )
        gammas.append((radius + margin + 1) * np.eye(m, dtype=complex))
    return gammas


class _Barrier:
    def __init__(self, P0, n, m, margin):
        self.P0, self.n, self.m, self.margin = P0, n, m, margin
        self.E = hermitian_basis(m)
        # column-major vec of each basis element and of its transpose
        self.vecE = self.E.transpose(0, 2, 1).reshape(len(self.E), -1).T
        self.vecET = self.E.reshape(len(self.E), -1).T

    def assemble(self, x):
        m, n = self.m, self.n
        blocks = np.einsum("ia,apq->ipq", x.reshape(n, -1), self.E)
        P = self.P0.copy()
        for i in range(n):
            P[i * m : (i + 1) * m, i * m : (i + 1) * m] = blocks[i]
        return P, blocks

    def shifted_cholesky(self, P):
        try:
            return np.linalg.cholesky(P - self.margin * np.eye(P.shape[0]))
        except np.linalg.LinAlgError:
            return None

    def value(self, x, mu):
        P, _ = self.assemble(x)
        L = self.shifted_cholesky(P)
        if L is None:
            return np.inf
        logdet = 2 * np.sum(np.log(np.real(np.diag(L))))
        return float(np.real(np.trace(P))) - mu * logdet

    def grad_hess(self, x, mu):
        P, _ = self.assemble(x)
        m, n = self.m, self.n
        W = np.linalg.inv(P - self.margin * np.eye(P.shape[0]))
        W = (W + W.conj().T) / 2
        nb = len(self.E)
        trE = np.real(np.einsum("app->a", self.E))
        g = np.empty(n * nb)
        H = np.empty((n * nb, n * nb))
        for i in range(n):
            Wii = W[i * m : (i + 1) * m, i * m : (i + 1) * m]
            g[i * nb : (i + 1) * nb] = trE - mu * np.real(np.einsum("apq,qp->a", self.E, Wii))
            for k in range(i, n):
                Wik = W[i * m : (i + 1) * m, k * m : (k + 1) * m]
                Wki = W[k * m : (k + 1) * m, i * m : (i + 1) * m]
                # tr(E_a W_ik E_b W_ki) via (W_ki^T kron W_ik) vec(E_b)
                M = np.kron(Wki.T, Wik)
                blk = mu * np.real(self.vecET.T @ M @ self.vecE)
                H[i * nb : (i + 1) * nb, k * nb : (k + 1) * nb] = blk
                H[k * nb : (k + 1) * nb, i * nb : (i + 1) * nb] = blk.T
        return g, H


def optimize_group_delays(omegas, As, cfg: Optional[BarrierConfig] = None) -> GammaAssignment:
    """Choose group-delay matrices of minimum total trace with a positive definite Pick matrix.

    Parameters
    ----------
    omegas : array_like, shape (n,)
    As : array_like, shape (n, m, m)
        Unitary responses.
    cfg : BarrierConfig, optional

    Returns
    -------
    GammaAssignment
        ``converged`` is False (and a :class:`NoConvergence` warning issued)
        if an iteration budget ran out; the best feasible iterate is returned.
    """
    cfg = cfg or BarrierConfig()
    omegas = np.asarray(omegas, dtype=float).reshape(-1)
    As = V.as_matrix_stack(As, "As")
    for k, A in enumerate(As):
        V.check_unitary(A, name=f"As[{k}]")
    n, m = As.shape[0], As.shape[1]
    P0 = _offdiag_pick(omegas, As)
    barrier = _Barrier(P0, n, m, cfg.pd_margin)

    init = feasible_initialization(omegas, As, cfg.pd_margin)
    # coordinates of a Hermitian block in the orthonormal basis
    x = np.concatenate([np.real(np.einsum("apq,qp->a", barrier.E, G)) for G in init])
    P, _ = barrier.assemble(x)
    if barrier.shifted_cholesky(P) is None:
        raise InfeasibleStart("initial group delays do not give a positive definite Pick matrix")

    mu = cfg.mu_init if cfg.mu_init is not None else float(np.real(np.trace(P))) / (n * m)
    mu = max(mu, cfg.mu_final)
    converged = True
    traces, mus = [], []
    for _ in range(cfg.max_outer):
        x, centered = _center(barrier, x, mu, cfg)
        converged &= centered
        P, _ = barrier.assemble(x)
        traces.append(float(np.real(np.trace(P))))
        mus.append(mu)
        if mu <= cfg.mu_final:
            break
        mu = max(mu * cfg.mu_decay, cfg.mu_final)
    else:
        converged = False

    P, blocks = barrier.assemble(x)
    if not converged:
        warnings.warn("barrier method did not converge; returning best feasible iterate", NoConvergence)
    witness = float(np.linalg.eigvalsh(P)[0])
    gammas = [(b + b.conj().T) / 2 for b in blocks]
    return GammaAssignment(gammas, traces[-1], witness, converged, traces, mus)


def _center(barrier, x, mu, cfg):
    """Damped Newton minimization of the barrier objective at fixed ``mu``."""
    fx = barrier.value(x, mu)
    for _ in range(cfg.max_newton):
        g, H = barrier.grad_hess(x, mu)
        try:
            dx = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(H, g, rcond=None)[0]
        decrement = -float(g @ dx)
        if decrement / 2 <= cfg.newton_tol:
            # one last full step is nearly free and squares the residual
            f_new = barrier.value(x + dx, mu)
            return (x + dx, True) if f_new <= fx else (x, True)
        t = 1.0
        while True:
            x_new = x + t * dx
            f_new = barrier.value(x_new, mu)
            if f_new <= fx - 0.25 * t * decrement:
                break
            t *= 0.5
            if t < 1e-14:
                return x, False
        x, fx = x_new, f_new
    return x, False
