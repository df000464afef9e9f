"""Recursive construction of matrix all-pass interpolants.

The first point of a data set is peeled off with a degree-one J-lossless
factor: the remaining points are mapped through it (reduction) to a data set
one point smaller whose Pick matrix is the Schur complement of the original,
the smaller problem is solved, and the solution is pushed back through the
factor (lifting), raising the degree by one. A single point is handled by
lifting the identity filter.

With ``z1 = exp(j w1)``, ``beta(z) = z1 (1 + z) / (1 + z1)`` and
``K = B1 inv(Gamma1) B1*`` the factor used here is::

    Theta(z) = (z - z1) I + beta(z) J K          (lifting, acts on [D; -N])
    H(z)     = (z - z1) I - beta(z) K J          (reduction, acts on lifts)

On the unit circle ``H(z) = -z z1 Theta(z)*`` and ``H J H* = |z - z1|^2 J``.
"""

from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import linalg

from . import _validation as V
from .dataset import (
    NeutralLift,
    ValidatedDataSet,
    derotate,
    points_from_arrays,
    signature_matrix,
    validate_dataset,
)
from .exceptions import (
    DegenerateConstruction,
    DimensionMismatch,
    FrequencyAtPi,
    LostNeutrality,
    MissingGamma,
    NonInvertibleTopBlock,
    PickNotPositiveDefinite,
    SingularDenominator,
    SingularGamma,
)
from .pickmat import build_pick, is_positive_definite, off_diagonal_block
from .polyfilter import AllPassFilter, MatrixPolynomial, eval_filter, eval_poly

COND_LIMIT = 1e10
NEUTRALITY_RTOL = 1e-8
MAX_RETRIES = 8
WORK_DPS = 30
PI_NORMALIZE_OFFSET = 1e-3


def _check_gamma_invertible(Gamma, cond_limit):
    Gamma = V.as_square(Gamma, "Gamma1")
    H = (Gamma + Gamma.conj().T) / 2
    lam = np.linalg.eigvalsh(H)
    if not (lam[0] > 0 and lam[-1] / lam[0] < cond_limit):
        raise SingularGamma(f"Gamma1 is singular or indefinite (eigenvalues {lam[0]:.3e}..{lam[-1]:.3e})")
    return Gamma


def _check_not_pi(omega1):
    z1 = np.exp(1j * omega1)
    if abs(1 + z1) < 2 * np.sin(V.PI_EXCLUSION / 2):
        raise FrequencyAtPi("interpolation frequency at pi; rotate the data first")
    return z1


@dataclass(frozen=True, eq=False)
class ReductionOperator:
    """Degree-one factor attached to one interpolation point."""

    omega1: float
    B1: np.ndarray
    Gamma1: np.ndarray

    @property
    def m(self):
        return self.B1.shape[1]

    @property
    def z1(self):
        return np.exp(1j * self.omega1)

    def kernel(self):
        """``K = B1 inv(Gamma1) B1*`` (independent of how ``B1`` is normalized)."""
        return self.B1 @ np.linalg.solve(self.Gamma1, self.B1.conj().T)

    def beta(self, z):
        return self.z1 * (1 + z) / (1 + self.z1)

    def H(self, z):
        """The ``2m x 2m`` reduction matrix at ``z``."""
        J = signature_matrix(self.m)
        return (z - self.z1) * np.eye(2 * self.m) - self.beta(z) * self.kernel() @ J

    def H_coeffs(self):
        """Coefficients ``[H0, H1]`` of ``H(z) = H0 + H1 z``."""
        J = signature_matrix(self.m)
        KJ = self.kernel() @ J
        c = self.z1 / (1 + self.z1)
        I = np.eye(2 * self.m)
        return np.stack([-self.z1 * I - c * KJ, I - c * KJ])


def base_filter(omega1, A1, Gamma1, cond_limit=COND_LIMIT) -> AllPassFilter:
    """Degree-one all-pass filter with ``G(exp(j w1)) = A1`` and group delay ``Gamma1``.

    ``N(z) = (z - z1) I + beta(z) A1 inv(Gamma1) (I - A1*)`` and ``D(z)`` is the
    same without the leading ``A1``. The group delay equals ``Gamma1`` when
    ``I - A1*`` is invertible; otherwise the constraint is lost and
    :func:`design_allpass` retries with a derotated data set.
    """
    A1 = V.as_square(A1, "A1")
    m = A1.shape[0]
    I = MatrixPolynomial.identity(m)
    N, D = lift_solution(omega1, A1, Gamma1, I, I, cond_limit=cond_limit, check_degenerate=False)
    return AllPassFilter(N, D, (float(omega1),))


def lift_solution(
    omega1, A1, Gamma1, Nhat: MatrixPolynomial, Dhat: MatrixPolynomial,
    cond_limit=COND_LIMIT, check_degenerate=True, ctx=None,
):
    """Push a solution of the reduced problem back through the point ``(w1, A1, Gamma1)``.

    ``N = (z - z1) Nhat + beta(z) A1 inv(Gamma1) Q`` and
    ``D = (z - z1) Dhat + beta(z) inv(Gamma1) Q`` with ``Q = Dhat - A1* Nhat``.

    Parameters
    ----------
    ctx : mpmath context, optional
        Run the arithmetic at this context's precision. ``Nhat`` and ``Dhat``
        must then hold the context's numbers (see :func:`to_context`), and so
        will the result. ``A1`` and ``Gamma1`` may be given as context
        numbers too.

    Returns
    -------
    N, D : MatrixPolynomial
        Degree one higher than ``Nhat``, ``Dhat``.
    """
    z1 = _check_not_pi(omega1)
    exact = ctx is not None and np.asarray(A1).dtype == object
    A1c = V.as_square(from_context(A1), "A1")
    m = A1c.shape[0]
    _check_gamma_invertible(V.as_square(from_context(Gamma1), "Gamma1", m), cond_limit)
    if Nhat.m != m or Dhat.m != m:
        raise DimensionMismatch("reduced solution has the wrong dimension")
    if Nhat.degree != Dhat.degree:
        raise DimensionMismatch("reduced numerator and denominator differ in degree")
    if ctx is not None:
        # the factor is J-lossless only as far as |z1| = 1 and A1* A1 = I
        # hold, so both are made exact to the working precision
        z1 = ctx.expj(omega1)
        A1 = _polish_unitary(to_context(A1, ctx))
        Gi = _hermitian(_mp_inverse(to_context(Gamma1, ctx), ctx) if exact else to_context(np.linalg.inv(Gamma1), ctx))
    else:
        A1 = A1c
        Gi = _hermitian(np.linalg.inv(V.as_square(Gamma1)))
    Q = Dhat - MatrixPolynomial.constant(A1.conj().T) @ Nhat
    if check_degenerate:
        Qz1 = from_context(eval_poly(Q, z1))
        if not np.linalg.cond(Qz1) < cond_limit:
            raise DegenerateConstruction(
                "reduced solution shares an eigenvector with A1 at w1; group delay not controlled"
            )
    c = z1 / (1 + z1)
    # both factors have degree one with a scalar or repeated coefficient, so
    # the products are coefficient shifts plus one matrix product per term;
    # array on the left keeps mpmath scalars from converting the array
    GQ = [Gi @ q * c for q in Q.coeffs]
    AGQ = [A1 @ g for g in GQ]
    return _shift_add(Nhat.coeffs, z1, AGQ), _shift_add(Dhat.coeffs, z1, GQ)


def _shift_add(P, z1, R):
    """Coefficients of ``(z - z1) P(z) + (1 + z) R(z)``."""
    d = max(len(P), len(R))
    out = [0] * (d + 1)
    for k, p in enumerate(P):
        out[k] = out[k] - p * z1
        out[k + 1] = out[k + 1] + p
    for k, r in enumerate(R):
        out[k] = out[k] + r
        out[k + 1] = out[k + 1] + r
    return MatrixPolynomial(out)


def to_context(M, ctx):
    """Object array of ``ctx.mpc`` numbers with the values of ``M``."""
    M = np.asarray(M)
    if M.dtype == object:
        return M
    out = np.empty(M.shape, dtype=object)
    for idx, v in np.ndenumerate(M.astype(complex)):
        out[idx] = ctx.mpc(v.real, v.imag)
    return out


def from_context(M):
    """Round an array of context numbers (or any numbers) to complex128."""
    M = np.asarray(M)
    if M.dtype != object:
        return M.astype(complex)
    return np.vectorize(complex, otypes=[complex])(M)


def _hermitian(M):
    return (M + M.conj().T) / 2


def _mp_inverse(M, ctx):
    inv = ctx.inverse(ctx.matrix(M.tolist()))
    return np.array(inv.tolist(), dtype=object)


def _polish_unitary(A, steps=3):
    # Newton-Schulz steps toward the polar factor; products only, so they
    # run at any precision
    I = np.eye(A.shape[0], dtype=int).astype(object)
    for _ in range(steps):
        A = A @ (3 * I - A.conj().T @ A) / 2
    return A


def reduce_dataset(ds: ValidatedDataSet, cond_limit=COND_LIMIT, normalize=True) -> ValidatedDataSet:
    """Map points ``2..n`` through the factor of point 1.

    ``Bhat_i = H(z_i) B_i / (z_i - z1)`` and
    ``Gammahat_i = Gamma_i - P_i1 inv(Gamma1) P_1i``, so the Pick matrix of
    the result is the Schur complement of the input's Pick matrix. For a
    canonical lift ``B = [I; A]`` the group-delay update reads
    ``Gamma_i - (I - A_i* A1) inv(Gamma1) (I - A1* A_i) / |1 - exp(j(w_i - w1))|^2``.

    With ``normalize`` each reduced lift is rescaled to orthonormal columns
    ``Bhat_i inv(R_i)`` and its group delay to ``inv(R_i)* Gammahat_i inv(R_i)``;
    the Pick matrix is then congruent to the Schur complement rather than
    equal to it.
    """
    if ds.n < 2:
        raise DimensionMismatch("reduction needs at least two points")
    if not ds.has_gammas:
        raise MissingGamma("reduction needs group-delay matrices")
    _check_not_pi(ds.omegas[0])
    G1 = _check_gamma_invertible(ds.gammas[0], cond_limit)
    w1, B1 = ds.omegas[0], ds.lifts[0].B
    op = ReductionOperator(w1, B1, G1)
    J = signature_matrix(ds.m)
    lifts, gammas = [], []
    for i in range(1, ds.n):
        wi, Bi = ds.omegas[i], ds.lifts[i].B
        zi = np.exp(1j * wi)
        Bh = op.H(zi) @ Bi / (zi - op.z1)
        neut = np.linalg.norm(Bh.conj().T @ J @ Bh)
        if not neut <= NEUTRALITY_RTOL * max(1.0, np.linalg.norm(Bh) ** 2):
            raise LostNeutrality(f"reduced lift {i} lost neutrality ({neut:.3e})")
        if not np.linalg.cond(Bh[: ds.m]) < cond_limit:
            raise NonInvertibleTopBlock(f"reduced lift {i} has a singular top block")
        Pi1 = off_diagonal_block(Bi, B1, wi, w1)
        Gh = ds.gammas[i] - Pi1 @ np.linalg.solve(G1, Pi1.conj().T)
        # rescale to orthonormal columns; the Pick block follows by congruence
        if normalize:
            Rinv = np.linalg.inv(np.linalg.qr(Bh, mode="r"))
            Gh = Rinv.conj().T @ Gh @ Rinv
            Bh = Bh @ Rinv
        lifts.append(NeutralLift(Bh))
        gammas.append((Gh + Gh.conj().T) / 2)
    return ValidatedDataSet(ds.omegas[1:], tuple(lifts), tuple(gammas))


def _solve(ds, cond_limit, work_dps=WORK_DPS):
    # with nearly singular group delays both the reduction and the lifting
    # subtract large terms that nearly cancel, so at raised precision the
    # whole recursion runs in context numbers and is rounded once at the end
    ctx = None
    I = np.eye(ds.m)
    if work_dps is None:
        levels = _levels(ds, cond_limit)
    else:
        ctx = mpmath.MPContext()
        ctx.dps = work_dps
        I = to_context(I, ctx)
        levels = _levels_exact(ds, cond_limit, ctx)
    N = D = MatrixPolynomial([I])
    for w1, A1, G1 in reversed(levels):
        N, D = lift_solution(w1, A1, G1, N, D, cond_limit=cond_limit, ctx=ctx)
        # at raised precision coefficient growth costs nothing until rounding
        if ds.n > 1 and ctx is None:
            N, D = _balance(N, D)
    if ds.n > 1 and ctx is not None:
        N, D = _balance(N, D)
    return MatrixPolynomial(from_context(N.coeffs)), MatrixPolynomial(from_context(D.coeffs))


def _levels(ds, cond_limit):
    levels = []
    cur = ds
    while cur.n > 1:
        cur = _pivot(cur)
        levels.append(_level(cur))
        cur = reduce_dataset(cur, cond_limit)
    levels.append(_level(cur))
    return levels


def _levels_exact(ds, cond_limit, ctx):
    """:func:`_levels` in context arithmetic; decisions and checks use rounded values."""
    m = ds.m
    pts = [(float(w), to_context(l.B, ctx), to_context(g, ctx)) for w, l, g in zip(ds.omegas, ds.lifts, ds.gammas)]
    levels = []
    while True:
        cur = ValidatedDataSet(
            [p[0] for p in pts],
            [NeutralLift(from_context(p[1])) for p in pts],
            [_hermitian(from_context(p[2])) for p in pts],
        )
        k = _pivot_index(cur)
        pts.insert(0, pts.pop(k))
        w1, B1, G1 = pts[0]
        _check_not_pi(w1)
        _check_gamma_invertible(from_context(G1), cond_limit)
        if not np.linalg.cond(from_context(B1[:m])) < cond_limit:
            raise NonInvertibleTopBlock("top block of a reduced lift is singular")
        Yinv = _mp_inverse(B1[:m], ctx)
        levels.append((w1, B1[m:] @ Yinv, _hermitian(Yinv.conj().T @ G1 @ Yinv)))
        if len(pts) == 1:
            return levels
        G1inv = _mp_inverse(G1, ctx)
        JB1 = np.vstack([B1[:m], -B1[m:]])
        z1 = ctx.expj(w1)
        c = z1 / (1 + z1)
        nxt = []
        for wi, Bi, Gi in pts[1:]:
            zi = ctx.expj(wi)
            # X = B1* J Bi serves both the kernel product K J Bi = B1 inv(G1) X
            # and the Pick block P_i1 = X* / (1 - exp(j(wi - w1)))
            X = JB1.conj().T @ Bi
            Y = G1inv @ X
            Bh = Bi - B1 @ Y * (c * (1 + zi) / (zi - z1))
            Bh_c = from_context(Bh)
            neut = np.linalg.norm(Bh_c.conj().T @ signature_matrix(m) @ Bh_c)
            if not neut <= NEUTRALITY_RTOL * max(1.0, np.linalg.norm(Bh_c) ** 2):
                raise LostNeutrality(f"reduced lift lost neutrality ({neut:.3e})")
            if not np.linalg.cond(Bh_c[:m]) < cond_limit:
                raise NonInvertibleTopBlock("reduced lift has a singular top block")
            Gh = Gi - X.conj().T @ Y * (1 / abs(1 - ctx.expj(wi - w1)) ** 2)
            # any invertible rescaling is exact here; a scalar keeps lifts of unit size
            s = ctx.mpf(1 / np.linalg.norm(Bh_c, 2))
            nxt.append((wi, Bh * s, _hermitian(Gh) * s ** 2))
        pts = nxt


def _level(ds):
    # reduced responses drift off the unitary group by rounding; projecting
    # them back keeps every lifting factor exactly J-lossless
    U, _ = linalg.polar(ds.ratios[0])
    return ds.omegas[0], U, ds.canonical_gamma(0)


def _pivot_index(ds):
    # peel off the point with the smallest group delay first; leaving it for
    # last lets the Schur complements shrink towards it and loses accuracy
    score = [np.linalg.eigvalsh(ds.canonical_gamma(i))[0] for i in range(ds.n)]
    return int(np.argmin(score))


def _pivot(ds):
    k = _pivot_index(ds)
    if k == 0:
        return ds
    order = [k] + [i for i in range(ds.n) if i != k]
    return ValidatedDataSet(
        tuple(ds.omegas[i] for i in order),
        tuple(ds.lifts[i] for i in order),
        tuple(ds.gammas[i] for i in order),
    )


def _balance(N, D):
    # N inv(D) is unchanged by a common right factor; orthonormalizing the
    # stacked coefficient columns keeps them from growing level after level
    stacked = np.concatenate([N.coeffs.reshape(-1, N.m), D.coeffs.reshape(-1, D.m)])
    R = np.linalg.qr(from_context(stacked), mode="r")
    Rinv = np.linalg.inv(R)
    if N.coeffs.dtype == object:
        Rinv = Rinv.astype(object)
    return (
        MatrixPolynomial(np.einsum("kij,jl->kil", N.coeffs, Rinv)),
        MatrixPolynomial(np.einsum("kij,jl->kil", D.coeffs, Rinv)),
    )


_RETRYABLE = (DegenerateConstruction, NonInvertibleTopBlock, LostNeutrality, SingularGamma)


def design_allpass(
    ds: ValidatedDataSet, *, max_retries=MAX_RETRIES, seed=0, cond_limit=COND_LIMIT, margin=None,
    normalize=True,
) -> AllPassFilter:
    """Build a degree-``n`` matrix all-pass filter interpolating ``ds``.

    Parameters
    ----------
    ds : ValidatedDataSet
        Data set with group delays at every point.
    max_retries : int
        Number of derotated retries after a degenerate recursion level.
    seed : int
        Seed for the random derotation phases.
    margin : float, optional
        Positive-definiteness margin for the Pick test.
    normalize : bool
        Re-solve once so that the response at ``omega = pi`` follows the
        filter's own trend instead of being pinned to the identity (see
        Notes). Ignored for a single point.

    Raises
    ------
    PickNotPositiveDefinite
        No all-pass interpolant exists for this data.
    DegenerateConstruction
        Every attempt hit a singular recursion level.

    Notes
    -----
    Every lifting factor is the identity up to scale at ``z = -1``, so the
    bare recursion returns a filter with ``G(-1) = I``. When the Pick matrix
    is close to singular, as with optimized group delays, honouring that
    value costs a pole pair almost on the unit circle next to ``z = -1``,
    and the matrix fraction loses accuracy there. Any unitary ``S`` can be
    prescribed instead by solving the set derotated by ``S*``; taking ``S``
    from the first solution's response on both sides of ``pi`` removes the
    pole pair. Interpolation, unitarity and group delays are unaffected by
    the choice.
    """
    if not ds.has_gammas:
        raise MissingGamma("design needs a group-delay matrix at every point")
    for w in ds.omegas:
        _check_not_pi(w)
    pd = is_positive_definite(build_pick(ds), margin)
    if not pd:
        raise PickNotPositiveDefinite(
            f"Pick matrix is not positive definite (smallest eigenvalue {pd.witness:.6e})",
            pd.witness,
        )
    rng = np.random.default_rng(seed)
    omegas = tuple(float(w) for w in ds.omegas)
    # a double-precision pass is enough to read off the normalization
    renormalize = normalize and ds.n > 1
    last = None
    for attempt in range(max_retries + 1):
        if attempt == 0:
            C, work = None, ds
        else:
            C = np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.eye(ds.m)
            work = derotate(ds, C)
        try:
            N, D = _solve(work, cond_limit, None if renormalize else WORK_DPS)
            f = AllPassFilter(N, D, omegas, C)
            if renormalize:
                f = _renormalize(ds, f, cond_limit) or AllPassFilter(*_solve(work, cond_limit), omegas, C)
        except _RETRYABLE as exc:
            last = exc
            continue
        return f
    raise DegenerateConstruction(
        f"construction degenerate after {max_retries} derotation retries: {last}"
    )


def _renormalize(ds, f, cond_limit):
    try:
        G = eval_filter(f, [np.pi - PI_NORMALIZE_OFFSET, -np.pi + PI_NORMALIZE_OFFSET])
        S, _ = linalg.polar(G[0] + G[1])
        C = S.conj().T
        N, D = _solve(derotate(ds, C), cond_limit)
    except (SingularDenominator, np.linalg.LinAlgError, *_RETRYABLE):
        return None
    return AllPassFilter(N, D, f.interp_omegas, C)


def rotate_filter(f: AllPassFilter, alpha) -> AllPassFilter:
    """Return ``z -> f(exp(j alpha) z)``: a filter designed at ``w + alpha`` now interpolates at ``w``.

    Group delays are unchanged by this substitution.
    """
    c = np.exp(1j * alpha)
    omegas = tuple(float(V.wrap_angle(w - alpha)) for w in f.interp_omegas)
    return AllPassFilter(f.N.substitute_scale(c), f.D.substitute_scale(c), omegas, f.derotation)


def design_rotated(omegas, As, gammas, alpha, **kwargs) -> AllPassFilter:
    """Design at frequencies ``w_i + alpha`` and rotate back, e.g. when some ``w_i = pi``."""
    shifted = V.wrap_angle(np.asarray(omegas, dtype=float) + alpha)
    ds = validate_dataset(points_from_arrays(shifted, As, gammas))
    return rotate_filter(design_allpass(ds, **kwargs), alpha)
