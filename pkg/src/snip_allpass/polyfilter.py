"""Matrix polynomials, matrix-fraction all-pass filters and their evaluation.

Polynomials are stored in ascending positive powers of ``z``. A filter is the
right matrix fraction ``G(z) = N(z) inv(D(z))``, optionally followed by a
constant unitary ``C*`` on the right (see :func:`snip_allpass.dataset.derotate`).
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import (
    DimensionMismatch,
    SingularDenominator,
    SingularLeadingCoefficient,
    UnstableWarning,
)

DENOMINATOR_COND_LIMIT = 1e12
LEADING_COEFF_COND_LIMIT = 1e10
STABILITY_SLACK = 1e-9


class MatrixPolynomial:
    """Polynomial ``sum_k C_k z**k`` with ``m x m`` complex coefficients."""

    def __init__(self, coeffs):
        coeffs = [np.atleast_2d(np.asarray(c)) for c in coeffs]
        if not coeffs:
            raise DimensionMismatch("a matrix polynomial needs at least one coefficient")
        shapes = {c.shape for c in coeffs}
        if len(shapes) != 1 or coeffs[0].shape[0] != coeffs[0].shape[1]:
            raise DimensionMismatch(f"coefficients must share one square shape, got {shapes}")
        while len(coeffs) > 1 and not np.any(coeffs[-1]):
            coeffs.pop()
        # extended precision is kept if supplied (the construction uses it)
        dtype = np.result_type(np.complex128, *coeffs)
        self.coeffs = np.stack(coeffs).astype(dtype)

    @classmethod
    def constant(cls, C):
        return cls([C])

    @classmethod
    def identity(cls, m):
        return cls([np.eye(m)])

    @property
    def m(self):
        return self.coeffs.shape[1]

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1

    def __call__(self, z):
        return eval_poly(self, z)

    def derivative(self):
        if self.degree == 0:
            return MatrixPolynomial([np.zeros((self.m, self.m), dtype=self.coeffs.dtype)])
        k = np.arange(1, self.degree + 1)[:, None, None]
        return MatrixPolynomial(self.coeffs[1:] * k)

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        out = np.zeros((max(len(a), len(b)), self.m, self.m), dtype=np.result_type(a, b))
        out[: len(a)] += a
        out[: len(b)] += b
        return MatrixPolynomial(out)

    def __neg__(self):
        return MatrixPolynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other):
        """Dense convolution of coefficient sequences (matrix product of polynomials)."""
        a, b = self.coeffs, other.coeffs
        out = np.zeros((len(a) + len(b) - 1, self.m, self.m), dtype=np.result_type(a, b))
        for i in range(len(a)):
            out[i : i + len(b)] += np.einsum("ij,kjl->kil", a[i], b)
        return MatrixPolynomial(out)

    def substitute_scale(self, c):
        """Return the polynomial ``P(c z)``."""
        k = np.arange(self.degree + 1)[:, None, None]
        return MatrixPolynomial(self.coeffs * (c**k))

    def __repr__(self):
        return f"MatrixPolynomial(m={self.m}, degree={self.degree})"


def eval_poly(P: MatrixPolynomial, z):
    """Evaluate ``P`` at ``z`` by Horner's rule.

    A scalar ``z`` gives an ``m x m`` matrix; an array of shape ``(K,)`` gives
    a stack of shape ``(K, m, m)``.
    """
    if np.ndim(z) > 0:
        z = np.asarray(z).reshape(-1, 1, 1)
        acc = np.broadcast_to(P.coeffs[-1], (len(z),) + P.coeffs.shape[1:]).copy()
    else:
        acc = P.coeffs[-1].copy()
    for C in P.coeffs[-2::-1]:
        acc = acc * z + C
    return acc


@dataclass(frozen=True, eq=False)
class AllPassFilter:
    """Right matrix fraction ``G(z) = N(z) inv(D(z)) C*``.

    Attributes
    ----------
    N, D : MatrixPolynomial
        Numerator and denominator of equal degree.
    interp_omegas : tuple of float
        Frequencies the filter was built to interpolate.
    derotation : ndarray or None
        Constant unitary ``C``; the response is right-multiplied by ``C*``.
    """

    N: MatrixPolynomial
    D: MatrixPolynomial
    interp_omegas: tuple = ()
    derotation: Optional[np.ndarray] = None

    @property
    def m(self):
        return self.N.m

    @property
    def degree(self):
        return max(self.N.degree, self.D.degree)

    def __call__(self, omega):
        return eval_filter(self, omega)

    @classmethod
    def identity(cls, m):
        I = MatrixPolynomial.identity(m)
        return cls(I, I)


def _fraction(f, z):
    Dz = eval_poly(f.D, z)
    bad = ~(np.linalg.cond(Dz) < DENOMINATOR_COND_LIMIT)
    if np.any(bad):
        zb = np.ravel(z)[np.flatnonzero(np.ravel(bad))[0]] if np.ndim(z) else z
        raise SingularDenominator(f"D(z) is singular at z = {zb:.6g}")
    Nz = eval_poly(f.N, z)
    return Nz, Dz


def _right_solve(X, Dz):
    # X @ inv(Dz), batched over leading axes
    Xt, Dt = np.swapaxes(X, -1, -2), np.swapaxes(Dz, -1, -2)
    return np.swapaxes(np.linalg.solve(Dt, Xt), -1, -2)


def eval_filter(f: AllPassFilter, omega):
    """Frequency response ``G(exp(j omega))``.

    A scalar ``omega`` gives an ``m x m`` matrix, an array a stack of shape
    ``(K, m, m)`` in flattened order.
    """
    z = np.exp(1j * np.asarray(omega, dtype=float).reshape(-1)) if np.ndim(omega) else np.exp(1j * omega)
    Nz, Dz = _fraction(f, z)
    G = _right_solve(Nz, Dz)
    if f.derotation is not None:
        G = G @ f.derotation.conj().T
    return G


@dataclass(frozen=True, eq=False)
class GroupDelayMatrix:
    """Hermitian part of ``j G* dG/domega`` and the norm of the discarded skew part."""

    F: np.ndarray
    omega: float
    skew_norm: float


def group_delay(f: AllPassFilter, omega) -> GroupDelayMatrix:
    """Group-delay matrix from the analytic derivative of the matrix fraction.

    ``dG/dz = (N' - G D') inv(D)`` and ``dG/domega = j z dG/dz``.
    """
    z = np.exp(1j * omega)
    Nz, Dz = _fraction(f, z)
    G = _right_solve(Nz, Dz)
    dN = eval_poly(f.N.derivative(), z)
    dD = eval_poly(f.D.derivative(), z)
    dG = 1j * z * _right_solve(dN - G @ dD, Dz)
    F = 1j * G.conj().T @ dG
    if f.derotation is not None:
        C = f.derotation
        F = C @ F @ C.conj().T
    herm = (F + F.conj().T) / 2
    skew = float(np.linalg.norm(F - herm))
    return GroupDelayMatrix(herm, float(omega), skew)


def unit_circle_grid(grid_size):
    """``grid_size`` uniformly spaced frequencies covering (-pi, pi]."""
    return -np.pi + 2 * np.pi * np.arange(1, grid_size + 1) / grid_size


def unitarity_deviation(f: AllPassFilter, grid_size=1024) -> float:
    """Max of ``||G* G - I||_F`` over a uniform frequency grid."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    I = np.eye(f.m)
    G = eval_filter(f, unit_circle_grid(grid_size))
    dev = np.linalg.norm(np.conj(np.swapaxes(G, 1, 2)) @ G - I, axis=(1, 2))
    return float(dev.max())


def companion_spectral_radius(D: MatrixPolynomial):
    """Spectral radius of the block companion matrix of ``D`` (largest pole modulus)."""
    d, m = D.degree, D.m
    if d == 0:
        return 0.0
    lead_inv = np.linalg.inv(D.coeffs[-1])
    comp = np.zeros((d * m, d * m), dtype=complex)
    comp[: (d - 1) * m, m:] = np.eye((d - 1) * m)
    for k in range(d):
        comp[(d - 1) * m :, k * m : (k + 1) * m] = -lead_inv @ D.coeffs[k]
    return float(np.abs(np.linalg.eigvals(comp)).max())


def lccde_filter(f: AllPassFilter, x) -> np.ndarray:
    """Run the filter's difference equation on a vector signal, zero initial state.

    With ``z`` as the advance operator, the internal signal ``w`` obeys
    ``sum_k D_k w[t+k] = x[t]`` and the output is ``y[t] = sum_k N_k w[t+k]``.

    Parameters
    ----------
    f : AllPassFilter
    x : array_like, shape (T, m)

    Returns
    -------
    y : ndarray, shape (T, m)
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1 and f.m == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != f.m:
        raise DimensionMismatch(f"signal must have shape (T, {f.m}), got {x.shape}")
    if f.derotation is not None:
        x = x @ f.derotation.conj()
    d = f.D.degree
    Dc = f.D.coeffs
    Nc = np.zeros((d + 1, f.m, f.m), dtype=complex)
    Nc[: f.N.degree + 1] = f.N.coeffs
    lead = Dc[-1]
    if not np.linalg.cond(lead) < LEADING_COEFF_COND_LIMIT:
        raise SingularLeadingCoefficient(
            "leading denominator coefficient is singular; use frequency_domain_filter instead"
        )
    if f.N.degree > d:
        raise SingularLeadingCoefficient("numerator degree exceeds denominator degree")
    rho = companion_spectral_radius(f.D)
    if rho > 1 + STABILITY_SLACK:
        warnings.warn(
            f"filter is unstable (pole modulus {rho:.6g}); output will grow", UnstableWarning
        )
    lead_inv = np.linalg.inv(lead)
    T = len(x)
    w = np.zeros((T + d, f.m), dtype=complex)
    y = np.empty((T, f.m), dtype=complex)
    for t in range(T):
        acc = x[t].copy()
        for k in range(d):
            acc -= Dc[k] @ w[t + k]
        w[t + d] = lead_inv @ acc
        y[t] = np.einsum("kij,kj->i", Nc, w[t : t + d + 1])
    return y


def frequency_domain_filter(f: AllPassFilter, x, nfft=4096) -> np.ndarray:
    """Filter by multiplying DFT bins with ``G(exp(j 2 pi k / nfft))`` (circular).

    Equivalent to the causal time-domain filter when the impulse response of
    a stable filter has decayed within ``nfft - len(x)`` samples.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        x = x[:, None]
    T = len(x)
    if nfft < T:
        raise ValueError("nfft must be at least the signal length")
    X = np.fft.fft(x, n=nfft, axis=0)
    omegas = 2 * np.pi * np.arange(nfft) / nfft
    G = eval_filter(f, omegas)
    Y = np.einsum("kij,kj->ki", G, X)
    return np.fft.ifft(Y, axis=0)[:T]


def impulse_response(f: AllPassFilter, length) -> np.ndarray:
    """Matrix impulse response ``h[t]`` of shape (length, m, m) via the LCCDE."""
    m = f.m
    h = np.empty((length, m, m), dtype=complex)
    for j in range(m):
        x = np.zeros((length, m), dtype=complex)
        x[0, j] = 1.0
        h[:, :, j] = lccde_filter(f, x)
    return h

