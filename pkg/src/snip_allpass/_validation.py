"""Input validation helpers shared by the numerical modules and estimators."""

import numpy as np

from .exceptions import DimensionMismatch, NonUnitary

UNITARY_TOL = 1e-8
HERMITIAN_TOL = 1e-10
OMEGA_SEPARATION = 1e-9
PI_EXCLUSION = 1e-6


def as_square(M, name="matrix", m=None):
    """Return ``M`` as a complex 2-D square array, optionally of size ``m``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    if m is not None and M.shape[0] != m:
        raise DimensionMismatch(f"{name} must be {m}x{m}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    return M


def as_matrix_stack(As, name="matrices"):
    """Return a sequence of square matrices as a complex array of shape (n, m, m)."""
    As = np.asarray(As, dtype=complex)
    if As.ndim == 1:
        As = As.reshape(-1, 1, 1)
    if As.ndim != 3 or As.shape[1] != As.shape[2]:
        raise DimensionMismatch(f"{name} must have shape (n, m, m), got {As.shape}")
    return As


def unitarity_error(A):
    A = np.asarray(A)
    return float(np.linalg.norm(A.conj().T @ A - np.eye(A.shape[0])))


def hermitian_error(A):
    A = np.asarray(A)
    return float(np.linalg.norm(A - A.conj().T))


def check_unitary(A, tol=UNITARY_TOL, name="matrix"):
    A = as_square(A, name)
    err = unitarity_error(A)
    if not err <= tol:
        raise NonUnitary(f"{name} is not unitary: ||A*A - I||_F = {err:.3e} > {tol:.1e}")
    return A


def wrap_angle(omega):
    """Map radians onto (-pi, pi]."""
    w = np.angle(np.exp(1j * np.asarray(omega, dtype=float)))
    # np.angle returns -pi for exp(-1j*pi); the interval is closed at +pi
    return np.where(np.isclose(w, -np.pi, rtol=0.0, atol=1e-15), np.pi, w)


def circular_distance(a, b):
    return np.abs(wrap_angle(np.asarray(a) - np.asarray(b)))


def random_unitary(m, rng=None):
    """Draw a Haar-distributed ``m x m`` unitary matrix.

    QR of a complex standard Gaussian matrix with the phases of ``R``'s
    diagonal divided out.
    """
    rng = np.random.default_rng(rng)
    Z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_hermitian_pd(m, rng=None, scale=1.0):
    rng = np.random.default_rng(rng)
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return scale * (X @ X.conj().T / m + np.eye(m))
