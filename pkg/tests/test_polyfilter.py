import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from snip_allpass import (
    AllPassFilter,
    MatrixPolynomial,
    base_filter,
    design_allpass,
    eval_filter,
    eval_poly,
    frequency_domain_filter,
    group_delay,
    impulse_response,
    lccde_filter,
    unitarity_deviation,
)
from snip_allpass.exceptions import (
    DimensionMismatch,
    SingularDenominator,
    SingularLeadingCoefficient,
    UnstableWarning,
)
from snip_allpass.polyfilter import companion_spectral_radius, unit_circle_grid

from _util import fd_group_delay, six_point_set, random_set

BASE = base_filter(0.0, [[-1]], [[2]])


def stable_design(m, n, start=0):
    """First designed filter (over seeds) whose poles lie inside the unit circle."""
    for seed in range(start, start + 200):
        f = design_allpass(random_set(m, n, np.random.default_rng(seed)))
        if companion_spectral_radius(f.D) < 0.98:
            return f
    raise AssertionError("no stable design found")


# polynomials


def test_eval_poly_examples():
    I = MatrixPolynomial.identity(2)
    np.testing.assert_array_equal(eval_poly(I, 0.3 + 2j), np.eye(2))
    P = MatrixPolynomial([-np.eye(2), np.eye(2)])
    np.testing.assert_array_equal(eval_poly(P, 1.0), np.zeros((2, 2)))
    assert eval_poly(BASE.N, 1.0)[0, 0] == pytest.approx(-1)


def test_eval_poly_vectorized():
    rng = np.random.default_rng(0)
    P = MatrixPolynomial(rng.standard_normal((4, 2, 2)) + 1j * rng.standard_normal((4, 2, 2)))
    zs = np.exp(1j * np.linspace(0, 2, 5))
    stack = eval_poly(P, zs)
    for z, M in zip(zs, stack):
        direct = sum(C * z**k for k, C in enumerate(P.coeffs))
        np.testing.assert_allclose(M, direct, atol=1e-13)


def test_polynomial_algebra():
    rng = np.random.default_rng(1)
    A = MatrixPolynomial(rng.standard_normal((3, 2, 2)))
    B = MatrixPolynomial(rng.standard_normal((2, 2, 2)))
    z = 0.4 - 0.7j
    np.testing.assert_allclose(eval_poly(A @ B, z), eval_poly(A, z) @ eval_poly(B, z), atol=1e-12)
    np.testing.assert_allclose(eval_poly(A + B, z), eval_poly(A, z) + eval_poly(B, z), atol=1e-12)
    np.testing.assert_allclose(eval_poly(A - B, z), eval_poly(A, z) - eval_poly(B, z), atol=1e-12)
    assert (A @ B).degree == 3
    dA = A.derivative()
    np.testing.assert_allclose(dA.coeffs, [A.coeffs[1], 2 * A.coeffs[2]])
    np.testing.assert_allclose(eval_poly(A.substitute_scale(2.0), z), eval_poly(A, 2 * z), atol=1e-12)


def test_polynomial_trailing_zeros_trimmed():
    P = MatrixPolynomial([np.eye(2), np.zeros((2, 2))])
    assert P.degree == 0


def test_polynomial_shape_errors():
    with pytest.raises(DimensionMismatch):
        MatrixPolynomial([])
    with pytest.raises(DimensionMismatch):
        MatrixPolynomial([np.eye(2), np.eye(3)])


# frequency response


def test_eval_filter_examples():
    assert eval_filter(BASE, 0.0)[0, 0] == pytest.approx(-1)
    I = AllPassFilter.identity(3)
    np.testing.assert_array_equal(eval_filter(I, 1.234), np.eye(3))
    assert eval_filter(I, np.array([0.1, 0.2])).shape == (2, 3, 3)


def test_eval_filter_singular_denominator():
    P = MatrixPolynomial([-np.eye(1), np.eye(1)])
    with pytest.raises(SingularDenominator):
        eval_filter(AllPassFilter(P, P), 0.0)


def test_designed_filter_hits_points():
    ds = six_point_set(1)
    f = design_allpass(ds)
    G = eval_filter(f, ds.omegas)
    for Gi, A in zip(G, ds.ratios):
        assert np.linalg.norm(Gi - A) <= 1e-8


def test_group_delay_examples():
    gd = group_delay(BASE, 0.0)
    assert gd.F[0, 0] == pytest.approx(2)
    np.testing.assert_array_equal(group_delay(AllPassFilter.identity(2), 0.3).F, np.zeros((2, 2)))


def test_group_delay_matches_finite_difference():
    f = design_allpass(six_point_set(2))
    for w in np.linspace(-2.9, 2.9, 13):
        gd = group_delay(f, w)
        assert np.abs(gd.F - fd_group_delay(f, w)).max() <= 1e-5
        assert gd.skew_norm <= 1e-8


def test_group_delay_with_derotation():
    f = design_allpass(random_set(2, 2, np.random.default_rng(3)))
    C = np.array([[0, 1], [1j, 0]])
    g = AllPassFilter(f.N, f.D, f.interp_omegas, C if f.derotation is None else C @ f.derotation)
    np.testing.assert_allclose(group_delay(g, 0.3).F, fd_group_delay(g, 0.3), atol=1e-5)


def test_unitarity_deviation_examples():
    assert unitarity_deviation(AllPassFilter.identity(2), 64) == 0
    assert unitarity_deviation(BASE, 1024) <= 1e-12
    N = BASE.N.coeffs.copy()
    N[0] += 0.1
    bad = AllPassFilter(MatrixPolynomial(N), BASE.D)
    assert unitarity_deviation(bad, 1024) > 1e-3
    with pytest.raises(ValueError):
        unitarity_deviation(BASE, 1)


def test_unit_circle_grid():
    g = unit_circle_grid(4)
    np.testing.assert_allclose(g, [-np.pi / 2, 0, np.pi / 2, np.pi])


# time domain


def test_lccde_scalar_impulse():
    x = np.zeros(5)
    x[0] = 1
    y = lccde_filter(BASE, x)[:, 0]
    np.testing.assert_allclose(y[:3], [1 / 3, -8 / 9, -8 / 27], atol=1e-15)
    # power series of (z - 3) / (3z - 1) in 1/z
    np.testing.assert_allclose(y[1:], -8 / 9 * (1 / 3) ** np.arange(4), atol=1e-15)


def test_lccde_identity_echoes():
    x = np.random.default_rng(0).standard_normal((20, 2)) + 0j
    np.testing.assert_array_equal(lccde_filter(AllPassFilter.identity(2), x), x)


def test_lccde_matches_frequency_domain():
    f = stable_design(2, 4)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((512, 2)) + 1j * rng.standard_normal((512, 2))
    y = lccde_filter(f, x)
    yf = frequency_domain_filter(f, x, 4096)
    skip = 4 * f.degree
    assert np.abs(y[skip:] - yf[skip:]).max() <= 1e-6


def test_lccde_is_linear():
    f = stable_design(2, 3)
    rng = np.random.default_rng(2)
    x1, x2 = rng.standard_normal((2, 200, 2)) + 0j
    a, b = 0.7 - 0.2j, -1.3
    lhs = lccde_filter(f, a * x1 + b * x2)
    rhs = a * lccde_filter(f, x1) + b * lccde_filter(f, x2)
    assert np.abs(lhs - rhs).max() <= 1e-10


def test_lccde_preserves_energy():
    f = stable_design(2, 3)
    rng = np.random.default_rng(3)
    x = rng.standard_normal((20000, 2)) + 1j * rng.standard_normal((20000, 2))
    x[-2000:] = 0  # let the state drain
    y = lccde_filter(f, x)
    ratio = np.linalg.norm(y) / np.linalg.norm(x)
    assert 1 - 1e-3 <= ratio <= 1 + 1e-3


def test_impulse_response_matches_lccde():
    f = stable_design(2, 2)
    h = impulse_response(f, 50)
    x = np.zeros((50, 2), dtype=complex)
    x[0, 1] = 1
    np.testing.assert_allclose(h[:, :, 1], lccde_filter(f, x), atol=1e-14)
    # DTFT of the (decayed) impulse response is the frequency response
    h = impulse_response(f, 2000)
    w = 0.37
    H = np.einsum("t,tij->ij", np.exp(-1j * w * np.arange(2000)), h)
    np.testing.assert_allclose(H, eval_filter(f, w), atol=1e-8)


def test_lccde_singular_leading_coefficient():
    N = MatrixPolynomial([np.eye(2), np.diag([1.0, 0.0])])
    D = MatrixPolynomial([np.eye(2), np.diag([1.0, 0.0])])
    with pytest.raises(SingularLeadingCoefficient):
        lccde_filter(AllPassFilter(N, D), np.zeros((4, 2)))


def test_lccde_warns_when_unstable():
    # (1 - 2z) / (z - 2): pole at 2
    f = AllPassFilter(MatrixPolynomial([[[1.0]], [[-2.0]]]), MatrixPolynomial([[[-2.0]], [[1.0]]]))
    assert unitarity_deviation(f, 64) <= 1e-14
    with pytest.warns(UnstableWarning):
        y = lccde_filter(f, np.r_[1.0, np.zeros(9)])
    assert np.isfinite(y).all()


def test_lccde_shape_checks():
    with pytest.raises(DimensionMismatch):
        lccde_filter(AllPassFilter.identity(2), np.zeros((5, 3)))


def test_frequency_domain_requires_room():
    with pytest.raises(ValueError):
        frequency_domain_filter(BASE, np.zeros(10), nfft=8)


@given(st.integers(0, 2**32 - 1))
def test_group_delay_hermitian_on_designs(seed):
    f = design_allpass(random_set(2, 3, np.random.default_rng(seed)))
    for w in np.random.default_rng(seed).uniform(-3, 3, 4):
        assert group_delay(f, w).skew_norm <= 1e-8
