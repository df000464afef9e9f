import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from snip_allpass import (
    InterpolationPoint,
    design_allpass,
    derotate,
    eval_filter,
    lift_neutral,
    validate_dataset,
)
from snip_allpass.dataset import signature_matrix
from snip_allpass.exceptions import (
    DimensionMismatch,
    DuplicateFrequency,
    FrequencyAtPi,
    NonHermitianGamma,
    NonPositiveGamma,
    NonUnitary,
)
from snip_allpass.polyfilter import AllPassFilter
from snip_allpass._validation import random_unitary

from _util import max_interp_error, max_spectrum_error, random_set


def test_identity_point_lifts_to_stacked_identity():
    ds = validate_dataset([InterpolationPoint(0.0, np.eye(2), np.eye(2))])
    assert ds.n == 1 and ds.m == 2
    np.testing.assert_array_equal(ds.lifts[0].B, np.vstack([np.eye(2), np.eye(2)]))
    np.testing.assert_array_equal(ds.gammas[0], np.eye(2))


def test_duplicate_frequency_rejected():
    with pytest.raises(DuplicateFrequency):
        validate_dataset([InterpolationPoint(0.0, np.eye(1)), InterpolationPoint(0.0, -np.eye(1))])


def test_duplicate_detected_across_wraparound():
    with pytest.raises(DuplicateFrequency):
        validate_dataset([InterpolationPoint(0.5, np.eye(1)), InterpolationPoint(0.5 + 2 * np.pi, -np.eye(1))])


def test_perturbed_unitary_rejected():
    rng = np.random.default_rng(3)
    A = random_unitary(2, rng) + 0.05 * rng.standard_normal((2, 2))
    with pytest.raises(NonUnitary):
        validate_dataset([InterpolationPoint(np.pi / 5, A)])


def test_frequency_at_pi_rejected():
    with pytest.raises(FrequencyAtPi):
        validate_dataset([InterpolationPoint(np.pi, np.eye(1))])
    with pytest.raises(FrequencyAtPi):
        validate_dataset([InterpolationPoint(-np.pi, np.eye(1))])


def test_gamma_checks():
    with pytest.raises(NonHermitianGamma):
        validate_dataset([InterpolationPoint(0.0, np.eye(2), np.array([[1, 1], [0, 1]]))])
    with pytest.raises(NonPositiveGamma):
        validate_dataset([InterpolationPoint(0.0, np.eye(2), np.diag([1.0, -1.0]))])


def test_mixed_dimensions_rejected():
    with pytest.raises(DimensionMismatch):
        validate_dataset([InterpolationPoint(0.0, np.eye(1)), InterpolationPoint(1.0, np.eye(2))])


def test_lift_examples():
    B = lift_neutral(np.eye(2))
    assert B.neutrality_error() == 0
    B = lift_neutral(np.array([[-1.0]]))
    np.testing.assert_array_equal(B.B, [[1], [-1]])
    assert B.neutrality_error() == 0
    B = lift_neutral(random_unitary(3, np.random.default_rng(0)))
    assert B.neutrality_error() < 1e-12


def test_signature_matrix():
    J = signature_matrix(3)
    np.testing.assert_array_equal(J @ J, np.eye(6))
    np.testing.assert_array_equal(J, J.conj().T)


def test_derotate_identity_is_noop():
    ds = random_set(2, 3, np.random.default_rng(1))
    out = derotate(ds, np.eye(2))
    for a, b in zip(ds.ratios, out.ratios):
        np.testing.assert_allclose(a, b, atol=1e-15)
    for a, b in zip(ds.gammas, out.gammas):
        np.testing.assert_allclose(a, b, atol=1e-15)


def test_derotate_scalar_phase():
    ds = validate_dataset([InterpolationPoint(0.3, np.eye(1))])
    out = derotate(ds, np.array([[1j]]))
    np.testing.assert_allclose(out.ratios[0], [[1j]], atol=1e-15)


def test_derotate_rejects_nonunitary():
    ds = validate_dataset([InterpolationPoint(0.3, np.eye(2))])
    with pytest.raises(NonUnitary):
        derotate(ds, 2 * np.eye(2))


@pytest.mark.parametrize("scalar", [True, False])
def test_derotate_solve_rotate_back(scalar):
    rng = np.random.default_rng(7)
    ds = random_set(2, 3, rng)
    C = np.exp(0.7j) * np.eye(2) if scalar else random_unitary(2, rng)
    f = design_allpass(derotate(ds, C))
    total = C if f.derotation is None else C @ f.derotation
    g = AllPassFilter(f.N, f.D, f.interp_omegas, total)
    assert max_interp_error(g, ds) <= 1e-9
    assert max_spectrum_error(g, ds) <= 1e-4


def test_derotate_preserves_pick_spectrum_for_scalar_phase():
    from snip_allpass import build_pick

    ds = random_set(2, 3, np.random.default_rng(2))
    out = derotate(ds, np.exp(1.1j) * np.eye(2))
    np.testing.assert_allclose(
        np.linalg.eigvalsh(build_pick(ds).P), np.linalg.eigvalsh(build_pick(out).P), atol=1e-10
    )


unitaries = st.builds(
    lambda m, s: random_unitary(m, np.random.default_rng(s)),
    st.integers(1, 4),
    st.integers(0, 2**32 - 1),
)


@given(unitaries)
def test_ratio_recovers_response(A):
    lift = lift_neutral(A)
    assert np.linalg.norm(lift.ratio() - A) <= 1e-12


@given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_validation_is_idempotent(m, n, seed):
    ds = random_set(m, n, np.random.default_rng(seed))
    again = validate_dataset(ds.raw_points())
    np.testing.assert_allclose(ds.omegas, again.omegas, rtol=0, atol=1e-15)
    for a, b in zip(ds.lifts, again.lifts):
        np.testing.assert_allclose(a.B, b.B, atol=1e-15)
    for a, b in zip(ds.gammas, again.gammas):
        np.testing.assert_allclose(a, b, atol=1e-15)


@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_derotate_keeps_neutrality(m, seed):
    rng = np.random.default_rng(seed)
    ds = random_set(m, 3, rng)
    out = derotate(ds, random_unitary(m, rng))
    for lift in out.lifts:
        assert lift.neutrality_error() <= 1e-12
