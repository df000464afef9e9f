import numpy as np
import pytest

from snip_allpass import (
    ComparisonConfig,
    PowerDelayProfile,
    UnitarySample,
    bench_timing,
    flag_distance,
    gen_channel,
    run_comparison,
    svd_precoder_track,
    timing_ratios,
)
from snip_allpass.experiments import (
    METHODS,
    THREADS_ENV,
    ChannelRealization,
    channel_freq_response,
    comparison_grid,
)


def test_vehicular_a_profile():
    pdp = PowerDelayProfile.vehicular_a()
    assert len(pdp.delays) == 6
    assert pdp.delays == (0, 3, 7, 11, 17, 25)
    assert pdp.linear_powers.sum() == pytest.approx(1, abs=1e-12)


def test_profile_validation():
    with pytest.raises(ValueError):
        PowerDelayProfile((0, 1), (0.0,))
    with pytest.raises(ValueError):
        PowerDelayProfile((-1,), (0.0,))
    pdp = PowerDelayProfile.from_dict({"delays": [0, 2], "powers_db": [0, -3]})
    assert PowerDelayProfile.from_dict(pdp.to_dict()) == pdp


def test_single_tap_energy():
    pdp = PowerDelayProfile.flat()
    m = 2
    energy = np.mean([np.linalg.norm(gen_channel(pdp, m, s).taps[0]) ** 2 for s in range(10000)])
    assert energy == pytest.approx(m**2, rel=0.05)


def test_channel_is_seeded():
    pdp = PowerDelayProfile.vehicular_a()
    np.testing.assert_array_equal(gen_channel(pdp, 3, 9).taps, gen_channel(pdp, 3, 9).taps)
    assert not np.array_equal(gen_channel(pdp, 3, 9).taps, gen_channel(pdp, 3, 10).taps)


def test_freq_response_examples():
    rng = np.random.default_rng(0)
    h0 = rng.standard_normal((2, 2)) + 0j
    ch = ChannelRealization(h0[None], (0,))
    for w in (0.0, 1.0, -2.0):
        np.testing.assert_array_equal(channel_freq_response(ch, w), h0)
    ch = ChannelRealization(np.eye(2)[None] + 0j, (1,))
    np.testing.assert_allclose(channel_freq_response(ch, 0.7), np.exp(-0.7j) * np.eye(2))
    ch = gen_channel(PowerDelayProfile.vehicular_a(), 2, 1)
    np.testing.assert_allclose(channel_freq_response(ch, 0.0), ch.taps.sum(axis=0), atol=1e-15)
    grid = np.array([0.1, 0.2])
    assert channel_freq_response(ch, grid).shape == (2, 2, 2)


def test_track_of_identity_channel():
    ch = ChannelRealization(np.diag([2.0, 1.0])[None] + 0j, (0,))
    track = svd_precoder_track(ch, np.linspace(-3, 3, 9))
    for s in track:
        np.testing.assert_allclose(s.U, np.eye(2), atol=1e-14)


def test_track_of_diagonal_channel():
    # H(w) = diag(2 exp(j w), 1): tap diag(0, 1) at delay 0 and diag(2, 0) at delay -1
    # is not causal, so build it as diag(2, 1) diag(exp(-j w), 1) with a unit delay
    taps = np.stack([np.diag([0, 1.0]), np.diag([2.0, 0])]) + 0j
    ch = ChannelRealization(taps, (0, 1))
    grid = np.linspace(-3, 3, 31)
    track = svd_precoder_track(ch, grid)
    for a, b in zip(track, track[1:]):
        assert flag_distance(a.U, b.U) <= 1e-9


def test_alignment_never_hurts():
    ch = gen_channel(PowerDelayProfile.vehicular_a(), 3, 4)
    grid = np.linspace(-np.pi, np.pi, 200)
    aligned = svd_precoder_track(ch, grid)
    raw = svd_precoder_track(ch, grid, align=False)
    step = lambda tr: [np.linalg.norm(a.U - b.U) for a, b in zip(tr, tr[1:])]
    assert np.all(np.array(step(aligned)) <= np.array(step(raw)) + 1e-12)


def test_track_needs_sorted_grid():
    ch = gen_channel(PowerDelayProfile.flat(), 2, 0)
    with pytest.raises(ValueError):
        svd_precoder_track(ch, [0.5, 0.1])


def test_comparison_grid_contains_points():
    pts = (-0.5, 0.3)
    grid, idx = comparison_grid(16, pts)
    np.testing.assert_array_equal(grid[idx], pts)
    assert np.all(np.diff(grid) > 0)


def small_config(**kw):
    base = dict(m=2, n_seeds=3, grid_size=65)
    base.update(kw)
    return ComparisonConfig(**base)


def test_flat_channel_errors_vanish():
    rep = run_comparison(small_config(pdp=PowerDelayProfile.flat()))
    for method in ("snip_optimized", "geodesic"):
        assert rep.failures[method] == 0
        assert rep.errors[method]["flag"].max() <= 1e-6


def test_reference_configuration_small():
    rep = run_comparison(small_config(n_seeds=4))
    snip = rep.errors["snip_optimized"]["flag"]
    geo = rep.errors["geodesic"]["flag"]
    assert snip[:, rep.point_index].max() <= 1e-8
    assert geo[:, rep.point_index].max() <= 1e-8
    off = np.setdiff1d(np.arange(len(rep.grid)), rep.point_index)
    assert geo[:, off].max() > 1e-8
    s = rep.summary()
    assert set(s["methods"]) == {"snip_optimized", "geodesic"}
    assert len(rep.curves["geodesic"]["flag"]["mean"]) == len(rep.grid)


def test_feasible_variant_runs():
    # unit-scale group delays make the flat-channel interpolant bend away
    # from the constant track; only the optimized variant stays on it
    rep = run_comparison(small_config(methods=("snip_feasible",), n_seeds=2))
    assert rep.failures["snip_feasible"] == 0
    assert rep.errors["snip_feasible"]["flag"][:, rep.point_index].max() <= 1e-8


def test_single_method_report():
    rep = run_comparison(small_config(methods=("geodesic",), n_seeds=2))
    assert list(rep.errors) == ["geodesic"]
    assert set(rep.errors["geodesic"]) == {"frobenius", "flag"}


def test_comparison_is_deterministic(monkeypatch):
    a = run_comparison(small_config())
    monkeypatch.setenv(THREADS_ENV, "3")
    b = run_comparison(small_config())
    for method in a.errors:
        for metric in a.errors[method]:
            np.testing.assert_array_equal(a.errors[method][metric], b.errors[method][metric])


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        ComparisonConfig(methods=())
    with pytest.raises(ValueError):
        ComparisonConfig(methods=("givens",))
    cfg = small_config(seed=5)
    again = ComparisonConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_failures_are_counted(monkeypatch):
    from snip_allpass import experiments
    from snip_allpass.exceptions import DegenerateConstruction

    def boom(*a, **k):
        raise DegenerateConstruction("forced")

    monkeypatch.setattr(experiments, "_snip_curve", boom)
    rep = run_comparison(small_config(n_seeds=2))
    assert rep.failures["snip_optimized"] == 2
    assert rep.failure_rate("snip_optimized") == 1.0
    assert rep.errors["snip_optimized"]["flag"].shape == (0, len(rep.grid))
    assert rep.summary()["methods"]["snip_optimized"]["flag"]["overall_median"] is None


def test_bench_rows_and_ratios():
    rows = bench_timing(m_list=(2, 7), repetitions=1, grid_size=16, measure_memory=True)
    assert {(r.method, r.m) for r in rows} == {(meth, m) for meth in ("snip", "geodesic") for m in (2, 7)}
    assert all(r.mean_ms > 0 and r.peak_kb > 0 for r in rows)
    ratios = timing_ratios(rows)
    assert set(ratios) == {2, 7}


def test_bench_other_point_counts():
    rows = bench_timing(m_list=(2,), n_points=4, repetitions=1, grid_size=8)
    assert len(rows) == 2
