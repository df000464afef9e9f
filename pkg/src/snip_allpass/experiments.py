"""MIMO-OFDM precoder interpolation experiments.

Random frequency-selective Rayleigh channels are drawn from a power delay
profile, right singular vectors are extracted per frequency and phase-tracked,
and the precoder track is reconstructed from a handful of samples by the
all-pass construction and by piecewise geodesic interpolation.
"""

import logging
import os
import time
import tracemalloc
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .baselines import UnitarySample, flag_distance, frobenius_errors, geodesic_track
from .construct import design_allpass
from .dataset import points_from_arrays, validate_dataset
from .exceptions import DegenerateSingularValues, SnipError
from .gdopt import BarrierConfig, feasible_initialization, optimize_group_delays
from .polyfilter import eval_filter, unit_circle_grid

log = logging.getLogger(__name__)

REFERENCE_OMEGAS = tuple(np.pi * np.array([-0.99, -0.6, -0.2, 0.2, 0.6, 0.99]))
METHODS = ("snip_optimized", "snip_feasible", "geodesic")
METRICS = ("frobenius", "flag")
SV_GAP_TOL = 1e-9
THREADS_ENV = "SNIP_ALLPASS_THREADS"


@dataclass(frozen=True)
class PowerDelayProfile:
    """Tap delays in samples and average tap powers in dB."""

    delays: tuple
    powers_db: tuple

    def __post_init__(self):
        if len(self.delays) != len(self.powers_db) or not self.delays:
            raise ValueError("delays and powers_db must be non-empty and of equal length")
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))
        object.__setattr__(self, "powers_db", tuple(float(p) for p in self.powers_db))
        if min(self.delays) < 0:
            raise ValueError("tap delays must be non-negative")

    @property
    def linear_powers(self):
        p = 10 ** (np.asarray(self.powers_db) / 10)
        return p / p.sum()

    @classmethod
    def vehicular_a(cls, sample_rate=10e6):
        """ITU Vehicular A profile rounded to the sample grid."""
        delays_ns = [0, 310, 710, 1090, 1730, 2510]
        powers_db = [0, -1, -9, -10, -15, -20]
        return cls(tuple(int(round(d * 1e-9 * sample_rate)) for d in delays_ns), tuple(powers_db))

    @classmethod
    def flat(cls):
        return cls((0,), (0.0,))

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["delays"]), tuple(d["powers_db"]))

    def to_dict(self):
        return {"delays": list(self.delays), "powers_db": list(self.powers_db)}


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    taps: np.ndarray
    delays: tuple
    seed: Optional[int] = None

    @property
    def m(self):
        return self.taps.shape[1]


def gen_channel(pdp: PowerDelayProfile, m, seed=None) -> ChannelRealization:
    """Draw independent Rayleigh taps ``h_l = sqrt(p_l) * CN(0, 1)`` entries."""
    if m < 1:
        raise ValueError("m must be positive")
    rng = np.random.default_rng(seed)
    L = len(pdp.delays)
    g = (rng.standard_normal((L, m, m)) + 1j * rng.standard_normal((L, m, m))) / np.sqrt(2)
    taps = np.sqrt(pdp.linear_powers)[:, None, None] * g
    return ChannelRealization(taps, pdp.delays, seed)


def channel_freq_response(ch: ChannelRealization, omega):
    """``H(exp(j w)) = sum_l h_l exp(-j w delay_l)``; vectorized over omegas."""
    w = np.asarray(omega, dtype=float)
    phase = np.exp(-1j * np.multiply.outer(w, np.asarray(ch.delays)))
    return np.tensordot(phase, ch.taps, axes=([-1], [0]))


def svd_precoder_track(ch: ChannelRealization, grid, align=True) -> List[UnitarySample]:
    """Right singular vectors per frequency, column phases tracked along the grid.

    Singular values are sorted in descending order. With ``align`` each column
    is rotated by the unit phase that makes its inner product with the
    previous grid point's column real and positive.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    Hs = channel_freq_response(ch, grid)
    _, s, Vh = np.linalg.svd(Hs)
    Vs = np.conj(np.swapaxes(Vh, 1, 2))
    if ch.m > 1:
        gaps = np.abs(np.diff(s, axis=1)).min(axis=1)
        if np.any(gaps < SV_GAP_TOL):
            warnings.warn(
                "near-equal singular values: column pairing is ambiguous", DegenerateSingularValues
            )
    if align:
        for k in range(1, len(grid)):
            inner = np.einsum("ij,ij->j", Vs[k - 1].conj(), Vs[k])
            Vs[k] = Vs[k] * np.exp(-1j * np.angle(inner))
    return [UnitarySample(float(w), V) for w, V in zip(grid, Vs)]


@dataclass
class ComparisonConfig:
    m: int = 2
    point_omegas: tuple = REFERENCE_OMEGAS
    grid_size: int = 257
    n_seeds: int = 100
    seed: int = 0
    methods: tuple = ("snip_optimized", "geodesic")
    pdp: PowerDelayProfile = field(default_factory=PowerDelayProfile.vehicular_a)
    barrier: BarrierConfig = field(default_factory=BarrierConfig)
    n_jobs: Optional[int] = None

    def __post_init__(self):
        self.point_omegas = tuple(float(w) for w in self.point_omegas)
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if self.m < 1 or self.n_seeds < 1 or self.grid_size < 2 or not self.point_omegas:
            raise ValueError("m, n_seeds, grid_size and point_omegas must be positive/non-empty")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "pdp" in d and not isinstance(d["pdp"], PowerDelayProfile):
            d["pdp"] = PowerDelayProfile.from_dict(d["pdp"])
        if "barrier" in d and not isinstance(d["barrier"], BarrierConfig):
            d["barrier"] = BarrierConfig(**d["barrier"])
        d.pop("n_points", None)
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["pdp"] = self.pdp.to_dict()
        d["point_omegas"] = list(self.point_omegas)
        d["methods"] = list(self.methods)
        return d


@dataclass
class ComparisonReport:
    """Per-frequency error curves for each method and metric.

    ``errors[method][metric]`` has shape (successful seeds, grid points);
    ``curves`` holds the mean and median over seeds.
    """

    grid: np.ndarray
    point_index: np.ndarray
    errors: Dict[str, Dict[str, np.ndarray]]
    failures: Dict[str, int]
    n_seeds: int
    config: dict

    @property
    def curves(self):
        return {
            method: {
                metric: {"mean": e.mean(axis=0), "median": np.median(e, axis=0)}
                for metric, e in per.items()
            }
            for method, per in self.errors.items()
        }

    def failure_rate(self, method):
        return self.failures.get(method, 0) / self.n_seeds

    def summary(self):
        out = {"n_seeds": self.n_seeds, "grid_size": len(self.grid), "methods": {}}
        for method, per in self.errors.items():
            entry = {"failure_rate": self.failure_rate(method)}
            for metric, e in per.items():
                entry[metric] = {
                    "overall_mean": float(e.mean()) if e.size else None,
                    "overall_median": float(np.median(e)) if e.size else None,
                    "max_at_points": float(e[:, self.point_index].max()) if e.size else None,
                }
            out["methods"][method] = entry
        out["config"] = self.config
        return out


def comparison_grid(grid_size, point_omegas):
    """Uniform grid over (-pi, pi] merged with the interpolation frequencies."""
    grid = np.union1d(unit_circle_grid(grid_size), np.asarray(point_omegas, dtype=float))
    index = np.searchsorted(grid, point_omegas)
    return grid, index


def _snip_curve(omegas, anchors, gammas, seed, grid):
    ds = validate_dataset(points_from_arrays(omegas, anchors, gammas))
    f = design_allpass(ds, seed=seed)
    return eval_filter(f, grid)


def _run_seed(cfg: ComparisonConfig, seed, grid, index):
    ch = gen_channel(cfg.pdp, cfg.m, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSingularValues)
        track = svd_precoder_track(ch, grid)
    Vs = np.stack([s.U for s in track])
    omegas = grid[index]
    anchors = Vs[index]
    out = {}
    for method in cfg.methods:
        try:
            if method == "geodesic":
                est = geodesic_track([track[i] for i in index], grid)
            elif method == "snip_optimized":
                gammas = optimize_group_delays(omegas, anchors, cfg.barrier).gammas
                est = _snip_curve(omegas, anchors, gammas, seed, grid)
            else:
                gammas = feasible_initialization(omegas, anchors, cfg.barrier.pd_margin)
                est = _snip_curve(omegas, anchors, gammas, seed, grid)
        except SnipError as exc:
            log.info("seed %s: %s failed: %s", seed, method, exc)
            out[method] = None
            continue
        out[method] = {"frobenius": frobenius_errors(est, Vs), "flag": flag_distance(est, Vs)}
    return out


def run_comparison(config: ComparisonConfig) -> ComparisonReport:
    """Compare interpolation methods against the true precoder track over many channels."""
    cfg = config
    grid, index = comparison_grid(cfg.grid_size, cfg.point_omegas)
    seeds = range(cfg.seed, cfg.seed + cfg.n_seeds)
    n_jobs = cfg.n_jobs or int(os.environ.get(THREADS_ENV, "1"))
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            results = list(pool.map(lambda s: _run_seed(cfg, s, grid, index), seeds))
    else:
        results = [_run_seed(cfg, s, grid, index) for s in seeds]
    errors, failures = {}, {}
    for method in cfg.methods:
        ok = [r[method] for r in results if r[method] is not None]
        failures[method] = len(results) - len(ok)
        errors[method] = {
            metric: (np.stack([r[metric] for r in ok]) if ok else np.empty((0, len(grid))))
            for metric in METRICS
        }
    return ComparisonReport(grid, index, errors, failures, cfg.n_seeds, cfg.to_dict())


@dataclass
class TimingRow:
    method: str
    m: int
    mean_ms: float
    peak_kb: Optional[float] = None


def _time_per_eval(fn, grid, repetitions):
    t0 = time.perf_counter()
    for _ in range(repetitions):
        for w in grid:
            fn(w)
    return 1e3 * (time.perf_counter() - t0) / (repetitions * len(grid))


def _peak_kb(fn, w):
    tracemalloc.start()
    try:
        fn(w)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return peak / 1024


def bench_timing(
    m_list: Sequence[int] = (2, 3, 4, 5, 6, 7),
    n_points=6,
    repetitions=5,
    grid_size=64,
    seed=0,
    measure_memory=False,
) -> List[TimingRow]:
    """Mean time to produce one precoder at an off-sample frequency.

    The all-pass path evaluates a filter built beforehand; the geodesic path
    runs one unitary log and exp per frequency. Construction time is excluded
    for both, matching per-subcarrier reconstruction at the transmitter.
    """
    if n_points == 6:
        omegas = np.asarray(REFERENCE_OMEGAS)
    else:
        omegas = np.linspace(-np.pi, np.pi, n_points, endpoint=False) + np.pi / n_points
    pdp = PowerDelayProfile.vehicular_a()
    grid = unit_circle_grid(grid_size)
    grid = grid[~np.isin(grid, omegas)]
    rows = []
    for m in m_list:
        ch = gen_channel(pdp, m, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateSingularValues)
            track = svd_precoder_track(ch, np.sort(omegas))
        ws = np.array([s.omega for s in track])
        anchors = np.stack([s.U for s in track])
        gammas = optimize_group_delays(ws, anchors).gammas
        f = design_allpass(validate_dataset(points_from_arrays(ws, anchors, gammas)), seed=seed)

        def snip(w, f=f):
            return eval_filter(f, w)

        def geo(w, track=track):
            return geodesic_track(track, [w])[0]

        for name, fn in (("snip", snip), ("geodesic", geo)):
            fn(grid[0])  # warm-up
            ms = _time_per_eval(fn, grid, repetitions)
            peak = _peak_kb(fn, grid[len(grid) // 2]) if measure_memory else None
            rows.append(TimingRow(name, m, ms, peak))
    return rows


def timing_ratios(rows: Sequence[TimingRow]):
    """Geodesic-over-SNIP time ratio per ``m``."""
    by = {(r.method, r.m): r.mean_ms for r in rows}
    return {m: by[("geodesic", m)] / by[("snip", m)] for (meth, m) in by if meth == "snip"}
