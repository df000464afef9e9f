"""Matrix all-pass filters that interpolate unitary responses and group delays on the unit circle."""

from .baselines import (
    UnitarySample,
    flag_distance,
    frobenius_error,
    geodesic_interpolate,
    geodesic_track,
    unitary_log,
)
from .construct import (
    ReductionOperator,
    base_filter,
    design_allpass,
    design_rotated,
    lift_solution,
    reduce_dataset,
    rotate_filter,
)
from .dataset import (
    InterpolationPoint,
    NeutralLift,
    ValidatedDataSet,
    derotate,
    lift_neutral,
    points_from_arrays,
    validate_dataset,
)
from .estimators import AllPassInterpolator, GeodesicInterpolator, GroupDelayOptimizer
from .exceptions import *  # noqa: F401,F403
from .experiments import (
    ChannelRealization,
    ComparisonConfig,
    ComparisonReport,
    PowerDelayProfile,
    bench_timing,
    gen_channel,
    run_comparison,
    svd_precoder_track,
    timing_ratios,
)
from .gdopt import BarrierConfig, GammaAssignment, feasible_initialization, optimize_group_delays
from .pickmat import PDResult, PickMatrix, build_pick, is_positive_definite, schur_reduce
from .polyfilter import (
    AllPassFilter,
    GroupDelayMatrix,
    MatrixPolynomial,
    eval_filter,
    eval_poly,
    frequency_domain_filter,
    group_delay,
    impulse_response,
    lccde_filter,
    unitarity_deviation,
)

__version__ = "0.1.0"
