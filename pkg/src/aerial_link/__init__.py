"""Downlink performance of UAV and ground users in Poisson cellular networks.

The package pairs an analytical engine (exact coverage, two approximations,
throughput and area spectral efficiency) with an independent Monte Carlo
simulator, plus sweep/CSV/SVG tooling and the ``aerial-link`` CLI.
"""

from .analysis import (
    CoverageEngine,
    CoverageResult,
    InterferenceMoments,
    Method,
    approx_coverage_gamma,
    approx_coverage_los_only,
    area_spectral_efficiency,
    conditional_coverage,
    coverage,
    exact_coverage,
    engine_for,
    interference_moments,
    interference_moments_closed_form,
    laplace_transform,
    optimize_parameter,
    serving_distance_pdf,
    throughput,
    tier_select,
    truncation_radius,
    upsilon,
    void_integral_I1,
)
from .channel import (
    ChannelParams,
    Environment,
    LosStepFunction,
    fading_cdf,
    los_probability,
    los_step_function,
    path_loss,
    received_power,
    sample_fading,
)
from .errors import (
    AerialLinkError,
    InvalidGeometry,
    OutOfFootprint,
    ParseError,
    QuadratureFailure,
    ValidationError,
)
from .geometry import (
    AngularExtent,
    AntennaConfig,
    AntennaFootprint,
    AntennaMode,
    angular_extent,
    boundary_radii,
    compute_footprint,
)
from .scenario import ENVIRONMENT_PRESETS, ScenarioConfig, directional, urban_default
from .sweeps import (
    SweepSpec,
    SweepTable,
    ValidationReport,
    config_to_dict,
    emit_csv,
    emit_svg,
    parse_csv,
    run_sweep,
    validate,
)
from .simulator import (
    CcdfCurve,
    McEstimate,
    NetworkRealization,
    conditional_coverage_mc,
    conditional_interference_mc,
    estimate_ccdf,
    estimate_coverage,
    estimate_throughput,
    realize_and_measure,
    sample_bs_positions,
    substream,
)

from ._version import __version__  # noqa: E402,F401
