"""Microring squeezed-light simulator and measurement-analysis chain.

Closed-form quadrature spectra of a below-threshold microring squeezer,
exact Monte Carlo photon-number statistics of the lossy multimode pair
state, the principal-component trace-classification pipeline of
number-resolving detectors, and least-squares fitters tying model
parameters to data.
"""

from .errors import (
    ConditioningError,
    ConfigError,
    DegenerateDataError,
    FitConvergenceError,
    FitError,
    RingSqueezeError,
    ThresholdSingularityError,
    TraceFormatError,
)
from .fitting import (
    FitResult,
    Parameter,
    SubsetStats,
    fit_nrf_slope,
    fit_power_scaling,
    fit_spectrum,
    fit_variance_vs_power,
    levenberg_marquardt,
    subset_stats,
)
from .photon_stats import (
    SATURATION_THRESHOLD,
    CountSet,
    CountStatistics,
    SchmidtSpectrum,
    count_statistics,
    effective_mode_number,
    expected_means,
    expected_vardiff_total,
    g2,
    noise_degraded_g2,
    nrf,
    sample_counts,
    vardiff_and_total,
)
from .ring import (
    MomentSpectrum,
    PumpDrive,
    RingParams,
    VariancePoint,
    dwell_time,
    effective_detuning,
    extremal_from_moments,
    extremal_variances,
    extremal_variances_general,
    gain,
    lambda_coeff,
    moment_spectrum,
    nonlinear_coupling_rate,
    quadrature_variance,
    squeezing_spectrum,
    variances_delta_zero,
)
from .tes import (
    GaussianMixture,
    PulseTemplate,
    ScoreHistogram,
    TraceClassifier,
    TraceSet,
    assign_numbers,
    bin_count,
    default_pulse_shape,
    fit_mixture,
    generate_traces,
    principal_component,
    project_scores,
    round_trip,
    tail_fraction,
)

__version__ = "0.1.0"
