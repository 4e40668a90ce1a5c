"""Semiclassical spectra of 2D magnetic Schrodinger operators whose field
has a degenerate well along a curve."""

from . import errors
from .errors import (
    ComplexFrequencyError,
    ConfigError,
    ConstructionError,
    ConvergenceError,
    DegeneracyViolationError,
    DegenerateMiniwellError,
    DomainError,
    GridMismatchError,
    GridResolutionError,
    IllConditionedFitError,
    IntegrationError,
    InvalidMetricError,
    MagwellError,
    NotAWellError,
    OutOfBandError,
    PrequantizationError,
    RequestTooLargeError,
    SolvabilityError,
    StencilError,
)
from .geometry import (
    Band,
    BandMetric,
    CurveGeometry,
    METRIC_CATALOG,
    circle_metric,
    curve_coefficients,
    flat_metric,
    gauss_curvature,
    horocycle_metric,
    metric_from_csv,
    metric_from_samples,
    sphere_equator_metric,
)
from .field import (
    FIELD_CATALOG,
    FieldProfile,
    GaugePotential,
    MiniWell,
    WellData,
    extract_well,
    field_from_csv,
    field_from_expression,
    field_from_samples,
    gauge_potential,
    miniwell_field,
    parabolic_field,
    uniform_field,
    validate_quadratic_well,
)
from .modelspectra import (
    AsymptoticEigenvalue,
    LandauLevel,
    LandauSpectrum,
    ZeemanSpectrum,
    groundstate_two_term,
    lambda_band,
    landau_identity_terms,
    landau_levels,
    miniwell_eigenvalue,
    miniwell_eigenvalue_k0,
    model_p0_groundstate,
    quadratic_zeeman_spectrum,
)
from .oscillator import (
    CutoffWindow,
    GaussianEnvelope,
    ModeExpansion,
    Order2Quasimode,
    OscillatorBasis,
    QuasimodeBundle,
    assemble_trial_state,
    build_order2_quasimode,
    cutoff_exponent,
    gaussian_envelope,
    moment_table,
    oscillator_resolvent_solve,
)
from .operator import (
    DiscreteOperator,
    EigenResult,
    FormValues,
    GridSpec,
    MontgomeryReport,
    assemble,
    eigenresult_from_csv,
    eigenresult_to_csv,
    load_eigenresult,
    load_operator,
    lowest_eigenpairs,
    montgomery_check,
    quadratic_form,
    residual_norm,
    save_eigenresult,
    save_operator,
)
from .lab import (
    ExperimentConfig,
    FitReport,
    GapReport,
    SweepRecord,
    build_scenario,
    count_gaps,
    default_config_text,
    default_min_gap,
    exponent_fit,
    fit_powers,
    interval_for_band,
    parse_config,
    read_sweep_csv,
    run_sweep,
    write_sweep_csv,
)

__version__ = "0.1.0"
