"""Body-shadowing prediction for radio links via scalar diffraction over an
absorbing sheet, with antenna-pattern weighting and passive-detection analysis."""

from .antenna import (
    CosinePowerPattern,
    Direction,
    GaussianBeamPattern,
    IsotropicPattern,
    TabulatedPattern,
    direction_to,
    load_tabulated,
    normalized_gain,
)
from .detection import (
    GaussianHypothesis,
    RocCurve,
    fit_hypotheses,
    kl_divergence,
    llr,
    roc,
    roc_analytic,
    roc_monte_carlo,
    roc_operating_points,
)
from .diffraction import (
    FieldRatio,
    FieldSweep,
    QuadratureSpec,
    attenuation_db,
    field_ratio,
    field_ratio_sweep,
    fresnel_parameter,
    knife_edge_oracle,
    wavelength_m,
)
from .errors import (
    DomainError,
    FrespondError,
    IngestionError,
    PatternLoadError,
    ResourceBudgetError,
    ValidationError,
)
from .geometry import (
    BodySheet,
    LinkGeometry,
    MeasurementGrid,
    MembershipRule,
    MembershipSplit,
    classify_positions,
    default_grid,
    fresnel_radius,
    sheet_sample_points,
)
from .scenario import (
    AttenuationMap,
    JitterSpec,
    NoiseSpec,
    ScenarioConfig,
    default_frequencies_hz,
    ingest_measurements,
    predict_map,
    simulate_received_power,
    write_synthetic_measurements,
)
from .specfile import ExperimentSpec, load_spec, model_patterns, parse_spec

__version__ = "0.1.0"
