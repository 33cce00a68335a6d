"""Harmonic analysis and Poisson simulation for vector-valued random
discrete measures with singular velocity laws."""

from .configuration import (
    FiniteConfiguration,
    MarkAnnulus,
    MarkedPoint,
    PositionWindow,
    VectorDiscreteMeasure,
    local_velocity,
    project,
    reflect,
    unreflect,
    validate_pinpointed,
)
from .combinat import (
    ConeFunction,
    ConfigurationFunction,
    coherent_state,
    coherent_state_cone,
    k_inverse,
    k_transform,
    k_transform_cone,
    star_convolution,
)
from .dsl import (
    Const,
    IndicatorPhase,
    LinearMark,
    PositionBump,
    Product,
    RadialMark,
    Scale,
    Sum,
    evaluate,
    integrate_sigma,
    parse_function,
    render_function,
)
from .errors import (
    BudgetExceeded,
    ConeLabError,
    DivergentMoment,
    DuplicatePosition,
    FunctionSyntaxError,
    OverlappingBoxes,
    QuadratureFailure,
    TruncationTooLoose,
    UnknownSymbol,
    ZeroVelocity,
)
from .estimators import (
    CorrelationTable,
    MCResult,
    PhaseBox,
    TiltDensity,
    closed_form_functional,
    correlation_density_mc,
    estimate_functional,
    factorial_moment_mc,
    k_duality_check,
    kappa_poisson_reference,
    kappa_position_mc,
)
from .intensity import (
    IntensitySpec,
    VelocityLaw,
    lambda_mass,
    lambda_moment,
    phi_lambda_h,
    sample_velocity,
    sigma_mass,
)
from .oracle import (
    GroundSet,
    oracle_lp_sum,
    verify_bernoulli_duality,
    verify_minlos_1,
    verify_minlos_2,
)
from .sampler import (
    LPSeriesResult,
    SampleBatch,
    lp_series_expectation,
    sample_batch,
    sample_poisson,
)
from .streams import RandomStream

__all__ = [name for name in dir() if not name.startswith("_")]
