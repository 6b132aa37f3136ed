"""Quantum-interference measurement of g with atoms bouncing on a mirror.

Simulates the full pipeline of a gravitational-quantum-state interference
experiment: eigenbasis construction, free-fall anamorphosis to a detection
plate, Monte Carlo event generation, maximum-likelihood estimation of the
free-fall acceleration g and its Fisher-information bound, plus a classical
timing baseline for comparison.
"""

from .basis import (
    GqsBasis,
    MomentumDensity,
    build_basis,
    cross_density,
    eigen_momentum,
    momentum_density,
    project_coefficients,
)
from .classical import (
    ClassicalModel,
    classical_ensemble,
    classical_time_density,
    estimate_g_classical,
    sample_classical,
)
from .config import ExperimentConfig
from .context import HBAR, HYDROGEN_MASS, InitialWavePacket, PhysicalContext, make_context
from .detector import (
    DetectionDensity,
    DetectionModel,
    Geometry,
    anamorphosis,
    anamorphosis_inverse,
    detection_density,
    detection_window,
    fringe_grid_check,
    horizontal_weight,
)
from .errors import (
    AccuracyError,
    AliasingError,
    ConfigError,
    ContractError,
    DomainError,
    ExtentError,
    GqsimError,
    NonConcaveError,
    StepSizeError,
)
from .inference import (
    EnsembleResult,
    EstimateReport,
    LikelihoodScan,
    ModelCache,
    ensemble_run,
    estimate_g,
    fisher_information,
    log_likelihood,
    quadratic_fit,
    scan_likelihood,
)
from .sampling import EventSet, sample_events, transport_oracle_sample
from .special import (
    AiryZeroTable,
    airy_ai,
    airy_ai_prime,
    airy_zero_seeds,
    airy_zeros,
    fourier_transform_tabulated,
    inverse_fourier_transform_tabulated,
    quadrature,
)

__version__ = "0.1.0"
