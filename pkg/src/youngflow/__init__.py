"""Young-integral calculus, fBm-driven linear systems, stability and pullback attractors."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DivergenceError,
    DomainError,
    NearZeroError,
    RangeError,
    ResourceError,
    ShapeError,
    SolvabilityError,
    TransformError,
    YoungflowError,
)
from .paths import SamplePath  # noqa: E402
from .fbm import FbmSpec, covariance_rh, generate_fbm, generate_one_sided, generate_ensemble, wiener_shift  # noqa: E402
from .variation import VariationResult, pvar_seminorm  # noqa: E402
from .young import k_constant, young_integral, young_loeve_certify  # noqa: E402
from .ode_young import CoefficientSet, FlowMatrix, fundamental_matrix, solve_young_sde  # noqa: E402
from .stability import KappaParams, StabilityReport, criterion_report, kappa, lyapunov_estimate  # noqa: E402
from .attractor import AttractorReport, attractor_criterion, beta_bound, gronwall_bound  # noqa: E402
from .models import SirParams, lyapunov_transform, sir_build  # noqa: E402

__all__ = [
    "__version__",
    "YoungflowError",
    "DomainError",
    "RangeError",
    "ShapeError",
    "ResourceError",
    "DivergenceError",
    "NearZeroError",
    "SolvabilityError",
    "TransformError",
    "SamplePath",
    "FbmSpec",
    "covariance_rh",
    "generate_fbm",
    "generate_one_sided",
    "generate_ensemble",
    "wiener_shift",
    "VariationResult",
    "pvar_seminorm",
    "k_constant",
    "young_integral",
    "young_loeve_certify",
    "CoefficientSet",
    "FlowMatrix",
    "fundamental_matrix",
    "solve_young_sde",
    "KappaParams",
    "StabilityReport",
    "criterion_report",
    "kappa",
    "lyapunov_estimate",
    "AttractorReport",
    "attractor_criterion",
    "beta_bound",
    "gronwall_bound",
    "SirParams",
    "lyapunov_transform",
    "sir_build",
]
