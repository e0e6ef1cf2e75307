"""ddebound: scalar comparison bounds for vector delay differential systems.

The library reduces a vector nonlinear delay system with time-varying
coefficients to a scalar delay equation whose solution provably dominates the
vector solution norm (given matched histories), then uses that scalar
equation to verify bounds, classify stability and boundedness, and estimate
trapping/stability region radii by bisection.
"""

from .analysis import (BoundednessCriterion, BoundReport, FtsReport, RadiusEstimate,
                       RegionBoundary, RobustReport, build_perturbed_scalar,
                       classify_fts, estimate_scalar_radius, estimate_vector_region,
                       robust_stability_check, verify_pointwise_ordering)
from .config import ConfigError, RunConfig, load_config, load_config_text
from .dde_core import (BlowupReport, DelaySpec, GenericDelaySystem, HistoryFunction,
                       IntegrationError, Perturbation, ScalarDelaySystem,
                       ToleranceSettings, Trajectory, VectorDelaySystem,
                       detect_blowup, eval_trajectory, integrate,
                       sup_norm_on_interval)
from .expressions import (EvaluationError, Expression, ExpressionSyntaxError,
                          parse_expression)
from .linalg import MatrixFunction, singular_values, spectral_norm
from .linear_aux import (IssReport, LinearResponse, LinearScalarDDE,
                         build_constant_linear_auxiliary, build_linear_auxiliary,
                         cauchy_function, integrate_linear, iss_bound_series,
                         particular_response, superposition_check)
from .majorant import (LinearizedCoefficients, PolynomialMajorant, PolynomialTerm,
                       eval_majorant, linearize_majorant, majorize_polynomial,
                       sup_linear_coefficients)
from .reduction import (CoefficientPair, FundamentalMatrixSolution,
                        IllConditionedError, build_autonomous_auxiliary,
                        build_scalar_auxiliary, c_of_t, compute_fundamental_matrix,
                        p_of_t)
from .vectorfield import DelayedMatrixTerm, NonlinearTerm, PolynomialVectorField

__version__ = "0.1.0"
