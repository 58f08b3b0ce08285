"""Random-sum processes ``X_{n+1} = xi_1 + ... + xi_{X_n}``: exact compound
laws, exponential tail decay rates and fixed points of the truncated
transition operator."""

from .dist import (
    Moments,
    Pmf,
    convolve,
    geometric,
    hazard,
    moments,
    pmf_new,
    point_mass,
    poisson,
    self_convolve,
    tail,
    tail_of_sum,
    truncate,
    uniform,
)
from .errors import RandsumError
from .limit import (
    FixedPointResult,
    MarkovOperatorMatrix,
    apply,
    build_operator,
    fixed_point,
    residual_fixed_point_equation,
)
from .process import (
    ProcessSpec,
    SimulationTrace,
    c_param_over_time,
    compound_pmf,
    evolve,
    propagate_moments,
    simulate,
)
from .tail import (
    AnalyticTail,
    BoundCertificate,
    CParamEstimate,
    Trichotomy,
    TrichotomyVerdict,
    analytic_tail_eval,
    bound_certificate,
    c_param_analytic,
    c_param_estimate,
    classify_trichotomy,
    convolution_invariance_report,
    scaled_tail_series,
)

__version__ = "0.1.0"
