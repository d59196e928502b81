"""Deterministic certified approximation of log-permanents, log-hafnians,
and log-permanents of d-dimensional tensors, with exact reference oracles,
zero-free region checks, and Taylor/composition pipelines.
"""

from .core import (
    ComplexMatrix,
    ComplexTensor,
    SymmetricComplexMatrix,
    UnivariatePolynomial,
    WeightedHypergraph,
    poly_compose_truncated,
    poly_mul,
    poly_truncate,
    polynomial_roots,
    schur_product,
)
from .errors import (
    BetaNotGreaterThanOne,
    BudgetExceeded,
    DegreeExceedsN,
    EtaTooLarge,
    InfeasibleParameters,
    NonzeroInnerConstant,
    PermlogError,
    RegionViolation,
    RhoOutOfRange,
    ShapeMismatch,
    SizeLimitExceeded,
    ZeroBaseValue,
)
from .interpolation import (
    ApproxReport,
    PhiPolynomial,
    approx_log_disc,
    approx_log_strip,
    build_phi,
    choose_degree,
    g_derivatives_hafnian,
    g_derivatives_permanent,
    g_derivatives_tensor,
    g_full_expansion_hafnian,
    g_full_expansion_permanent,
    g_full_expansion_tensor,
    log_derivatives,
    taylor_error_bound,
)
from .oracles import (
    MatchingPolynomialCoeffs,
    deviation_hypergraph,
    hafnian_exact,
    matching_polynomial,
    permanent_exact,
    tensor_permanent_exact,
)
from .regions import (
    MembershipReport,
    RegionKind,
    RegionSpec,
    alpha_constant,
    check_region,
    eta_d_disc,
    eta_d_l1,
    eta_d_strip,
    matching_weight_budget,
    partial_exp_poly,
    region_eta_max,
    tau_bound,
)

__version__ = "1.0.0"

__all__ = [
    "ApproxReport",
    "BetaNotGreaterThanOne",
    "BudgetExceeded",
    "ComplexMatrix",
    "ComplexTensor",
    "DegreeExceedsN",
    "EtaTooLarge",
    "InfeasibleParameters",
    "MatchingPolynomialCoeffs",
    "MembershipReport",
    "NonzeroInnerConstant",
    "PermlogError",
    "PhiPolynomial",
    "RegionKind",
    "RegionSpec",
    "RegionViolation",
    "RhoOutOfRange",
    "ShapeMismatch",
    "SizeLimitExceeded",
    "SymmetricComplexMatrix",
    "UnivariatePolynomial",
    "WeightedHypergraph",
    "ZeroBaseValue",
    "alpha_constant",
    "approx_log_disc",
    "approx_log_strip",
    "build_phi",
    "check_region",
    "choose_degree",
    "deviation_hypergraph",
    "eta_d_disc",
    "eta_d_l1",
    "eta_d_strip",
    "g_derivatives_hafnian",
    "g_derivatives_permanent",
    "g_derivatives_tensor",
    "g_full_expansion_hafnian",
    "g_full_expansion_permanent",
    "g_full_expansion_tensor",
    "hafnian_exact",
    "log_derivatives",
    "matching_polynomial",
    "matching_weight_budget",
    "partial_exp_poly",
    "permanent_exact",
    "polynomial_roots",
    "poly_compose_truncated",
    "poly_mul",
    "poly_truncate",
    "region_eta_max",
    "schur_product",
    "tau_bound",
    "taylor_error_bound",
    "tensor_permanent_exact",
]
