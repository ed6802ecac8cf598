"""Bethe ansatz for the BC1 elliptic Ruijsenaars difference operator.

Modules
-------
elliptic      Weierstrass sigma, zeta, wp and the lattice context.
bc1_operator  Coefficients of L = a T^{2 gamma} + b T^{-2 gamma} + c and their symmetries.
bethe         Bethe equations, Newton solver and eigen-certification.
heun          BC1 Heun operator, continuous Bethe equations, gamma -> 0 limit.
spectral      Continuation in q = exp(2 gamma k), involution, curve export.
cli           Command-line front end.
"""
from .bc1_operator import Couplings, OperatorParams, apply_L, coefficients, make_params
from .bethe import BetheSolution, BetheState, SolverOptions, solve_newton, solve_random
from .elliptic import LatticeContext, log_sigma, make_context, sigma, wp, zeta_w
from .errors import (
    BC1Error,
    ConvergenceError,
    CouplingError,
    EllipticRangeError,
    FormatError,
    InsufficientGridError,
    InvolutionMismatchError,
    LatticeError,
    PoleError,
    RejectedSolutionError,
    SingularConfigurationError,
)
from .heun import HeunParams, limit_check, solve_continuous
from .spectral import CurveSample, equivalence_reduce, export_curve, import_curve, involute, trace

__version__ = "0.1.0"
