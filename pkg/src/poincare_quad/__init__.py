"""Poincare quadratures: Gaussian quadrature rules for the Sobolev space H1(mu) on an interval."""

from .kernel import (
    gram, mercer_kernel, optimal_weights, trunc_exp_kernel, uniform_kernel, wce_spectral, wce_squared,
)
from .measures import Interval, Measure, make_measure, tabulated, truncated_exponential, uniform
from .quadrature import QuadratureConfig, QuadratureRule, poincare_quadrature, zeros_of_basis_function
from .spectral import (
    SpectralBasis, closed_form_trunc_exp, closed_form_uniform, fem_basis, make_basis, poincare_constant,
)

__version__ = "0.1.0"
