"""Conjugate index and regularised Morse index of indefinite higher-order
Sturm problems with Dirichlet boundary conditions."""

from .comparison import FormPair, check_order, compare_indices
from .errors import (
    CrossingError,
    DegenerateEndpointError,
    RefinementExhaustedError,
    ShootingError,
    ZeroOnContourError,
)
from .galerkin_flow import (
    GalerkinBasis,
    HermitianPencil,
    assemble,
    crossing_form,
    delta_perturb,
    inertia,
    morse_index,
    pencil,
    spectral_flow,
)
from .poly_forms import (
    DiffOperator,
    HermitianForm,
    MatrixPolynomial,
    d_lambda_rescale,
    euler_lagrange,
    rescale,
    validate_form,
    weak_form_residual,
)
from .shooting import Tolerances, assemble_system, rho, transition
from .winding import Rectangle, conjugate_index, localize_instants, trace_contour, winding_number

__version__ = "0.1.0"
