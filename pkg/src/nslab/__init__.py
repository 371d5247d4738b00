"""Pseudo-spectral incompressible Navier-Stokes laboratory on a periodic box.

Library layout:

* :mod:`nslab.spectral`     fields, transforms, exact spectral calculus
* :mod:`nslab.leray`        divergence-free projection, pressure recovery
* :mod:`nslab.norms`        Lebesgue / Sobolev / mixed space-time norms
* :mod:`nslab.inequalities` integral inequalities and exponent algebra
* :mod:`nslab.nonlinear`    convective term and bilinear form
* :mod:`nslab.solver`       time integration and Galerkin reduction
* :mod:`nslab.monitors`     identity residuals and estimate margins
* :mod:`nslab.cli`          run / check / convergence command line
"""

from .spectral import (
    GridSpec,
    RealScalarField,
    SpectralScalarField,
    SpectralVectorField,
    forward_transform,
    inverse_transform,
    partial_derivative,
    gradient,
    divergence,
    curl,
    laplacian,
)
from .leray import LerayProjector
from .norms import BochnerExponents, Trajectory

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "RealScalarField",
    "SpectralScalarField",
    "SpectralVectorField",
    "forward_transform",
    "inverse_transform",
    "partial_derivative",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "LerayProjector",
    "BochnerExponents",
    "Trajectory",
    "__version__",
]
