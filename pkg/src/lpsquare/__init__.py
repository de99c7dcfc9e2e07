"""Numerical toolkit for Littlewood-Paley square functions on weighted L^p spaces.

The package evaluates square-function, Marcinkiewicz, maximal, Carleson and
paraproduct operators on sampled functions over a periodic box, computes the
kernel seminorms and Fourier-decay conditions that govern their boundedness,
and runs empirical operator-norm sweeps against Muckenhoupt A_p weights.
"""

__version__ = "0.1.0"

from .grid import GridSpec, SampledFunction, SpectralFunction, TimeGrid
from .kernels import (
    CompactLq,
    CustomKernel,
    Haar1D,
    Kernel,
    PoissonDerivative,
    RadialProfile,
    SphereFunction,
    TruncatedHomogeneous,
)
from .weights import Constant, CubeFamily, Cube, PowerWeight, Weight

__all__ = [
    "GridSpec",
    "SampledFunction",
    "SpectralFunction",
    "TimeGrid",
    "Kernel",
    "Haar1D",
    "PoissonDerivative",
    "TruncatedHomogeneous",
    "CompactLq",
    "CustomKernel",
    "SphereFunction",
    "RadialProfile",
    "Weight",
    "PowerWeight",
    "Constant",
    "Cube",
    "CubeFamily",
    "__version__",
]
