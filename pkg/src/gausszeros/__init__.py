"""Zeros of stationary Gaussian processes: spectral measures, covariance
kernels, path simulation, chaos-expansion variance bounds and Bernoulli
convolution diagnostics."""
__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateMeasureError, EmbeddingError, GaussZerosError,
                     QuadratureError, SimulationError, ToleranceError, UnknownStructureError)
from .spectral import Atomic, CosineProduct, Density, Mixture, normalize
from .covariance import CovarianceKernel
from .bernoulli import LambdaSequence
from .simulate import Indicator, PiecewiseConstant, Tabulated, variance_experiment
from .presets import preset

__all__ = ["Atomic", "ConfigError", "CosineProduct", "CovarianceKernel", "DegenerateMeasureError",
           "Density", "EmbeddingError", "GaussZerosError", "Indicator", "LambdaSequence", "Mixture",
           "PiecewiseConstant", "QuadratureError", "SimulationError", "Tabulated", "ToleranceError",
           "UnknownStructureError", "normalize", "preset", "variance_experiment"]
