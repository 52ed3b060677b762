"""Numerical laboratory for integration by parts of the fractional Laplacian
in power-weighted Lebesgue spaces."""

from .errors import (
    AliasingError,
    ConfigError,
    DegenerateFit,
    DomainError,
    IoError,
    MissingDecayHint,
    NllabError,
    NonIntegrableTail,
    QuadratureFailure,
    SingularPoint,
)
from .params import ProblemParams, critical_gamma, kernel_constants

__version__ = "0.1.0"

__all__ = [
    "AliasingError",
    "ConfigError",
    "DegenerateFit",
    "DomainError",
    "IoError",
    "MissingDecayHint",
    "NllabError",
    "NonIntegrableTail",
    "QuadratureFailure",
    "SingularPoint",
    "ProblemParams",
    "critical_gamma",
    "kernel_constants",
    "__version__",
]
