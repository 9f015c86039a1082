"""Numerical spectral analysis of unbounded block Jacobi matrices."""

from ._backend import BACKEND
from .errors import (DependentSolutionsError, InputDomainError, JacobiSpecError,
                     RecursionOverflowError, SingularBlockError, SingularityError,
                     SingularShiftError, UsageError)
from .model import CoefficientFamily, TruncatedJacobi, make_family, truncate

__version__ = "0.1.0"

__all__ = ["BACKEND", "CoefficientFamily", "TruncatedJacobi", "make_family", "truncate",
           "JacobiSpecError", "InputDomainError", "UsageError", "SingularBlockError",
           "SingularShiftError", "SingularityError", "DependentSolutionsError",
           "RecursionOverflowError"]
