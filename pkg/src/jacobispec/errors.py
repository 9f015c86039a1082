"""Exception hierarchy shared by all modules."""


class JacobiSpecError(Exception):
    """Base class for library errors."""


class InputDomainError(JacobiSpecError, ValueError):
    """Non-finite or structurally invalid numeric input."""


class UsageError(JacobiSpecError, ValueError):
    """Invalid parameters, unsupported options, or violated preconditions."""


class SingularBlockError(JacobiSpecError, ArithmeticError):
    """An off-diagonal block A_n is not invertible."""


class SingularShiftError(JacobiSpecError, ArithmeticError):
    """Inertia could not be resolved at a shift even after perturbed retries."""

    def __init__(self, lam, message=None):
        self.lam = lam
        super().__init__(message or f"persistent singular pivot at shift {lam!r}")


class SingularityError(JacobiSpecError, ArithmeticError):
    """A block required to be boundedly invertible is (numerically) singular."""


class DependentSolutionsError(JacobiSpecError, ValueError):
    """Two solution paths have vanishing Wronskian."""


class RecursionOverflowError(JacobiSpecError, OverflowError):
    """Three-term recursion escaped even the log-scaled representation."""
