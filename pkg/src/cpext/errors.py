"""Exception hierarchy shared by all modules."""


class CpextError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(CpextError, ValueError):
    """Operands have incompatible shapes."""


class NotHermitianError(CpextError, ValueError):
    """A matrix that must be Hermitian is not (within tolerance)."""


class NotPSDError(CpextError, ValueError):
    """A matrix that must be positive semidefinite has a negative eigenvalue."""


class NumericFailure(CpextError, RuntimeError):
    """A numerical routine did not converge.

    Attributes:
        diagnostics: free-form dict with residuals or solver state.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NotLinearError(CpextError, ValueError):
    """Dependent inputs were assigned conflicting outputs."""


class IncompatibleError(CpextError, ValueError):
    """Primal and dual-side constraints disagree."""


class PreconditionError(CpextError, ValueError):
    """An operation was called outside its documented domain."""
