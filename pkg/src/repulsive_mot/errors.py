"""Exception hierarchy shared by the solver, analysis and CLI layers."""


class MOTError(Exception):
    """Base class for all package errors."""


class ValidationError(MOTError, ValueError):
    """Malformed input: bad measure, cost parameters or configuration."""


class InfeasibleError(MOTError):
    """No coupling of finite cost exists (every tuple hits the singularity)."""


class BudgetExceededError(MOTError):
    """The instance is larger than the configured variable/enumeration budget."""


class SolverError(MOTError):
    """The LP engine failed (iteration limit, numerical breakdown)."""


class CertificateError(MOTError):
    """A computed solution failed one of the certificate checks."""
