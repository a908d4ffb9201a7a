"""Exception types shared across the package."""


class MisosecError(Exception):
    """Base class for all package-specific errors."""


class ModelValidationError(MisosecError, ValueError):
    """Inputs violate a documented contract (domain, shape, or kind)."""


class ConvergenceError(MisosecError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class SingularChannelError(MisosecError, RuntimeError):
    """A Gram matrix is numerically singular (condition number too large)."""


class DegenerateParameterError(MisosecError, ValueError):
    """Parameters sit on a boundary where the requested quantity is undefined."""
