"""Exception hierarchy shared by all modules."""


class DysonEdgeError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(DysonEdgeError, ValueError):
    """Malformed input: wrong row lengths, empty files, bad shapes."""


class InterlacingError(StructuralError):
    """An array violates the Gelfand-Tsetlin interlacing inequalities."""


class DomainError(DysonEdgeError, ValueError):
    """A parameter lies outside the supported range."""


class NumericalError(DysonEdgeError, ArithmeticError):
    """A numerical routine failed (non-convergence, step size floor, ...)."""


class ConfigError(DysonEdgeError, ValueError):
    """A configuration file is missing, unparsable or fails validation."""
