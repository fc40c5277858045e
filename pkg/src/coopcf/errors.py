"""Exception hierarchy."""


class CoopCFError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(CoopCFError, ValueError):
    """Array shapes or lengths do not match."""


class ParameterError(CoopCFError, ValueError):
    """A scalar parameter is out of range (non-prime modulus, negative power...)."""


class ConfigurationError(CoopCFError, ValueError):
    """Unknown scenario name or malformed configuration."""


class ValidityError(CoopCFError, ValueError):
    """Coefficient matrix is not a member of the admissible set."""


class SteeringError(CoopCFError, ValueError):
    """Steering vectors violate the power or cooperation constraints."""


class InfeasibleError(CoopCFError):
    """The requested construction does not exist for this channel."""


class UnsupportedError(CoopCFError, NotImplementedError):
    """Configuration outside the implemented scope."""


class FitError(CoopCFError):
    """Too few usable points to fit a diversity slope."""
