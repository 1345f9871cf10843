"""Exception hierarchy shared by every module in the package.

Callers can catch GPRegimeError to handle anything raised here, or one of
the specific subclasses to distinguish bad input from solver trouble.
"""


class GPRegimeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(GPRegimeError, ValueError):
    """A numeric parameter is out of its admissible range (e.g. V0 < 0)."""


class InvalidDomainError(GPRegimeError, ValueError):
    """A grid or domain is malformed (empty, non-monotone, wrong endpoint)."""


class InvalidRegimeError(GPRegimeError, ValueError):
    """Parameters are individually valid but jointly outside the regime
    an operation is defined for (e.g. cutoff below the box scale)."""


class SolverFailureError(GPRegimeError, RuntimeError):
    """An iterative solve did not converge to its tolerance."""


class ResourceLimitError(GPRegimeError, RuntimeError):
    """The requested computation exceeds the configured desk-scale budget
    (matrix dimension, memory, or node-count caps)."""


class ConfigError(GPRegimeError, ValueError):
    """A run configuration is malformed: bad schema version, unknown key,
    or a value of the wrong type."""
