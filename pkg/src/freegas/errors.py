"""Exception hierarchy shared across the package."""


class FreeGasError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(FreeGasError):
    """A parameter is outside its admissible range (e.g. beta <= 0)."""


class ConstraintError(FreeGasError):
    """A structural constraint is violated (density bounds, operator spectrum)."""


class AccuracyError(FreeGasError):
    """A quadrature or truncation did not reach the requested tolerance."""


class DivergenceError(FreeGasError):
    """A series or resolvent does not converge for the given parameters."""


class SizeError(FreeGasError):
    """Problem size exceeds the supported envelope."""


class SamplerStateError(FreeGasError):
    """Internal sampler state became inconsistent (should not happen)."""


class DiscretizationError(FreeGasError):
    """Grid too coarse for the requested kernel discretization."""


class ConsistencyError(FreeGasError):
    """An internal cross-check failed (bound violation, imaginary residue)."""
