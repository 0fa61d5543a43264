"""Exception hierarchy. The CLI maps each family onto an exit status."""


class EigendroidError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EigendroidError):
    """Malformed, inconsistent or unsupported input data."""


class CatalogError(DataError):
    """Invalid feature catalog (duplicate names, empty, bad fields)."""


class ModelFormatError(DataError):
    """Model document is corrupted, truncated or of an unsupported version."""


class DegenerateError(EigendroidError):
    """Numerically degenerate input (zero covariance, empty spectrum, ...)."""


class RegimeError(DegenerateError):
    """More features than training samples; the N x N path needs N <= K."""


class ConvergenceError(DegenerateError):
    """Jacobi sweeps did not reach the off-diagonal tolerance."""

    def __init__(self, message, off_norm=None):
        super().__init__(message)
        self.off_norm = off_norm
