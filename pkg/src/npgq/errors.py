"""Exception types shared across the package."""


class NpgqError(Exception):
    """Base class for all errors raised by this package."""


class InputError(NpgqError):
    """Invalid or malformed input (bad arguments, insufficient moments, parse errors)."""


class DegenerateDataError(NpgqError):
    """Data carries too little variation for the requested operation."""


class NotPositiveDefiniteError(NpgqError):
    """Cholesky factorization hit a non-positive pivot.

    Attributes
    ----------
    pivot : int
        1-based index of the failing pivot.  A failure at pivot ``i``
        signals that the underlying measure has fewer than ``i``
        effective support points; reducing the node count to ``i - 1``
        is the usual remedy.
    """

    def __init__(self, message: str, pivot: int):
        super().__init__(message)
        self.pivot = pivot


class InfeasibleError(NpgqError):
    """Moment targets are unattainable on the given support."""


class UnboundedError(NpgqError):
    """Optimization problem has no finite optimum."""


class NumericalError(NpgqError):
    """An iterative routine failed to converge within its cap."""
