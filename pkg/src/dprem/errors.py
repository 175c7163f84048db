"""Exception types shared across the package."""


class DpremError(Exception):
    """Base class for all package errors."""


class BudgetExceededError(DpremError):
    """An enumeration or tuple count exceeds its configured cap."""

    def __init__(self, what: str, needed: int, cap: int):
        self.what = what
        self.needed = needed
        self.cap = cap
        super().__init__(f"{what}: {needed} items exceeds budget cap {cap}")


class ConfigError(DpremError):
    """Invalid experiment configuration."""


class SingularMatrixError(DpremError):
    """Covariance matrix is rank deficient; reduce to a basis first."""


class TailBoundError(DpremError):
    """Fourier inversion cannot reach its truncation target."""


class WindowError(DpremError):
    """Requested window exceeds the retained gap truncation."""


class SampleSizeError(DpremError):
    """Too few samples (or retained gaps) for a statistical test."""
