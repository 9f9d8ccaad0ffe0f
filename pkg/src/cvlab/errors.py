"""Exception hierarchy shared by every cvlab module."""


class CVLabError(ValueError):
    """Base class for all library errors."""


class DimensionError(CVLabError):
    """Matrix or vector shapes are inconsistent with the declared mode count."""


class PhysicalityError(CVLabError):
    """A covariance matrix violates the uncertainty relation."""


class NonGaussianError(CVLabError):
    """A covariance-matrix operation was requested on a non-Gaussian state."""


class ConvergenceError(CVLabError):
    """A numerical procedure failed to reach its tolerance."""
