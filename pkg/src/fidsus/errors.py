"""Exception types raised across the package."""

import numpy as np


class FidsusError(Exception):
    """Base class for package errors."""


class DimensionMismatch(FidsusError, ValueError):
    pass


class NotPositiveSemidefinite(FidsusError, ValueError):
    """A matrix that must be PSD has an eigenvalue below the tolerance."""

    def __init__(self, eigenvalue, tol):
        self.eigenvalue = float(eigenvalue)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not positive semidefinite: eigenvalue {self.eigenvalue:.3e} "
            f"< -{self.tol:.1e}")


class EigensolverError(FidsusError, np.linalg.LinAlgError):
    pass


class InvalidState(FidsusError, ValueError):
    pass


class DimensionCapExceeded(FidsusError, ValueError):
    pass


class NotStronglySymmetric(FidsusError, ValueError):
    pass


class NoSignal(FidsusError, ValueError):
    """All correlator values are below the positivity floor."""


class InvariantViolation(FidsusError, RuntimeError):
    """A recorded inequality failed at write time."""


class ConfigError(FidsusError, ValueError):
    """Invalid sweep or command configuration."""
