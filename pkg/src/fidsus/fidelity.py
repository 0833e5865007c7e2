"""Fidelity, square-root fidelity and Bures distance."""

import numpy as np

from . import matcore
from .errors import DimensionMismatch


def _operands(rho, sigma):
    a = matcore.as_array(rho)
    b = matcore.as_array(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def sqrt_fidelity(rho, sigma):
    """``tr sqrt(sqrt(rho) sigma sqrt(rho))``.

    Either argument may be a sub-normalized PSD matrix; the result is then
    the square-root fidelity of the unnormalized pair, clipped to
    ``[0, sqrt(tr rho * tr sigma)]``.
    """
    a, b = _operands(rho, sigma)
    lams = matcore.product_spectrum(a, b)
    value = float(np.sum(np.sqrt(lams[::-1])))
    cap = np.sqrt(max(float(np.real(np.trace(a))), 0.0) * max(float(np.real(np.trace(b))), 0.0))
    return min(max(value, 0.0), cap)


def fidelity(rho, sigma):
    """Fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Args:
        rho: density matrix (or sub-normalized PSD array).
        sigma: density matrix of the same dimension.

    Returns:
        float in ``[0, tr(rho) tr(sigma)]``; ``[0, 1]`` for normalized states.
    """
    return sqrt_fidelity(rho, sigma) ** 2


def fidelity_sandwich_route(rho, sigma):
    """Reference evaluation through an explicit principal square root."""
    a, b = _operands(rho, sigma)
    s = matcore.psd_sqrt(a)
    return matcore.trace_sqrt(s @ b @ s) ** 2


def fidelity_product_route(rho, sigma):
    """Reference evaluation from the non-Hermitian spectrum of ``rho @ sigma``."""
    a, b = _operands(rho, sigma)
    lams = matcore.product_spectrum_general(a, b)
    return float(np.sum(np.sqrt(lams))) ** 2


def bures_distance_sq(rho, sigma):
    """``2 - 2 sqrt(F)``, in ``[0, 2]`` for normalized states."""
    return 2.0 - 2.0 * sqrt_fidelity(rho, sigma)


class FidelityReference:
    """Fidelity against a fixed first argument, factoring it only once.

    Useful when one state is compared with many others, as in the
    susceptibility terms and correlator scans.
    """

    def __init__(self, rho):
        self.matrix = matcore.as_array(rho)
        self.basis, self.roots = matcore.psd_factor(self.matrix)
        self._trace = max(float(np.real(np.trace(self.matrix))), 0.0)

    def spectrum(self, sigma):
        return matcore.product_spectrum_factored(self.basis, self.roots, sigma)

    def sqrt_fidelity(self, sigma):
        b = matcore.as_array(sigma)
        value = float(np.sum(np.sqrt(self.spectrum(b)[::-1])))
        cap = np.sqrt(self._trace * max(float(np.real(np.trace(b))), 0.0))
        return min(max(value, 0.0), cap)

    def fidelity(self, sigma):
        return self.sqrt_fidelity(sigma) ** 2
