"""Dense Hermitian linear algebra: eigendecomposition, PSD square roots and
product spectra.

Everything downstream (fidelity, proxies, geometry) goes through
:func:`psd_factor` and :func:`product_spectrum`, so the spectrum hygiene
policy lives here:

* eigenvalues below ``-tol`` are an error (:class:`NotPositiveSemidefinite`);
* eigenvalues whose magnitude is below the round-off floor
  ``HYGIENE * dim * eps * scale`` are set to exactly zero.

The second rule matters for rank-deficient states: without it the square
root of a ``1e-17`` round-off eigenvalue contributes ``3e-9`` per direction
to ``tr sqrt(...)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EigensolverError, NotPositiveSemidefinite

EPS = float(np.finfo(float).eps)
HYGIENE = 16.0
DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Square complex matrix symmetrized on construction.

    Attributes:
        entries: the symmetrized array ``(M + M^dagger) / 2``.
        hermiticity_defect: ``max |M - M^dagger|`` of the raw input.
    """

    entries: np.ndarray
    hermiticity_defect: float

    @classmethod
    def from_array(cls, m, max_defect=None):
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionMismatch(f"expected a non-empty square matrix, got shape {m.shape}")
        defect = float(np.max(np.abs(m - m.conj().T)))
        if max_defect is not None and defect > max_defect:
            raise ValueError(f"hermiticity defect {defect:.3e} exceeds {max_defect:.1e}")
        return cls(hermitize(m), defect)

    @property
    def dim(self):
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in ascending order with the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clip_tolerance: float = DEFAULT_TOL

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_array(m):
    """Return the raw complex array behind a matrix-like object."""
    if isinstance(m, HermitianMatrix):
        return m.entries
    inner = getattr(m, "matrix", None)
    if inner is not None:
        return inner
    return np.asarray(m, dtype=complex)


def hermitize(m):
    return 0.5 * (m + m.conj().T)


def noise_floor(dim, scale):
    """Magnitude below which an eigenvalue is indistinguishable from zero."""
    return HYGIENE * dim * EPS * scale


def real_if_possible(m):
    """Drop a round-off imaginary part so LAPACK can use real routines.

    The imaginary part is discarded only when it is below ``EPS`` times the
    largest entry, i.e. at the level of the arithmetic that produced it.
    """
    if np.iscomplexobj(m) and m.size:
        scale = float(np.max(np.abs(m)))
        if float(np.max(np.abs(m.imag))) <= EPS * scale:
            return np.ascontiguousarray(m.real)
    return m


def eigh(m, tol=DEFAULT_TOL):
    m = real_if_possible(hermitize(as_array(m)))
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(
            f"Hermitian eigensolver did not converge for a {m.shape[0]}x{m.shape[0]} matrix") from exc
    return Spectrum(w, v, tol)


def psd_factor(m, tol=DEFAULT_TOL):
    """Factor a PSD matrix on its numerical support.

    Returns ``(basis, roots)`` such that ``sqrt(M) = basis @ diag(roots) @ basis^dagger``
    where ``basis`` has orthonormal columns spanning the support and every
    entry of ``roots`` is strictly positive. A rank-one input is recognised
    from ``tr(M)^2 - tr(M^2)`` without a full eigendecomposition.

    Raises:
        NotPositiveSemidefinite: an eigenvalue is below ``-tol``.
    """
    m = hermitize(as_array(m))
    dim = m.shape[0]
    t = float(np.real(np.trace(m)))
    if t > 0:
        purity = float(np.sum(np.abs(m) ** 2))
        if abs(t * t - purity) <= 2.0 * noise_floor(dim, t) * t:
            k = int(np.argmax(np.real(np.diag(m))))
            v = m[:, k] / np.sqrt(np.real(m[k, k]))
            v = v / np.linalg.norm(v)
            return v[:, None], np.array([np.sqrt(t)])
    spec = eigh(m, tol)
    w = spec.eigenvalues
    if w.size and w[0] < -tol:
        raise NotPositiveSemidefinite(w[0], tol)
    scale = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
    keep = w > noise_floor(dim, scale)
    return spec.eigenvectors[:, keep], np.sqrt(w[keep])


def psd_sqrt(m, tol=DEFAULT_TOL):
    """Principal square root ``V diag(sqrt(max(w, 0))) V^dagger`` of a PSD matrix."""
    basis, roots = psd_factor(m, tol)
    return (basis * roots) @ basis.conj().T


def trace_sqrt(m, tol=DEFAULT_TOL):
    """``tr sqrt(M)`` for PSD ``M``."""
    _, roots = psd_factor(m, tol)
    return float(np.sum(roots))


def product_spectrum(rho, sigma, tol=1e-12):
    """Eigenvalues of ``rho @ sigma``, descending, via the Hermitian sandwich.

    The spectrum of ``rho sigma`` equals that of ``sqrt(rho) sigma sqrt(rho)``;
    the latter is computed on the support of ``rho`` only, so a pure ``rho``
    costs a single matrix-vector product. Entries below the round-off floor
    are returned as exact zeros. Works for sub-normalized PSD arguments.
    """
    rho = as_array(rho)
    sigma = as_array(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    basis, roots = psd_factor(rho)
    return product_spectrum_factored(basis, roots, sigma, tol)


def product_spectrum_factored(basis, roots, sigma, tol=1e-12):
    """:func:`product_spectrum` with ``rho`` already given as ``psd_factor(rho)``."""
    sigma = hermitize(as_array(sigma))
    dim = sigma.shape[0]
    if basis.shape[0] != dim:
        raise DimensionMismatch(f"dimension mismatch: {basis.shape[0]} vs {dim}")
    out = np.zeros(dim)
    if roots.size == 0:
        return out
    sigma = real_if_possible(sigma)
    reduced = basis.conj().T @ sigma @ basis
    k = real_if_possible(hermitize(roots[:, None] * reduced * roots[None, :]))
    if k.shape[0] == 1:
        lam = np.real(k[0])
    else:
        try:
            lam = np.linalg.eigvalsh(k)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(
                f"eigensolver did not converge for a {k.shape[0]}x{k.shape[0]} sandwich") from exc
    scale = float(roots.max()) ** 2 * float(np.linalg.norm(sigma))
    floor = noise_floor(dim, scale)
    if lam.min() < -max(tol, floor):
        raise NotPositiveSemidefinite(lam.min(), max(tol, floor))
    lam = np.where(lam > floor, lam, 0.0)
    out[: lam.size] = np.sort(lam)[::-1]
    return out


def product_spectrum_general(rho, sigma):
    """Oracle route: eigenvalues of the non-Hermitian product ``rho @ sigma``."""
    rho = as_array(rho)
    sigma = as_array(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    lam = np.real(np.linalg.eigvals(rho @ sigma))
    return np.sort(np.clip(lam, 0.0, None))[::-1]


def trace_power(lams, k):
    """``sum_i lam_i**k``, i.e. ``tr[(rho sigma)^k]`` for a product spectrum."""
    lams = np.asarray(lams, dtype=float)
    return float(np.sum(lams ** int(k)))


def sandwich(op, m):
    """``op @ m @ op^dagger``; a 1-D ``op`` is read as a diagonal."""
    op = np.asarray(op)
    if op.ndim == 1:
        return m * np.outer(op, op.conj())
    return op @ m @ op.conj().T
