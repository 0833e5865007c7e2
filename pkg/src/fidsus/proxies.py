"""Polynomial lower bounds on fidelity built from moments of the product spectrum.

With ``lam`` the spectrum of ``rho sigma`` the fidelity is ``(sum_i sqrt(lam_i))^2``.
Writing ``A_1(lam) = sum_i lam_i`` and

    A_{k+1}(lam) = [A_k(lam)^2 - A_k(lam^2)] / 2,

each ``A_k`` is a sum of products of eigenvalues (so ``A_k >= 0``) that
depends only on the moments ``sum_i lam_i^(2^m)``, and

    F = A_1 + 2 sqrt(A_2 + 2 sqrt(A_3 + 2 sqrt(A_4 + ...)))

holds exactly. Dropping the innermost radical gives the truncations
``L_1 <= L_2 <= ... <= F``. In the normalization
``F = F_1 + sqrt(2 F_2 + sqrt(8 F_3 + ... sqrt(2^(n(n-1)/2) F_n)))`` the
terms are ``F_n = 2^(2^n - 2 - n(n-1)/2) A_n``; ``F_1``, ``F_2`` and ``F_3``
coincide with the familiar expressions
``tr(rho sigma)``, ``tr(rho sigma)^2 - tr[(rho sigma)^2]`` and so on.

``recursion="literal"`` instead uses
``F_{n+1} = F_n^2 - 2^(n(n-1)/2) [(sum lam^(2^(n-1)))^2 - sum lam^(2^n)]``
for every ``n``. It agrees up to ``F_3`` but from ``F_4`` on it is not a
sum of non-negative terms and its truncations can exceed ``F``; it is kept
for comparison only.

Moment differences cancel catastrophically in floating point and the
nested roots amplify the error (a round-off of ``1e-16`` inside a fourth
root becomes ``1e-4``). All moments and ``A_k`` are therefore computed in
exact rational arithmetic from the floating-point eigenvalues, and only the
final radicals are evaluated numerically (at 50 significant digits).
"""

from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from . import matcore
from .fidelity import FidelityReference
from .observables import require_strong_symmetry, twisted_mixture

MAX_DEPTH = 8
DEFAULT_DEPTH = 4
RECURSIONS = ("corrected", "literal")
_DIGITS = 50


def _exact_scaled(lams):
    """Non-negative floats as integers ``M_i`` with ``lam_i = M_i / 2^K`` exactly."""
    vals = [float(x) for x in lams if x > 0]
    if not vals:
        return [], 0
    fracs = [Fraction(v) for v in vals]
    k = max(f.denominator.bit_length() - 1 for f in fracs)
    return [f.numerator << (k - (f.denominator.bit_length() - 1)) for f in fracs], k


def _power_sums(lams, count):
    """Exact ``p_m = sum_i lam_i^(2^m)`` for ``m = 0 .. count-1``, as Fractions."""
    ints, k = _exact_scaled(lams)
    sums = []
    cur = ints
    for m in range(count):
        sums.append(Fraction(sum(cur), 1 << (k << m)) if cur else Fraction(0))
        cur = [x * x for x in cur]
    return sums


def weight_exponent(n):
    """Exponent ``e`` with ``F_n = 2^e A_n``."""
    return (1 << n) - 2 - n * (n - 1) // 2


def _corrected_terms(p, depth):
    # a[m] holds A_k(lam^(2^m)); start with k = 1 where A_1(lam^(2^m)) = p_m.
    a = list(p)
    out = [a[0]]
    for _ in range(1, depth):
        a = [(a[m] * a[m] - a[m + 1]) / 2 for m in range(len(a) - 1)]
        out.append(a[0])
    return [x * (1 << weight_exponent(n + 1)) if n else x for n, x in enumerate(out)]


def _literal_terms(p, depth):
    f = [p[0]]
    if depth >= 2:
        f.append(p[0] * p[0] - p[1])
    for n in range(2, depth):
        c = 1 << (n * (n - 1) // 2)
        f.append(f[n - 1] * f[n - 1] - c * (p[n - 1] * p[n - 1] - p[n]))
    return f


def _to_mp(x):
    return mpmath.mpf(x.numerator) / x.denominator


def nested_truncations(f_terms):
    """``L_m = F_1 + sqrt(2 F_2 + sqrt(8 F_3 + ... sqrt(2^(m(m-1)/2) F_m)))``; negative terms floored."""
    with mpmath.workdps(_DIGITS):
        weighted = [max(_to_mp(f), mpmath.mpf(0)) * (1 << (n * (n - 1) // 2))
                    for n, f in enumerate(f_terms, start=1)]
        out = []
        for m in range(1, len(weighted) + 1):
            inner = mpmath.mpf(0)
            for t in reversed(weighted[1:m]):
                inner = mpmath.sqrt(t + inner)
            out.append(float(weighted[0] + inner))
    return np.array(out)


@dataclass(frozen=True, eq=False)
class ProxyChain:
    """Moment terms ``F_n`` and nested truncations ``L_n`` for one pair."""

    lambdas: np.ndarray
    F_n: np.ndarray
    L_n: np.ndarray
    depth: int
    exact_F: float
    recursion: str = "corrected"

    @property
    def gap(self):
        return self.exact_F - self.L_n[-1]

    def monotone(self, tol=0.0):
        return bool(np.all(np.diff(self.L_n) >= -tol))


def chain_from_spectrum(lams, depth=DEFAULT_DEPTH, recursion="corrected"):
    """Build a :class:`ProxyChain` from a product spectrum."""
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must lie in [1, {MAX_DEPTH}], got {depth}")
    if recursion not in RECURSIONS:
        raise ValueError(f"recursion must be one of {RECURSIONS}")
    lams = np.sort(np.clip(np.asarray(lams, dtype=float), 0.0, None))[::-1]
    p = _power_sums(lams, depth)
    terms = _corrected_terms(p, depth) if recursion == "corrected" else _literal_terms(p, depth)
    f_float = np.array([float(t) for t in terms])
    if not np.all(np.isfinite(f_float)):
        raise OverflowError("proxy terms overflow double precision")
    exact = float(np.sum(np.sqrt(lams[::-1]))) ** 2
    return ProxyChain(lams, f_float, nested_truncations(terms), depth, exact, recursion)


def proxy_chain(rho, sigma, depth=DEFAULT_DEPTH, recursion="corrected"):
    """Nested lower bounds on ``F(rho, sigma)``.

    Args:
        rho, sigma: density matrices (sigma may be sub-normalized).
        depth: number of truncation levels, 1 to 8.
        recursion: ``"corrected"`` (default) or ``"literal"``.

    Returns:
        ProxyChain whose ``L_n`` are non-decreasing and bounded by ``exact_F``
        for the corrected recursion.
    """
    return chain_from_spectrum(matcore.product_spectrum(rho, sigma), depth, recursion)


def _e2(lams):
    """Second elementary symmetric polynomial as a sum of non-negative terms."""
    lams = np.sort(np.asarray(lams, dtype=float))
    prefix = np.concatenate([[0.0], np.cumsum(lams)[:-1]])
    return float(np.sum(lams * prefix))


def miszczak_bound(rho, sigma):
    """Two-term lower bound ``tr(rho sigma) + sqrt(2 (tr(rho sigma)^2 - tr[(rho sigma)^2]))``.

    The bracket equals ``2 e_2(lam)`` and is evaluated as such, which avoids
    the cancellation of the moment form.
    """
    lams = matcore.product_spectrum(rho, sigma)
    f1 = float(np.sum(lams[::-1]))
    f2 = 2.0 * _e2(lams)
    return f1 + np.sqrt(2.0 * max(f2, 0.0))


def renyi_2n_aggregate(rho, ops, i, n, route="moment", ordering="standard"):
    """``tr[((1/N) sum_j rho O_i^dagger O_j rho O_j^dagger O_i)^n]``.

    The averaged operator is ``rho sigma_i`` with ``sigma_i`` the twisted
    mixture, so the moment route sums ``lam^n`` over the product spectrum;
    ``route="matrix"`` takes the trace of an explicit matrix power instead.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    m = matcore.as_array(rho)
    sigma = twisted_mixture(m, ops, i, ordering).matrix
    if route == "moment":
        return matcore.trace_power(matcore.product_spectrum(m, sigma), n)
    if route == "matrix":
        return float(np.real(np.trace(np.linalg.matrix_power(m @ sigma, int(n)))))
    raise ValueError(f"unknown route {route!r}")


def susceptibility_proxy_levels(rho, ops, depth=DEFAULT_DEPTH, translation_invariant=True,
                                recursion="corrected", check_symmetry=True):
    """All truncation levels ``1 .. depth`` of :func:`susceptibility_proxy` at once."""
    if check_symmetry:
        require_strong_symmetry(rho, ops)
    m = matcore.as_array(rho)
    ref = FidelityReference(m)
    sites = (ops.system.center,) if translation_invariant else range(ops.n_sites)
    total = np.zeros(depth)
    for i in sites:
        lams = ref.spectrum(twisted_mixture(m, ops, i).matrix)
        total += chain_from_spectrum(lams, depth, recursion).L_n
    return ops.n_sites * total if translation_invariant else total


def susceptibility_proxy(rho, ops, depth=DEFAULT_DEPTH, translation_invariant=True,
                         recursion="corrected", check_symmetry=True):
    """Polynomial lower bound on ``chi_F / eta``.

    ``N * L_depth(rho, twisted_mixture(rho, centre))`` by default; with
    ``translation_invariant=False`` the per-site truncations are summed.
    """
    levels = susceptibility_proxy_levels(rho, ops, depth, translation_invariant, recursion,
                                         check_symmetry)
    return float(levels[-1])
