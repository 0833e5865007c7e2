"""Correlators, fidelity magnetization, fidelity susceptibility and fits.

Charge-twisted states use the ordering ``O_i^dagger O_j rho O_j^dagger O_i``
by default. ``ordering="conjugate"`` switches to
``O_i O_j^dagger rho O_j O_i^dagger``; the two agree for self-adjoint
(Z_2) operators and differ by charge conjugation otherwise.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import NoSignal, NotStronglySymmetric
from .fidelity import FidelityReference, fidelity
from .states import DensityMatrix, check_strong_symmetry
from .channels import apply_uniform

POSITIVITY_FLOOR = 1e-14
ORDERINGS = ("standard", "conjugate")


def _check_ordering(ordering):
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}, got {ordering!r}")


def twisted_state(rho, ops, i, j, ordering="standard"):
    """Raw array of the doubly conjugated state for the pair ``(i, j)``."""
    _check_ordering(ordering)
    m = matcore.as_array(rho)
    if ordering == "standard":
        return ops.twisted(i, j, m)
    ops._check_site(i)
    return ops.conj(i, ops.conj_dag(j, m))


def _system(rho, ops):
    return getattr(rho, "system", None) or ops.system


def fidelity_correlator(rho, ops, i, j, ordering="standard"):
    """``F(rho, O_i^dagger O_j rho O_j^dagger O_i)``; exactly 1 when ``i == j``."""
    ops._check_site(i)
    ops._check_site(j)
    if i == j:
        return 1.0
    return fidelity(rho, twisted_state(rho, ops, i, j, ordering))


def linear_correlator(rho, ops, i, j):
    """``tr(rho O_i^dagger O_j)``, computed as ``tr(O_j rho O_i^dagger)``."""
    ops._check_site(i)
    ops._check_site(j)
    m = matcore.as_array(rho)
    t = ops.apply_power(j, m, 1, "left")
    t = ops.apply_power(i, t, -1, "right")
    return complex(np.trace(t))


def _overlap(a, b):
    """``tr(a b)`` for Hermitian ``a`` and ``b``."""
    return float(np.real(np.vdot(a, b)))


def renyi_correlator(rho, ops, i, j, ordering="standard"):
    """Bare and purity-normalized Renyi-2 correlators.

    Returns:
        ``(bare, normalized)`` with ``bare = tr(rho sigma_ij)`` and
        ``normalized = bare / tr(rho^2)``.
    """
    m = matcore.as_array(rho)
    bare = _overlap(m, twisted_state(m, ops, i, j, ordering))
    return bare, bare / _overlap(m, m)


def twisted_mixture(rho, ops, i, ordering="standard"):
    """Uniform mixture ``(1/N) sum_j O_i^dagger O_j rho O_j^dagger O_i`` (``j = i`` included)."""
    ops._check_site(i)
    m = matcore.as_array(rho)
    n_sites = ops.n_sites
    acc = np.zeros_like(m)
    for j in range(n_sites):
        acc += m if j == i else twisted_state(m, ops, i, j, ordering)
    acc = matcore.hermitize(acc / n_sites)
    return DensityMatrix(acc, _system(rho, ops), abs(float(np.real(np.trace(acc))) - 1.0))


def fidelity_magnetization(rho, ops):
    """``M_F = (1/N) sum_i F(rho, O_i^dagger rho O_i)``."""
    m = matcore.as_array(rho)
    ref = FidelityReference(m)
    total = 0.0
    for i in range(ops.n_sites):
        total += ref.fidelity(ops.conj_dag(i, m))
    return total / ops.n_sites


@dataclass(frozen=True)
class CorrelatorRecord:
    i: int
    j: int
    fidelity_corr: float
    linear_corr: complex
    renyi2_bare: float
    renyi2_normalized: float
    r: float


def correlator_records(rho, ops, i=None, max_r=None, ordering="standard"):
    """Correlators between a reference site and the sites to its left.

    The reference defaults to the centre site ``floor(N/2)``, and the pairs
    are ``(i, i - r)`` for ``r = 0 .. min(i, max_r)``. ``max_r`` defaults to
    ``N // 2``, which keeps open-boundary effects out of fit windows.
    """
    system = ops.system
    i = system.center if i is None else i
    max_r = system.n_sites // 2 if max_r is None else max_r
    m = matcore.as_array(rho)
    ref = FidelityReference(m)
    purity = _overlap(m, m)
    out = []
    for r in range(0, min(i, max_r) + 1):
        j = i - r
        sigma = m if r == 0 else twisted_state(m, ops, i, j, ordering)
        f = 1.0 if r == 0 else ref.fidelity(sigma)
        bare = _overlap(m, sigma)
        out.append(CorrelatorRecord(i, j, f, linear_correlator(m, ops, i, j), bare,
                                    bare / purity, system.distance(i, j)))
    return out


@dataclass(frozen=True, eq=False)
class SusceptibilityResult:
    """Closed-form fidelity susceptibility with its two-sided bounds.

    ``lower_bound`` and ``upper_bound`` bracket ``chi_normalized``, i.e.
    ``chi_F / eta``.
    """

    chi_F: float
    chi_normalized: float
    eta: int
    per_j_fidelities: np.ndarray
    lower_bound: float
    upper_bound: float
    twisted_state_trace_check: float
    sites: tuple = ()
    site_terms: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def lower_slack(self):
        return self.chi_normalized - self.lower_bound

    @property
    def upper_slack(self):
        return self.upper_bound - self.chi_normalized


def require_strong_symmetry(rho, ops):
    check = check_strong_symmetry(rho, ops)
    if not check.strong:
        raise NotStronglySymmetric("state is not strongly symmetric under the charge symmetry")
    return check


def _site_terms(rho, ops, i, ordering, ref):
    m = matcore.as_array(rho)
    n_sites = ops.n_sites
    twisted = [m if j == i else twisted_state(m, ops, i, j, ordering) for j in range(n_sites)]
    per_j = np.array([1.0 if j == i else ref.fidelity(t) for j, t in enumerate(twisted)])
    mixture = matcore.hermitize(sum(twisted) / n_sites)
    return ref.fidelity(mixture), per_j, abs(float(np.real(np.trace(mixture))) - 1.0)


def susceptibility_closed(rho, ops, translation_invariant=True, ordering="standard",
                          check_symmetry=True):
    """Closed-form susceptibility ``eta * sum_i F(rho, twisted_mixture(rho, i))``.

    Args:
        rho: strongly symmetric state.
        ops: charge operators; ``ops.eta`` supplies the prefactor.
        translation_invariant: evaluate the centre site only and multiply by
            N. With ``False`` every site is evaluated and summed.
        ordering: operator ordering of the twisted states.
        check_symmetry: verify strong symmetry first.

    Returns:
        SusceptibilityResult. In per-site mode the bounds are the
        site-averaged per-site bounds, so they still bracket
        ``chi_normalized``.

    Raises:
        NotStronglySymmetric: the derivation behind the closed form needs it.
    """
    if check_symmetry:
        require_strong_symmetry(rho, ops)
    n_sites = ops.n_sites
    ref = FidelityReference(rho)
    sites = (ops.system.center,) if translation_invariant else tuple(range(n_sites))
    terms, lowers, uppers, defects, center_per_j = [], [], [], [], None
    for i in sites:
        f_mix, per_j, defect = _site_terms(rho, ops, i, ordering, ref)
        terms.append(f_mix)
        lowers.append(float(np.sum(per_j)))
        uppers.append(float(np.sum(np.sqrt(per_j))) ** 2)
        defects.append(defect)
        if i == ops.system.center:
            center_per_j = per_j
    terms = np.array(terms)
    if translation_invariant:
        chi_norm = n_sites * float(terms[0])
        lower, upper = lowers[0], uppers[0]
    else:
        chi_norm = float(np.sum(terms))
        lower = float(np.sum(lowers)) / n_sites
        upper = float(np.sum(uppers)) / n_sites
    return SusceptibilityResult(
        chi_F=ops.eta * chi_norm, chi_normalized=chi_norm, eta=ops.eta,
        per_j_fidelities=center_per_j, lower_bound=lower, upper_bound=upper,
        twisted_state_trace_check=max(defects), sites=sites, site_terms=terms)


def susceptibility_bounds(rho, ops, i=None, ordering="standard"):
    """``(sum_j F_j, (sum_j sqrt(F_j))^2)`` at site ``i`` (default the centre)."""
    require_strong_symmetry(rho, ops)
    i = ops.system.center if i is None else i
    _, per_j, _ = _site_terms(rho, ops, i, ordering, FidelityReference(rho))
    return float(np.sum(per_j)), float(np.sum(np.sqrt(per_j))) ** 2


ASYMPTOTIC_PN = 1e-3


@dataclass(frozen=True)
class NumericSusceptibility:
    """Finite-difference susceptibility at strength ``p``.

    ``asymptotic`` is False when ``p * N`` exceeds the small-strength regime;
    the value is still returned and ``warning`` says why it is suspect.
    """

    value: float
    p: float
    asymptotic: bool
    warning: str = ""

    def __float__(self):
        return self.value


def susceptibility_numeric(rho, ops, p):
    """``[M_F(E_p[rho]) - M_F(rho)] / p`` for the uniform dephasing channel ``E_p``.

    Raises:
        ValueError: ``p`` is not in ``(0, 1]``.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    message = ""
    asymptotic = p * ops.n_sites < ASYMPTOTIC_PN
    if not asymptotic:
        message = f"p*N = {p * ops.n_sites:.3g} is not small; the quotient is not asymptotic"
        warnings.warn(message, RuntimeWarning, stacklevel=2)
    m = matcore.as_array(rho)
    after = apply_uniform(m, ops, p)
    value = (fidelity_magnetization(after, ops) - fidelity_magnetization(m, ops)) / p
    return NumericSusceptibility(float(value), float(p), asymptotic, message)


@dataclass(frozen=True)
class DecayFit:
    """Log-linear fit of a correlator against distance.

    ``xi`` is set for exponential fits and ``gamma`` for algebraic ones.
    ``status`` is ``"ok"`` or ``"flat"``; a flat profile (no measurable decay)
    is reported with ``xi = inf`` or ``gamma = 0``.
    """

    model: str
    xi: float | None
    gamma: float | None
    r_window: tuple
    residual: float
    status: str = "ok"


def _distance_values(records):
    r, f = [], []
    for rec in records:
        if isinstance(rec, CorrelatorRecord):
            r.append(rec.r)
            f.append(rec.fidelity_corr)
        else:
            r.append(rec[0])
            f.append(rec[1])
    return np.asarray(r, dtype=float), np.asarray(f, dtype=float)


def fit_decay(records, model="exponential", r_window=None, min_r=1.0):
    """Fit ``F ~ exp(-r/xi)`` or ``F ~ r^(-gamma)`` by least squares in log space.

    Args:
        records: CorrelatorRecord objects or ``(r, F)`` pairs.
        model: ``"exponential"`` or ``"algebraic"``.
        r_window: optional inclusive ``(r_min, r_max)``.
        min_r: distances below this are ignored (``r = 0`` carries no decay
            information).

    Raises:
        NoSignal: every correlator in the window is below the positivity floor.
        ValueError: fewer than three usable distances.
    """
    if model not in ("exponential", "algebraic"):
        raise ValueError(f"unknown decay model {model!r}")
    r, f = _distance_values(records)
    keep = r >= min_r
    if r_window is not None:
        keep &= (r >= r_window[0]) & (r <= r_window[1])
    r, f = r[keep], f[keep]
    if r.size and np.all(f < POSITIVITY_FLOOR):
        raise NoSignal("all correlators in the window are below the positivity floor")
    pos = f >= POSITIVITY_FLOOR
    r, f = r[pos], f[pos]
    if np.unique(r).size < 3:
        raise ValueError("decay fit needs at least three distinct distances with signal")
    x = r if model == "exponential" else np.log(r)
    y = np.log(f)
    design = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    slope = float(coef[0])
    residual = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    window = (float(r.min()), float(r.max()))
    flat = slope > -1e-12
    if model == "exponential":
        xi = math.inf if flat else -1.0 / slope
        return DecayFit(model, xi, None, window, residual, "flat" if flat else "ok")
    gamma = 0.0 if flat else -slope
    return DecayFit(model, None, gamma, window, residual, "flat" if flat else "ok")


SSB_ALPHA = 0.9
SRC_ALPHA = 0.1


@dataclass(frozen=True)
class ScalingClass:
    alpha: float
    label: str
    intercept: float


def classify_scaling(points):
    """Exponent of ``chi_F ~ N^alpha`` from a log-log fit.

    Labels: ``"SSB-like"`` for ``alpha > 0.9``, ``"SRC-like"`` for
    ``alpha < 0.1`` and ``"intermediate"`` otherwise.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("scaling classification needs at least three system sizes")
    if np.any(pts <= 0):
        raise ValueError("system sizes and susceptibilities must be positive")
    alpha, intercept = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    if alpha > SSB_ALPHA:
        label = "SSB-like"
    elif alpha < SRC_ALPHA:
        label = "SRC-like"
    else:
        label = "intermediate"
    return ScalingClass(float(alpha), label, float(intercept))
