"""Bures geometry of states perturbed by the angle-parameterized dephasing channel."""

import numpy as np

from . import matcore
from .channels import PerturbationVector, apply_parameterized
from .fidelity import bures_distance_sq, sqrt_fidelity
from .observables import require_strong_symmetry

ANGLE_LADDER = (0.05, 0.02, 0.01)


def _vector(v, n_sites):
    v = v if isinstance(v, PerturbationVector) else PerturbationVector(v)
    if len(v) != n_sites:
        raise ValueError(f"perturbation vector has length {len(v)}, expected {n_sites}")
    return v


def perturbed_self_distance(rho, ops, theta, check_symmetry=True):
    """Exact ``D_b^2(E_theta[rho], rho)``; approaches ``|theta|^2`` for small angles."""
    if check_symmetry:
        require_strong_symmetry(rho, ops)
    theta = _vector(theta, ops.n_sites)
    m = matcore.as_array(rho)
    return bures_distance_sq(apply_parameterized(m, ops, theta), m)


def bures_inner_defining(rho, ops, theta, phi, check_symmetry=True):
    """Polarization combination of three Bures distances.

    ``g_B = [D^2(E_theta rho, rho) + D^2(rho, E_phi rho) - D^2(E_theta rho, E_phi rho)] / 2``
    """
    if check_symmetry:
        require_strong_symmetry(rho, ops)
    theta = _vector(theta, ops.n_sites)
    phi = _vector(phi, ops.n_sites)
    m = matcore.as_array(rho)
    a = apply_parameterized(m, ops, theta)
    b = apply_parameterized(m, ops, phi)
    return 0.5 * (bures_distance_sq(a, m) + bures_distance_sq(m, b) - bures_distance_sq(a, b))


def charged_mixture(rho, ops, weights):
    """Unnormalized ``sum_i w_i O_i rho O_i^dagger``; zero weights are skipped."""
    m = matcore.as_array(rho)
    acc = np.zeros_like(m)
    for i, w in enumerate(weights):
        if w != 0.0:
            acc += w * ops.conj(i, m)
    return acc


def bures_inner_second_order(rho, ops, theta, phi, check_symmetry=True):
    """``sqrt F(sum_i theta_i^2 O_i rho O_i^dagger, sum_j phi_j^2 O_j rho O_j^dagger)``.

    Both arguments are unnormalized; the result is homogeneous of degree one
    in each of ``theta`` and ``phi``.
    """
    if check_symmetry:
        require_strong_symmetry(rho, ops)
    theta = _vector(theta, ops.n_sites)
    phi = _vector(phi, ops.n_sites)
    a = charged_mixture(rho, ops, theta.array ** 2)
    b = charged_mixture(rho, ops, phi.array ** 2)
    if not np.any(a) or not np.any(b):
        return 0.0
    return sqrt_fidelity(a, b)


def subadditivity_gap(rho, ops, i, j, k, theta_i, phi_j, phi_k, metric="second_order",
                      check_symmetry=True):
    """``g(theta^i, phi^j) + g(theta^i, phi^k) - g(theta^i, phi^j + phi^k)``.

    The perturbations are single-site vectors. The gap is non-negative and
    vanishes when ``O_j rho O_j^dagger`` and ``O_k rho O_k^dagger`` are
    orthogonal.

    Args:
        metric: ``"second_order"`` (default) or ``"defining"``.

    Raises:
        ValueError: ``j == k`` or a non-positive amplitude.
    """
    if j == k:
        raise ValueError("subadditivity probe needs distinct sites j != k")
    if min(theta_i, phi_j, phi_k) <= 0:
        raise ValueError("amplitudes must be positive")
    if check_symmetry:
        require_strong_symmetry(rho, ops)
    g = {"second_order": bures_inner_second_order, "defining": bures_inner_defining}[metric]
    n = ops.n_sites
    t = PerturbationVector.single_site(n, i, theta_i)
    pj = PerturbationVector.single_site(n, j, phi_j)
    pk = PerturbationVector.single_site(n, k, phi_k)
    both = np.zeros(n)
    both[j], both[k] = phi_j, phi_k
    return (g(rho, ops, t, pj, check_symmetry=False) + g(rho, ops, t, pk, check_symmetry=False)
            - g(rho, ops, PerturbationVector(both), t, check_symmetry=False))


def effective_dimension(chi_F, n_sites):
    """``D_eff = N / chi_F``."""
    if chi_F <= 0:
        raise ValueError(f"effective dimension needs chi_F > 0, got {chi_F}")
    return n_sites / chi_F


def correlation_volume_estimate(n_sites, xi, spatial_dim=1, lattice_constant=1.0):
    """Heuristic ``N a^d / xi^d``, reported next to the exact ``D_eff`` without any asserted relation."""
    if not np.isfinite(xi):
        return 0.0
    if xi <= 0:
        return float(n_sites)
    return n_sites * (lattice_constant / xi) ** spatial_dim
