"""Charge-dephasing channels and random CPTP maps."""

from dataclasses import dataclass

import numpy as np

from . import matcore
from .states import DensityMatrix


def _like(rho, m):
    if isinstance(rho, DensityMatrix):
        m = matcore.hermitize(m)
        return DensityMatrix(m, rho.system, abs(float(np.real(np.trace(m))) - 1.0))
    return m


@dataclass(frozen=True)
class PerturbationVector:
    """Per-site rotation angles, each in ``[0, pi/2]``."""

    components: tuple

    def __init__(self, components):
        comps = tuple(float(x) for x in np.ravel(components))
        if any(not 0.0 <= x <= np.pi / 2 + 1e-15 for x in comps):
            raise ValueError("perturbation angles must lie in [0, pi/2]")
        object.__setattr__(self, "components", comps)

    def __len__(self):
        return len(self.components)

    @property
    def array(self):
        return np.array(self.components)

    @property
    def norm(self):
        return float(np.linalg.norm(self.components))

    def scaled(self, c):
        return PerturbationVector(self.array * c)

    @classmethod
    def single_site(cls, n_sites, site, angle):
        v = np.zeros(n_sites)
        v[site] = angle
        return cls(v)


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"channel strength p={p} outside [0, 1]")


def apply_uniform(rho, ops, p):
    """Compose ``E_j[r] = (1-p) r + p O_j r O_j^dagger`` over sites in ascending order."""
    _check_p(p)
    m = matcore.as_array(rho)
    if p == 0.0:
        return _like(rho, m.copy())
    for j in range(ops.n_sites):
        m = (1.0 - p) * m + p * ops.conj(j, m)
    return _like(rho, m)


def _angles(theta, n_sites):
    if not isinstance(theta, PerturbationVector):
        theta = PerturbationVector(theta)
    if len(theta) != n_sites:
        raise ValueError(f"perturbation vector has length {len(theta)}, expected {n_sites}")
    return theta.array


def apply_parameterized(rho, ops, theta):
    """Compose ``E_j[r] = cos^2(t_j) r + sin^2(t_j) O_j r O_j^dagger``; zero angles are skipped."""
    angles = _angles(theta, ops.n_sites)
    m = matcore.as_array(rho)
    for j, t in enumerate(angles):
        if t == 0.0:
            continue
        c2, s2 = np.cos(t) ** 2, np.sin(t) ** 2
        m = c2 * m + s2 * ops.conj(j, m)
    return _like(rho, m)


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Either the uniform channel of strength ``p`` or the angle-parameterized one."""

    operator_set: object
    mode: str = "uniform"
    p: float = 0.0
    theta: PerturbationVector | None = None

    def __post_init__(self):
        if self.mode == "uniform":
            _check_p(self.p)
        elif self.mode == "parameterized":
            if self.theta is None:
                raise ValueError("parameterized mode needs theta")
        else:
            raise ValueError(f"unknown channel mode {self.mode!r}")

    def __call__(self, rho):
        if self.mode == "uniform":
            return apply_uniform(rho, self.operator_set, self.p)
        return apply_parameterized(rho, self.operator_set, self.theta)


def random_channel(dim, n_kraus, seed):
    """Kraus operators of a random CPTP map on ``dim``-dimensional states.

    A complex Gaussian ``(n_kraus*dim) x dim`` matrix is orthonormalized into
    an isometry whose row blocks are the Kraus operators, so
    ``sum_k K_k^dagger K_k = I`` holds to machine precision. With
    ``n_kraus == 1`` the single operator is a Haar-random unitary.
    """
    if n_kraus < 1:
        raise ValueError("n_kraus must be at least 1")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n_kraus * dim, dim)) + 1j * rng.normal(size=(n_kraus * dim, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return [q[k * dim:(k + 1) * dim] for k in range(n_kraus)]


def apply_kraus(kraus, rho):
    m = matcore.as_array(rho)
    out = sum(k @ m @ k.conj().T for k in kraus)
    return _like(rho, out)


def kraus_completeness_defect(kraus):
    dim = kraus[0].shape[1]
    total = sum(k.conj().T @ k for k in kraus)
    return float(np.max(np.abs(total - np.eye(dim))))
