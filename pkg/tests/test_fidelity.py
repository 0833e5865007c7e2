import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import dense_sqrt_fidelity, random_density, random_pure
from fidsus.channels import apply_kraus, random_channel
from fidsus.errors import DimensionMismatch
from fidsus.fidelity import (FidelityReference, bures_distance_sq, fidelity, fidelity_product_route,
                             fidelity_sandwich_route, sqrt_fidelity)


def test_self_fidelity(rng):
    for dim in (2, 5, 9):
        rho = random_density(rng, dim)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)


def test_commuting_examples():
    assert fidelity(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(0.5, abs=1e-14)
    assert fidelity(np.diag([0.75, 0.25]), np.diag([0.25, 0.75])) == pytest.approx(0.75, abs=1e-14)


def test_orthogonal_pure_states():
    a, b = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert sqrt_fidelity(a, b) == 0.0
    assert bures_distance_sq(a, b) == pytest.approx(2.0)


def test_bures_examples(rng):
    rho = random_density(rng, 4)
    assert bures_distance_sq(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert bures_distance_sq(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(0.585786437626905, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        fidelity(np.eye(2) / 2, np.eye(3) / 3)


def test_block_additivity(rng):
    blocks = [(random_density(rng, 2), random_density(rng, 2)),
              (random_density(rng, 3), random_density(rng, 3))]
    lam, mu = np.array([0.3, 0.7]), np.array([0.6, 0.4])
    rho = np.zeros((5, 5), dtype=complex)
    sigma = np.zeros((5, 5), dtype=complex)
    rho[:2, :2], rho[2:, 2:] = lam[0] * blocks[0][0], lam[1] * blocks[1][0]
    sigma[:2, :2], sigma[2:, 2:] = mu[0] * blocks[0][1], mu[1] * blocks[1][1]
    expected = sum(np.sqrt(l * m) * dense_sqrt_fidelity(a, b)
                   for l, m, (a, b) in zip(lam, mu, blocks))
    assert abs(sqrt_fidelity(rho, sigma) - expected) < 1e-10


def test_sub_normalized_contract(rng):
    rho, sigma = random_density(rng, 4), random_density(rng, 4)
    assert sqrt_fidelity(rho, 0.25 * sigma) == pytest.approx(0.5 * sqrt_fidelity(rho, sigma), abs=1e-12)
    assert fidelity(0.5 * rho, 0.5 * rho) == pytest.approx(0.25, abs=1e-12)


def test_routes_agree_dim8(rng):
    for rank in (1, 3, 8):
        rho, sigma = random_density(rng, 8, rank), random_density(rng, 8)
        f = fidelity(rho, sigma)
        assert abs(np.sqrt(f) - dense_sqrt_fidelity(rho, sigma)) < 1e-10
        assert abs(f - fidelity_sandwich_route(rho, sigma)) < 1e-10
        assert abs(f - fidelity_product_route(rho, sigma)) < 1e-8


def test_pure_state_overlap(rng):
    a, b = random_pure(rng, 6), random_pure(rng, 6)
    overlap = np.real(np.trace(a @ b))
    assert fidelity(a, b) == pytest.approx(overlap, abs=1e-12)


def test_rank_deficient_hygiene():
    # a rank-1 rho against a rank-2 sigma: round-off directions must not add sqrt(eps) terms
    psi = np.array([1, 1, 0, 0]) / np.sqrt(2)
    rho = np.outer(psi, psi)
    sigma = np.diag([0.5, 0.5, 0, 0])
    assert fidelity(rho, sigma) == pytest.approx(0.5, abs=1e-15)


def test_reference_matches_function(rng):
    rho = random_density(rng, 6, 3)
    ref = FidelityReference(rho)
    for _ in range(5):
        sigma = random_density(rng, 6)
        assert ref.fidelity(sigma) == pytest.approx(fidelity(rho, sigma), abs=1e-14)


@st.composite
def pair(draw, max_dim=16):
    seed = draw(st.integers(0, 2**32 - 1))
    dim = draw(st.sampled_from([2, 4, 8, max_dim]))
    rng = np.random.default_rng(seed)
    ranks = draw(st.tuples(st.integers(1, dim), st.integers(1, dim)))
    return rng, random_density(rng, dim, ranks[0]), random_density(rng, dim, ranks[1])


@given(pair())
def test_property_range_and_symmetry(data):
    _, rho, sigma = data
    f = fidelity(rho, sigma)
    assert 0.0 <= f <= 1.0
    assert abs(f - fidelity(sigma, rho)) < 1e-10
    assert 0.0 <= bures_distance_sq(rho, sigma) <= 2.0


@given(pair(), st.integers(2, 4))
def test_property_concavity(data, k):
    rng, rho, _ = data
    dim = rho.shape[0]
    sigmas = [random_density(rng, dim) for _ in range(k)]
    p = rng.dirichlet(np.ones(k))
    mix = sum(w * s for w, s in zip(p, sigmas))
    assert fidelity(rho, mix) >= sum(w * fidelity(rho, s) for w, s in zip(p, sigmas)) - 1e-9


@given(pair(), st.integers(2, 4))
def test_property_joint_concavity(data, k):
    rng, *_ = data
    dim = data[1].shape[0]
    rhos = [random_density(rng, dim) for _ in range(k)]
    sigmas = [random_density(rng, dim) for _ in range(k)]
    p = rng.dirichlet(np.ones(k))
    lhs = sqrt_fidelity(sum(w * r for w, r in zip(p, rhos)), sum(w * s for w, s in zip(p, sigmas)))
    assert lhs >= sum(w * sqrt_fidelity(r, s) for w, r, s in zip(p, rhos, sigmas)) - 1e-9


@given(pair(max_dim=4), pair(max_dim=4))
def test_property_multiplicativity(a, b):
    _, r1, s1 = a
    _, r2, s2 = b
    prod = fidelity(np.kron(r1, r2), np.kron(s1, s2))
    assert abs(prod - fidelity(r1, s1) * fidelity(r2, s2)) < 1e-9


@given(pair(), st.integers(1, 4), st.integers(0, 1000))
def test_property_data_processing(data, n_kraus, seed):
    _, rho, sigma = data
    kraus = random_channel(rho.shape[0], n_kraus, seed)
    assert fidelity(apply_kraus(kraus, rho), apply_kraus(kraus, sigma)) >= fidelity(rho, sigma) - 1e-9
