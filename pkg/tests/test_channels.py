import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_density
from fidsus.channels import (ChannelSpec, PerturbationVector, apply_kraus, apply_parameterized,
                             apply_uniform, kraus_completeness_defect, random_channel)
from fidsus.fidelity import fidelity
from fidsus.states import (DensityMatrix, SystemSpec, build_bond_dephased, build_fixed_point,
                           check_strong_symmetry, random_symmetric_state)


@pytest.fixture
def swssb3():
    return build_fixed_point(SystemSpec(3, 2), "swssb")


def test_perturbation_vector_validation():
    v = PerturbationVector([0.1, 0.0, np.pi / 2])
    assert len(v) == 3 and v.norm == pytest.approx(np.hypot(0.1, np.pi / 2))
    assert np.allclose(v.scaled(0.5).array, [0.05, 0, np.pi / 4])
    with pytest.raises(ValueError):
        PerturbationVector([-0.1])
    with pytest.raises(ValueError):
        PerturbationVector([2.0])
    assert np.array_equal(PerturbationVector.single_site(4, 2, 0.3).array, [0, 0, 0.3, 0])


def test_uniform_p_zero_is_identity(swssb3):
    rho, ops = swssb3
    assert np.array_equal(apply_uniform(rho, ops, 0.0).matrix, rho.matrix)


def test_uniform_p_one_applies_every_operator(rng):
    rho, ops = random_symmetric_state(SystemSpec(3, 3), rng)
    m = rho.matrix
    for j in range(3):
        m = ops.conj(j, m)
    assert np.max(np.abs(apply_uniform(rho, ops, 1.0).matrix - m)) < 1e-13


def test_uniform_single_qubit_example():
    ops = build_fixed_point(SystemSpec(1, 2), "src")[1]
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    out = apply_uniform(np.outer(plus, plus), ops, 0.3)
    assert np.allclose(out, 0.7 * np.outer(plus, plus) + 0.3 * np.outer(minus, minus))


def test_uniform_rejects_bad_p(swssb3):
    rho, ops = swssb3
    for p in (-0.1, 1.5):
        with pytest.raises(ValueError):
            apply_uniform(rho, ops, p)


def test_parameterized_examples(swssb3):
    rho, ops = swssb3
    assert np.array_equal(apply_parameterized(rho, ops, [0, 0, 0]).matrix, rho.matrix)
    rho, ops = build_fixed_point(SystemSpec(3, 2), "src")
    out = apply_parameterized(rho, ops, [0, np.pi / 2, 0])
    assert np.max(np.abs(out.matrix - ops.conj(1, rho.matrix))) < 1e-15
    with pytest.raises(ValueError):
        apply_parameterized(rho, ops, [0.1, 0.1])


def test_parameterized_matches_uniform(rng):
    rho, ops = random_symmetric_state(SystemSpec(3, 3), rng)
    p = 0.137
    theta = np.full(3, np.arcsin(np.sqrt(p)))
    diff = apply_parameterized(rho, ops, theta).matrix - apply_uniform(rho, ops, p).matrix
    assert np.max(np.abs(diff)) < 1e-12


def test_channel_spec_dispatch(swssb3):
    rho, ops = swssb3
    assert np.allclose(ChannelSpec(ops, "uniform", p=0.2)(rho).matrix, apply_uniform(rho, ops, 0.2).matrix)
    theta = PerturbationVector([0.1, 0.2, 0.3])
    assert np.allclose(ChannelSpec(ops, "parameterized", theta=theta)(rho).matrix,
                       apply_parameterized(rho, ops, theta).matrix)
    with pytest.raises(ValueError):
        ChannelSpec(ops, "parameterized")
    with pytest.raises(ValueError):
        ChannelSpec(ops, "lindblad")
    with pytest.raises(ValueError):
        ChannelSpec(ops, "uniform", p=2.0)


def test_composition_order_irrelevant(rng):
    rho, ops = random_symmetric_state(SystemSpec(3, 3), rng)
    p = 0.21
    results = []
    for order in itertools.permutations(range(3)):
        m = rho.matrix
        for j in order:
            m = (1 - p) * m + p * ops.conj(j, m)
        results.append(m)
    for m in results[1:]:
        assert np.max(np.abs(m - results[0])) < 1e-12


def test_trace_preservation(rng):
    rho, ops = build_bond_dephased(SystemSpec(4, 2), 0.3)
    for out in (apply_uniform(rho, ops, 0.4), apply_parameterized(rho, ops, [0.3, 0.1, 0.0, 1.2])):
        assert abs(np.trace(out.matrix) - 1) < 1e-12
        assert out.trace_defect < 1e-12
    kraus = random_channel(8, 3, seed=4)
    assert abs(np.trace(apply_kraus(kraus, random_density(rng, 8))) - 1) < 1e-12


def test_dephasing_breaks_strong_keeps_weak(rng):
    rho, ops = random_symmetric_state(SystemSpec(3, 2), rng)
    out = apply_uniform(rho, ops, 0.1)
    check = check_strong_symmetry(out, ops)
    assert not check.strong and check.weak


def test_random_channel_completeness_and_determinism():
    for n_kraus in (1, 2, 5):
        kraus = random_channel(6, n_kraus, seed=11)
        assert len(kraus) == n_kraus
        assert kraus_completeness_defect(kraus) < 1e-10
    a, b = random_channel(4, 3, seed=2), random_channel(4, 3, seed=2)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        random_channel(4, 0, seed=0)


def test_single_kraus_is_unitary_and_preserves_fidelity(rng):
    (u,) = random_channel(5, 1, seed=8)
    assert np.max(np.abs(u.conj().T @ u - np.eye(5))) < 1e-12
    rho, sigma = random_density(rng, 5), random_density(rng, 5)
    f = fidelity(rho, sigma)
    assert fidelity(u @ rho @ u.conj().T, u @ sigma @ u.conj().T) == pytest.approx(f, abs=1e-10)


def test_data_processing_dim8(rng):
    kraus = random_channel(8, 3, seed=5)
    for _ in range(20):
        rho, sigma = random_density(rng, 8), random_density(rng, 8)
        assert fidelity(apply_kraus(kraus, rho), apply_kraus(kraus, sigma)) >= fidelity(rho, sigma) - 1e-9


def test_apply_returns_density_matrix_when_given_one(swssb3):
    rho, ops = swssb3
    assert isinstance(apply_uniform(rho, ops, 0.1), DensityMatrix)
    assert isinstance(apply_uniform(rho.matrix, ops, 0.1), np.ndarray)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_property_uniform_channel_output_valid(seed, p):
    rho, ops = random_symmetric_state(SystemSpec(2, 3), np.random.default_rng(seed))
    out = apply_uniform(rho, ops, p).matrix
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.linalg.eigvalsh(out).min() > -1e-12
    assert check_strong_symmetry(out, ops).weak
