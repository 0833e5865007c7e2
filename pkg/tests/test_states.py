import numpy as np
import pytest
from hypothesis import given, strategies as st

from fidsus.errors import DimensionCapExceeded, DimensionMismatch, InvalidState
from fidsus.observables import fidelity_correlator, linear_correlator
from fidsus.states import (ChargeOperatorSet, DensityMatrix, SystemSpec, build_bond_dephased,
                           build_fixed_point, build_model, check_strong_symmetry, load_state,
                           random_symmetric_state, save_state)

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_system_spec_cap_and_geometry():
    with pytest.raises(DimensionCapExceeded):
        SystemSpec(13, 2)
    assert SystemSpec(7, 3).dim == 2187
    s = SystemSpec(5, 2)
    assert s.center == 2
    assert s.bonds() == [(0, 1), (1, 2), (2, 3), (3, 4)]
    ring = SystemSpec(5, 2, boundary="periodic")
    assert (4, 0) in ring.bonds()
    assert ring.distance(0, 4) == 1 and s.distance(0, 4) == 4
    with pytest.raises(ValueError):
        SystemSpec(3, 1)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_operator_set_invariants(n):
    ops = ChargeOperatorSet.clock_shift(SystemSpec(3, n))
    u = ops.symmetry_unitary
    dim = u.shape[0]
    for i in range(3):
        o = ops.site_operator(i)
        assert np.max(np.abs(o.conj().T @ o - np.eye(dim))) < 1e-10
        assert ops.charged_condition_defect(i) < 1e-10
        assert np.max(np.abs(o @ u - ops.omega * u @ o)) < 1e-10
    # omega is a primitive n-th root of unity
    powers = [ops.omega ** k for k in range(1, n + 1)]
    assert abs(powers[-1] - 1) < 1e-12
    assert all(abs(w - 1) > 1e-6 for w in powers[:-1])
    assert ops.eta == (4 if n == 2 else 1)


def test_density_matrix_validation():
    with pytest.raises(InvalidState):
        DensityMatrix.from_array(np.diag([0.7, 0.7]))
    with pytest.raises(InvalidState):
        DensityMatrix.from_array(np.diag([1.1, -0.1]))
    rho = DensityMatrix.from_array(np.diag([1.0 + 5e-11, -5e-11]))
    assert rho.min_eigenvalue >= 0
    with pytest.raises(DimensionMismatch):
        DensityMatrix.from_array(np.eye(2) / 2, SystemSpec(2, 2))


def test_swssb_two_qubits_is_even_projector():
    rho, ops = build_fixed_point(SystemSpec(2, 2), "swssb")
    even = np.zeros((4, 4))
    plus = 0.5 * (np.eye(4) + np.kron(X, X)).real
    even += plus
    assert np.allclose(rho.matrix, even / 2)
    check = check_strong_symmetry(rho, np.kron(X, X))
    assert check.strong and check.phase == pytest.approx(1)


def test_src_three_qubits_is_plus_product():
    rho, ops = build_fixed_point(SystemSpec(3, 2), "src")
    plus = np.ones(2) / np.sqrt(2)
    psi = np.kron(np.kron(plus, plus), plus)
    assert np.allclose(rho.matrix, np.outer(psi, psi))
    assert check_strong_symmetry(rho, ops).phase == pytest.approx(1)


def test_src_qutrit_pair_commutes_with_shift():
    rho, ops = build_fixed_point(SystemSpec(2, 3), "src")
    u = ops.symmetry_unitary
    assert np.max(np.abs(u @ rho.matrix - rho.matrix)) < 1e-12


def test_ghz_two_qubits():
    rho, _ = build_fixed_point(SystemSpec(2, 2), "ghz")
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(rho.matrix, np.outer(psi, psi))
    check = check_strong_symmetry(rho, np.kron(X, X))
    assert check.strong and check.phase == pytest.approx(1)


def test_classical_mixture_is_only_weak():
    rho = np.diag([0.5, 0, 0, 0.5])
    check = check_strong_symmetry(rho, np.kron(X, X))
    assert not check.strong and check.weak and check.phase is None


def test_maximally_mixed_is_weak_but_not_strong(rng):
    # U (I/d) = U/d is a phase times I/d only for scalar U: the maximally
    # mixed state spans every charge sector.
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    u, _ = np.linalg.qr(g)
    check = check_strong_symmetry(np.eye(4) / 4, u)
    assert check.weak and not check.strong
    scalar = check_strong_symmetry(np.eye(4) / 4, np.exp(0.3j) * np.eye(4))
    assert scalar.strong and scalar.phase == pytest.approx(np.exp(0.3j))


def test_check_strong_symmetry_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        check_strong_symmetry(np.eye(4) / 4, np.eye(2))


def test_unsupported_kind():
    with pytest.raises(ValueError):
        build_fixed_point(SystemSpec(2, 2), "ising")


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("kind", ["src", "swssb", "ghz"])
def test_builders_are_valid_and_strongly_symmetric(n, kind):
    rho, ops = build_fixed_point(SystemSpec(3, n), kind)
    DensityMatrix.from_array(rho.matrix)
    check = check_strong_symmetry(rho, ops)
    assert check.strong and abs(abs(check.phase) - 1) < 1e-12 and check.weak


def test_bond_dephased_endpoints():
    system = SystemSpec(4, 2)
    src, _ = build_fixed_point(system, "src")
    sw, _ = build_fixed_point(system, "swssb")
    assert np.allclose(build_bond_dephased(system, 0.0)[0].matrix, src.matrix, atol=1e-14)
    assert np.max(np.abs(build_bond_dephased(system, 0.5)[0].matrix - sw.matrix)) < 1e-10


def test_bond_dephased_qutrit_endpoint():
    system = SystemSpec(3, 3)
    sw, _ = build_fixed_point(system, "swssb")
    assert np.max(np.abs(build_bond_dephased(system, 2 / 3)[0].matrix - sw.matrix)) < 1e-10


def test_bond_dephased_intermediate_correlator():
    rho, ops = build_bond_dephased(SystemSpec(4, 2), 0.25)
    assert check_strong_symmetry(rho, ops).strong
    f = fidelity_correlator(rho, ops, 2, 0)
    assert 0 < f < 1
    # the correlator of the bond-dephased family is (4q(1-q))^r
    assert f == pytest.approx(0.75 ** 2, abs=1e-10)


def test_bond_dephased_rejects_out_of_range():
    with pytest.raises(ValueError):
        build_bond_dephased(SystemSpec(3, 2), 0.6)
    with pytest.raises(ValueError):
        build_model(SystemSpec(3, 2), "bond_dephased")


def test_bond_dephased_monotone_in_q():
    system = SystemSpec(6, 2)
    values = []
    for q in np.linspace(0, 0.5, 6):
        rho, ops = build_bond_dephased(system, q)
        values.append(fidelity_correlator(rho, ops, 3, 0))
    assert np.all(np.diff(values) >= -1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_src_and_swssb_correlator_invariants(n):
    system = SystemSpec(4, n)
    src, ops = build_fixed_point(system, "src")
    sw, _ = build_fixed_point(system, "swssb")
    for i in range(4):
        for j in range(4):
            expected = 1.0 if i == j else 0.0
            assert abs(fidelity_correlator(src, ops, i, j) - expected) < 1e-10
            assert abs(fidelity_correlator(sw, ops, i, j) - 1.0) < 1e-10
            if i != j:
                assert abs(linear_correlator(sw, ops, i, j)) < 1e-10


def test_random_symmetric_state_sector(rng):
    for charge in (0, 1):
        rho, ops = random_symmetric_state(SystemSpec(3, 3), rng, charge=charge, rank=4)
        check = check_strong_symmetry(rho, ops)
        assert check.strong
        assert check.phase == pytest.approx(np.exp(2j * np.pi * charge / 3))
        assert np.linalg.matrix_rank(rho.matrix, tol=1e-10) == 4


def test_state_container_round_trip(tmp_path):
    rho, _ = build_bond_dephased(SystemSpec(3, 2), 0.2)
    path = tmp_path / "state.txt"
    save_state(path, rho)
    text = path.read_text().splitlines()
    assert text[0] == "dim 8" and text[1] == "system 3 2 open"
    back = load_state(path)
    assert np.array_equal(back.matrix, rho.matrix)
    assert back.system == rho.system


def test_state_container_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("size 2\n")
    with pytest.raises(ValueError):
        load_state(bad)
    bad.write_text("dim 2\n1 0\n0 0\n")
    with pytest.raises(ValueError):
        load_state(bad)


@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.integers(1, 4))
def test_property_random_states_strongly_symmetric(seed, n, n_sites):
    if n ** n_sites > 81:
        n_sites = 3
    rho, ops = random_symmetric_state(SystemSpec(n_sites, n), np.random.default_rng(seed))
    assert check_strong_symmetry(rho, ops).strong
    assert abs(np.trace(rho.matrix) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho.matrix).min() > -1e-12
