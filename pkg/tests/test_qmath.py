import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvergo import qmath
from nvergo.qmath import (
    DimensionMismatch,
    HamiltonianSpec,
    InvalidState,
    NonHermitian,
    check_density_matrix,
    dag,
    gate_fidelity,
    herm_eig,
    matrix_exp,
    partial_trace,
    projector,
    random_density_matrix,
    random_hermitian,
    random_unitary,
    relative_entropy,
    state_fidelity,
    tensor_product,
    trace_distance,
    von_neumann_entropy,
)

from .oracles import binary_entropy, taylor_exp

seeds = st.integers(0, 2**32 - 1)


def test_herm_eig_diagonal():
    vals, vecs = herm_eig(np.diag([0.0, 1.0]))
    assert np.allclose(vals, [0, 1])
    assert np.allclose(np.abs(vecs), np.eye(2))


def test_herm_eig_pauli_x():
    vals, _ = herm_eig(np.array([[0, 1], [1, 0]]))
    assert np.allclose(vals, [-1, 1])


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        herm_eig(np.array([[0, 1], [0, 0]]))


def test_herm_eig_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        herm_eig(np.zeros((2, 3)))


@given(seeds, st.integers(1, 9))
def test_eig_round_trip(seed, d):
    m = random_hermitian(d, np.random.default_rng(seed))
    vals, vecs = herm_eig(m)
    assert np.all(np.diff(vals) >= 0)
    assert np.max(np.abs((vecs * vals) @ dag(vecs) - m)) < 1e-10


def test_matrix_exp_zero_scale():
    m = random_hermitian(3, np.random.default_rng(0))
    assert np.allclose(matrix_exp(m, 0.0), np.eye(3))


def test_matrix_exp_scalar_phase():
    u = matrix_exp(np.diag([1.05, 0.0]), -1j * 0.5)
    assert np.allclose(u, np.diag([np.exp(-0.525j), 1.0]), atol=1e-15)


@given(seeds, st.integers(1, 6), st.floats(0.0, 5.0))
def test_exp_unitary_and_matches_series(seed, d, t):
    h = random_hermitian(d, np.random.default_rng(seed))
    u = matrix_exp(h, -1j * t)
    assert np.max(np.abs(dag(u) @ u - np.eye(d))) < 1e-12
    assert np.max(np.abs(u - taylor_exp(-1j * t * h))) < 1e-9


def test_matrix_exp_non_hermitian_matches_series(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(matrix_exp(m, 0.3), taylor_exp(0.3 * m), atol=1e-10)


def test_tensor_product_identity_and_projector():
    assert np.allclose(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    out = tensor_product(np.diag([1, 0]), np.diag([0.3, 0.7]))
    assert np.allclose(out, np.diag([0.3, 0.7, 0, 0]))


def test_partial_trace_product_state(rng):
    a = random_density_matrix(2, rng)
    b = random_density_matrix(3, rng)
    joint = tensor_product(a, b)
    assert np.max(np.abs(partial_trace(joint, (2, 3), keep=0) - a)) < 1e-12
    assert np.max(np.abs(partial_trace(joint, (2, 3), keep=1) - b)) < 1e-12


def test_partial_trace_bell_state():
    bell = projector([1, 0, 0, 1])
    for keep in (0, 1):
        assert np.allclose(partial_trace(bell, (2, 2), keep), np.eye(2) / 2)


def test_partial_trace_errors():
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(4) / 4, (2, 3), keep=0)
    with pytest.raises(ValueError):
        partial_trace(np.eye(4) / 4, (2, 2), keep=2)


def test_partial_trace_of_protocol_joint_state():
    # explicit ancilla block [[rho, rho U^dag], [U rho, rho]] / 2
    rho = np.array([[2 / 3, math.sqrt(2) / 3], [math.sqrt(2) / 3, 1 / 3]])
    u = np.diag([np.exp(-0.525j), 1.0])
    joint = 0.5 * np.block([[rho, rho @ dag(u)], [u @ rho, u @ rho @ dag(u)]])
    anc = partial_trace(joint, (2, 2), keep=0)
    expected_off = 0.5 * (2 / 3 * np.exp(0.525j) + 1 / 3)
    assert np.allclose(anc, [[0.5, expected_off], [np.conj(expected_off), 0.5]], atol=1e-14)


@given(seeds)
def test_partial_trace_preserves_trace_and_positivity(seed):
    rng = np.random.default_rng(seed)
    joint = random_density_matrix(6, rng, rank=int(rng.integers(1, 7)))
    for keep in (0, 1):
        red = partial_trace(joint, (2, 3), keep)
        assert abs(np.trace(red) - 1) < 1e-12
        assert np.linalg.eigvalsh(red)[0] > -1e-12


def test_entropy_values():
    assert abs(von_neumann_entropy(projector([1, 1j]))) < 1e-12
    assert math.isclose(von_neumann_entropy(np.eye(2) / 2), math.log(2), rel_tol=1e-12)
    assert math.isclose(von_neumann_entropy(np.diag([2 / 3, 1 / 3])), 0.636514168294813, rel_tol=1e-12)


@given(st.floats(0.0, 1.0))
def test_entropy_matches_binary_formula(p):
    assert math.isclose(von_neumann_entropy(np.diag([p, 1 - p])), binary_entropy(p), abs_tol=1e-12)


def test_nats_to_bits():
    assert math.isclose(qmath.nats_to_bits(math.log(2)), 1.0)


def test_relative_entropy_values():
    rho = np.diag([0.3, 0.7])
    assert relative_entropy(rho, rho) < 1e-12
    pure = np.array([[2 / 3, math.sqrt(2) / 3], [math.sqrt(2) / 3, 1 / 3]])
    assert math.isclose(relative_entropy(pure, np.diag([2 / 3, 1 / 3])), 0.636514168294813, rel_tol=1e-10)
    assert relative_entropy(np.diag([1, 0]), np.diag([0, 1])) == math.inf


def test_klein_inequality_bulk():
    rng = np.random.default_rng(7)
    worst = min(
        relative_entropy(random_density_matrix(3, rng), random_density_matrix(3, rng)) for _ in range(10_000)
    )
    assert worst >= 0.0


def test_state_fidelity_cases():
    rho = random_density_matrix(3, np.random.default_rng(3))
    assert math.isclose(state_fidelity(rho, rho), 1.0, abs_tol=1e-10)
    assert state_fidelity(projector([1, 0]), projector([0, 1])) < 1e-14


@given(seeds)
def test_state_fidelity_pure_overlap(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    b = rng.normal(size=3) + 1j * rng.normal(size=3)
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    f = state_fidelity(projector(a), projector(b))
    assert 0.0 <= f <= 1.0
    assert math.isclose(f, abs(np.vdot(a, b)) ** 2, abs_tol=1e-7)


def test_trace_distance_orthogonal():
    assert math.isclose(trace_distance(projector([1, 0]), projector([0, 1])), 1.0)


def test_check_density_matrix():
    check_density_matrix(np.eye(2) / 2)
    with pytest.raises(InvalidState):
        check_density_matrix(np.diag([0.6, 0.6]))
    with pytest.raises(InvalidState):
        check_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidState):
        check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))


def test_gate_fidelity_cases(rng):
    u = random_unitary(4, rng)
    assert math.isclose(gate_fidelity(u, u), 1.0)
    assert math.isclose(gate_fidelity(np.exp(0.7j) * u, u), 1.0)
    z = tensor_product(np.diag([1, -1]), np.eye(2))
    assert gate_fidelity(u @ z, u) < 1e-28


def test_random_unitary_is_unitary(rng):
    us = random_unitary(3, rng, size=50)
    assert np.allclose(dag(us) @ us, np.eye(3), atol=1e-12)


def test_hamiltonian_spec_sorts_energies():
    h = HamiltonianSpec.diagonal([2.0, 0.0, 1.0])
    assert np.allclose(h.energies, [0, 1, 2])
    assert h.span == 2.0
    rho = np.diag([0.2, 0.3, 0.5])
    assert np.allclose(np.diag(h.to_energy_basis(rho)), [0.3, 0.5, 0.2])
    assert np.allclose(h.from_energy_basis(h.to_energy_basis(rho)), rho)


def test_hamiltonian_from_matrix(rng):
    m = random_hermitian(3, rng)
    h = HamiltonianSpec.from_matrix(m)
    assert np.allclose(h.matrix, m)
    assert np.allclose(h.to_energy_basis(m), np.diag(h.energies), atol=1e-12)
