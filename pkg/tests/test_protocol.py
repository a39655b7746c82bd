import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvergo import ergo, protocol
from nvergo.protocol import EnergyMeasurementConfig, estimate_mean_energy
from nvergo.qmath import (
    DimensionMismatch,
    HamiltonianSpec,
    projector,
    qubit_hamiltonian,
    random_density_matrix,
)

EPS = 1.05
H = qubit_hamiltonian(EPS)
R2 = math.sqrt(2)
RHO_S = np.array([[2 / 3, R2 / 3], [R2 / 3, 1 / 3]], dtype=complex)


def test_joint_state_of_ground_state():
    joint = protocol.build_joint_state(projector([0, 1]))
    # ancilla coherence 1/2 on the |g> block
    assert math.isclose(joint[1, 3].real, 0.5)
    assert math.isclose(np.trace(joint).real, 1.0)


def test_joint_state_explicit_form():
    joint = protocol.build_joint_state(RHO_S)
    assert np.allclose(joint, 0.5 * np.block([[RHO_S, RHO_S], [RHO_S, RHO_S]]))


def test_conditional_evolve_zero_time():
    joint = protocol.build_joint_state(RHO_S)
    assert np.allclose(protocol.conditional_evolve(joint, H, 0.0), joint)


def test_conditional_evolve_block_form():
    tau = 0.5
    u = np.diag([np.exp(-1j * EPS * tau), 1.0])
    out = protocol.conditional_evolve(protocol.build_joint_state(RHO_S), H, tau)
    expected = 0.5 * np.block([[RHO_S, RHO_S @ u.conj().T], [u @ RHO_S, u @ RHO_S @ u.conj().T]])
    assert np.allclose(out, expected, atol=1e-15)


def test_conditional_evolve_shape_error():
    with pytest.raises(DimensionMismatch):
        protocol.conditional_evolve(np.eye(6) / 6, H, 0.5)


def test_ancilla_offdiagonal_values():
    joint = protocol.build_joint_state(RHO_S)
    assert cmath.isclose(protocol.ancilla_offdiagonal(joint), 1.0)
    excited = protocol.conditional_evolve(protocol.build_joint_state(projector([1, 0])), H, 0.5)
    assert cmath.isclose(protocol.ancilla_offdiagonal(excited), cmath.exp(0.525j), abs_tol=1e-15)
    mixed = protocol.conditional_evolve(protocol.build_joint_state(np.eye(2) / 2), H, 0.5)
    assert cmath.isclose(protocol.ancilla_offdiagonal(mixed), (cmath.exp(0.525j) + 1) / 2, abs_tol=1e-15)


def test_estimator_examples():
    raw, norm = estimate_mean_energy(projector([1, 0]), H)
    assert math.isclose(raw, math.sin(0.525) / 0.5, rel_tol=1e-14)
    assert math.isclose(raw, 1.00242600934760, rel_tol=1e-12)
    assert math.isclose(norm, 1.0, rel_tol=1e-14)
    assert math.isclose(estimate_mean_energy(np.eye(2) / 2, H)[1], 0.5, rel_tol=1e-14)
    assert math.isclose(estimate_mean_energy(RHO_S, H)[1], 2 / 3, rel_tol=1e-14)


def test_unnormalized_mode():
    raw, norm = estimate_mean_energy(RHO_S, H, EnergyMeasurementConfig(normalize=False))
    assert math.isclose(norm, raw / EPS)


def test_config_validation():
    with pytest.raises(ValueError, match="tau must be > 0"):
        EnergyMeasurementConfig(tau=-0.1)
    with pytest.raises(ValueError):
        estimate_mean_energy(RHO_S, H, EnergyMeasurementConfig(tau=3.0))


def test_degenerate_reference():
    cfg = EnergyMeasurementConfig(reference_state=projector([0, 1]))
    with pytest.raises(protocol.DegenerateReference):
        estimate_mean_energy(RHO_S, H, cfg)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
def test_normalized_exact_for_qubits(seed, frac):
    rho = random_density_matrix(2, np.random.default_rng(seed))
    tau = frac * math.pi / EPS
    _, norm = estimate_mean_energy(rho, H, EnergyMeasurementConfig(tau=tau))
    assert abs(norm - rho[0, 0].real) < 1e-12
    assert abs(norm - ergo.mean_energy(rho, H) / EPS) < 1e-12


def test_small_tau_bound():
    rng = np.random.default_rng(2)
    for tau in np.linspace(0.01, 0.5, 25):
        rho = random_density_matrix(2, rng)
        raw, _ = estimate_mean_energy(rho, H, EnergyMeasurementConfig(tau=tau))
        exact = ergo.mean_energy(rho, H)
        assert abs(raw - exact) <= exact * (EPS * tau) ** 2 / 6 + 1e-15


def test_qutrit_quadratic_convergence():
    rng = np.random.default_rng(5)
    h = HamiltonianSpec.diagonal([0.0, 0.6, 1.4])
    rho = random_density_matrix(3, rng)
    exact = ergo.mean_energy(rho, h)
    taus = np.array([0.2, 0.1, 0.05])
    errs = [abs(estimate_mean_energy(rho, h, EnergyMeasurementConfig(tau=t))[0] - exact) / exact for t in taus]
    slopes = np.diff(np.log(errs)) / np.diff(np.log(taus))
    assert np.allclose(slopes, 2.0, atol=0.05)
