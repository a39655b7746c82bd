"""Ergotropy, passive states and the incoherent/coherent split.

Energies are stored ascending (see :class:`~nvergo.qmath.HamiltonianSpec`);
the passive ordering pairs the largest population with the lowest energy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .qmath import (
    DimensionMismatch,
    HamiltonianSpec,
    dag,
    relative_entropy,
    von_neumann_entropy,
)


@dataclass(frozen=True)
class PassiveDecomposition:
    passive_state: np.ndarray
    extraction_unitary: np.ndarray
    ergotropy: float


@dataclass(frozen=True)
class ErgotropyReport:
    total: float
    incoherent: float
    coherent: float
    coherence_nats: float
    mean_energy: float

    @property
    def additivity_residual(self) -> float:
        return self.incoherent + self.coherent - self.total

    def normalized(self, scale: float) -> "ErgotropyReport":
        return ErgotropyReport(
            self.total / scale,
            self.incoherent / scale,
            self.coherent / scale,
            self.coherence_nats,
            self.mean_energy / scale,
        )


def _check(rho, h: HamiltonianSpec) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (h.dim, h.dim):
        raise DimensionMismatch(f"state of shape {rho.shape} vs {h.dim}-level Hamiltonian")
    return rho


def mean_energy(rho, h: HamiltonianSpec) -> float:
    rho = _check(rho, h)
    return float(np.real(np.trace(rho @ h.matrix)))


def populations(rho, h: HamiltonianSpec) -> np.ndarray:
    """Occupations of the energy eigenstates, ascending-energy order."""
    rho = _check(rho, h)
    return np.real(np.einsum("ji,jk,ki->i", h.eigenvectors.conj(), rho, h.eigenvectors))


def dephase(rho, h: HamiltonianSpec) -> np.ndarray:
    p = populations(rho, h)
    return h.from_energy_basis(np.diag(p).astype(complex))


def coherence(rho, h: HamiltonianSpec) -> float:
    """Relative-entropy coherence S(dephased) - S(rho), in nats."""
    rho = _check(rho, h)
    return max(0.0, von_neumann_entropy(dephase(rho, h)) - von_neumann_entropy(rho))


def _descending_order(values: np.ndarray) -> np.ndarray:
    # stable on (value, original index)
    return np.array(sorted(range(len(values)), key=lambda i: (-values[i], i)))


def passive_decomposition(rho, h: HamiltonianSpec) -> PassiveDecomposition:
    rho = _check(rho, h)
    vals, vecs = np.linalg.eigh(0.5 * (rho + dag(rho)))
    order = _descending_order(vals)
    # |eps_k ascending><r_k descending|
    u = h.eigenvectors @ dag(vecs[:, order])
    passive = u @ rho @ dag(u)
    passive = 0.5 * (passive + dag(passive))
    erg = mean_energy(rho, h) - mean_energy(passive, h)
    return PassiveDecomposition(passive, u, max(erg, 0.0))


def ergotropy(rho, h: HamiltonianSpec) -> float:
    return passive_decomposition(rho, h).ergotropy


def passive_state(rho, h: HamiltonianSpec) -> np.ndarray:
    return passive_decomposition(rho, h).passive_state


def _permutation_parity(perm) -> int:
    perm = list(perm)
    parity = 0
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            parity ^= 1
    return parity


def _permutation_unitary(h: HamiltonianSpec, source: np.ndarray) -> np.ndarray:
    """Sum_j s_j |eps_j><eps_source[j]| with one sign flipped for odd permutations."""
    signs = np.ones(h.dim)
    if _permutation_parity(source):
        signs[0] = -1.0
    vecs = h.eigenvectors
    return (vecs * signs) @ dag(vecs[:, source])


def optimal_permutation(rho, h: HamiltonianSpec) -> tuple[np.ndarray, np.ndarray]:
    """Coherence-preserving extraction ``V_pi`` and the resulting state.

    ``V_pi`` maps the energy eigenstate with the j-th largest population onto
    the j-th lowest energy level. Odd permutations carry a sign on their
    ground-state entry, so the qubit swap is ``|e><g| - |g><e|``.
    """
    rho = _check(rho, h)
    source = _descending_order(populations(rho, h))
    v = _permutation_unitary(h, source)
    sigma = v @ rho @ dag(v)
    return v, 0.5 * (sigma + dag(sigma))


def incoherent_ergotropy(rho, h: HamiltonianSpec) -> float:
    _, sigma = optimal_permutation(rho, h)
    return mean_energy(rho, h) - mean_energy(sigma, h)


def incoherent_ergotropy_exhaustive(rho, h: HamiltonianSpec) -> float:
    """Best work over all energy-basis permutations; for cross-checks, d <= 5."""
    if h.dim > 5:
        raise ValueError("exhaustive permutation search is limited to d <= 5")
    p = populations(rho, h)
    e = h.energies
    base = float(p @ e)
    return max(base - float(p[list(perm)] @ e) for perm in itertools.permutations(range(h.dim)))


def coherent_ergotropy(rho, h: HamiltonianSpec) -> float:
    _, sigma = optimal_permutation(rho, h)
    return ergotropy(sigma, h)


def ergotropy_report(rho, h: HamiltonianSpec) -> ErgotropyReport:
    rho = _check(rho, h)
    _, sigma = optimal_permutation(rho, h)
    e0 = mean_energy(rho, h)
    return ErgotropyReport(
        total=ergotropy(rho, h),
        incoherent=e0 - mean_energy(sigma, h),
        coherent=ergotropy(sigma, h),
        coherence_nats=coherence(rho, h),
        mean_energy=e0,
    )


def gibbs_state(h: HamiltonianSpec, beta: float) -> np.ndarray:
    if not math.isfinite(beta) or beta < 0:
        raise ValueError("beta must be finite and >= 0")
    w = np.exp(-beta * (h.energies - h.energies[0]))
    return h.from_energy_basis(np.diag(w / w.sum()).astype(complex))


def beta_identity_terms(rho, h: HamiltonianSpec, beta: float) -> tuple[float, float]:
    """Both sides of beta*E_c = C + D(P_dephased||gibbs) - D(P_rho||gibbs)."""
    thermal = gibbs_state(h, beta)
    lhs = beta * coherent_ergotropy(rho, h)
    rhs = (
        coherence(rho, h)
        + relative_entropy(passive_state(dephase(rho, h), h), thermal)
        - relative_entropy(passive_state(rho, h), thermal)
    )
    return lhs, rhs


def beta_identity_residual(rho, h: HamiltonianSpec, beta: float) -> float:
    lhs, rhs = beta_identity_terms(rho, h, beta)
    return abs(lhs - rhs)
