"""Dense complex linear algebra for small Hilbert spaces (d <= 16).

Density matrices and operators are plain ``numpy`` arrays of complex dtype.
Energies and angular frequencies are in rad/us, times in us, entropies in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-10
STATE_TOL = 1e-12
PSD_CLIP = 1e-12


class NonHermitian(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class InvalidState(ValueError):
    pass


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def ket(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return v / np.linalg.norm(v)


def projector(vec) -> np.ndarray:
    v = ket(vec)
    return np.outer(v, v.conj())


def _square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - dag(m)), initial=0.0) <= tol


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return np.max(np.abs(dag(u) @ u - np.eye(u.shape[0]))) <= tol


def check_density_matrix(rho, tol: float = STATE_TOL) -> np.ndarray:
    """Validate ``rho`` as a density matrix and return it as a complex array.

    Raises InvalidState when Hermiticity, unit trace or positivity fail
    beyond ``tol`` (eigenvalues may dip to ``-tol``).
    """
    rho = _square(rho)
    if np.max(np.abs(rho - dag(rho))) > tol:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidState(f"density matrix trace is {np.trace(rho).real:.3g}, not 1")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidState("density matrix has negative eigenvalues")
    return rho


def herm_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    m = _square(m)
    if not is_hermitian(m):
        raise NonHermitian("matrix is not Hermitian within 1e-10")
    vals, vecs = np.linalg.eigh(0.5 * (m + dag(m)))
    return vals, vecs


def matrix_exp(m, scale: complex = 1.0) -> np.ndarray:
    """Return ``exp(scale * m)``.

    Hermitian ``m`` goes through its eigendecomposition, so ``exp(-1j*H*t)``
    is unitary to rounding. Anything else falls back to Pade
    (``scipy.linalg.expm``).
    """
    m = _square(m)
    if is_hermitian(m, tol=1e-13):
        vals, vecs = np.linalg.eigh(0.5 * (m + dag(m)))
        return (vecs * np.exp(scale * vals)) @ dag(vecs)
    return scipy.linalg.expm(scale * m)


def tensor_product(*ops) -> np.ndarray:
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def partial_trace(rho, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Reduced state of a bipartite ``rho`` on subsystem ``keep`` (0 or 1)."""
    rho = _square(rho)
    d_a, d_b = dims
    if d_a * d_b != rho.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not match a {rho.shape[0]}-dim state")
    r = rho.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    if keep == 1:
        return np.einsum("ijil->jl", r)
    raise ValueError("keep must be 0 or 1")


def _clipped_eigvals(rho) -> np.ndarray:
    vals = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))
    vals[(vals < 0) & (vals >= -PSD_CLIP)] = 0.0
    return vals


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho) -> float:
    return shannon_entropy(_clipped_eigvals(_square(rho)))


def nats_to_bits(x: float) -> float:
    return x / math.log(2.0)


def relative_entropy(rho, sigma, tol: float = 1e-12) -> float:
    """Quantum relative entropy D(rho||sigma) in nats.

    Returns ``math.inf`` when the support of ``rho`` is not contained in
    the support of ``sigma``.
    """
    rho, sigma = _square(rho), _square(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch("states have different dimensions")
    s_vals, s_vecs = np.linalg.eigh(0.5 * (sigma + dag(sigma)))
    # weight of rho on each eigenvector of sigma
    weights = np.real(np.einsum("ji,jk,ki->i", s_vecs.conj(), rho, s_vecs))
    kernel = s_vals <= tol
    if np.any(weights[kernel] > tol):
        return math.inf
    cross = float(np.sum(weights[~kernel] * np.log(s_vals[~kernel])))
    return max(0.0, -von_neumann_entropy(rho) - cross)


def sqrtm_psd(rho) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (rho + dag(rho)))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ dag(vecs)


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``[Tr sqrt(sqrt(rho) sigma sqrt(rho))]**2``."""
    rho, sigma = _square(rho), _square(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch("states have different dimensions")
    s = sqrtm_psd(rho)
    inner = np.linalg.eigvalsh(0.5 * (s @ sigma @ s + dag(s @ sigma @ s)))
    f = float(np.sum(np.sqrt(np.clip(inner, 0.0, None))) ** 2)
    return min(1.0, max(0.0, f))


def trace_distance(rho, sigma) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(_square(rho) - _square(sigma)))))


@dataclass(frozen=True)
class HamiltonianSpec:
    """Energies (ascending, rad/us) with orthonormal eigenvector columns."""

    energies: np.ndarray
    eigenvectors: np.ndarray
    matrix: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, h) -> "HamiltonianSpec":
        vals, vecs = herm_eig(h)
        return cls(vals, vecs, (vecs * vals) @ dag(vecs))

    @classmethod
    def diagonal(cls, energies) -> "HamiltonianSpec":
        """Diagonal Hamiltonian; eigenvectors are computational basis states."""
        e = np.asarray(energies, dtype=float)
        order = np.argsort(e, kind="stable")
        vecs = np.eye(len(e), dtype=complex)[:, order]
        return cls(e[order], vecs, np.diag(e).astype(complex))

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def span(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    def to_energy_basis(self, rho) -> np.ndarray:
        return dag(self.eigenvectors) @ rho @ self.eigenvectors

    def from_energy_basis(self, rho_e) -> np.ndarray:
        return self.eigenvectors @ rho_e @ dag(self.eigenvectors)


def qubit_hamiltonian(epsilon: float) -> HamiltonianSpec:
    """H_S = diag(epsilon, 0) in the (|e>, |g>) basis."""
    return HamiltonianSpec.diagonal([epsilon, 0.0])


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ dag(g)
    return rho / np.trace(rho)


def random_unitary(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random unitaries (batched when ``size`` is given)."""
    shape = (d, d) if size is None else (size, d, d)
    z = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[..., None, :]


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (g + dag(g))


def gate_fidelity(u, target) -> float:
    """``|Tr[target^dagger U] / Tr[U^dagger U]|**2``; insensitive to global phase."""
    u, target = _square(u), _square(target)
    if u.shape != target.shape:
        raise DimensionMismatch("operators have different dimensions")
    norm = np.real(np.trace(dag(u) @ u))
    return float(abs(np.trace(dag(target) @ u) / norm) ** 2)
