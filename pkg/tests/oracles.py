"""Independent reference computations used to check the library."""

import itertools
import math

import numpy as np


def taylor_exp(m, terms=60):
    """exp(m) by scaling-and-squaring a plain Taylor series."""
    m = np.asarray(m, dtype=complex)
    norm = np.max(np.sum(np.abs(m), axis=1))
    k = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    a = m / 2**k
    out = np.eye(len(m), dtype=complex)
    term = np.eye(len(m), dtype=complex)
    for n in range(1, terms):
        term = term @ a / n
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def binary_entropy(p):
    return -sum(x * math.log(x) for x in (p, 1 - p) if x > 0)


def haar_unitaries(d, n, rng):
    """Haar unitaries via QR of complex Ginibre matrices with phase fix."""
    z = (rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r, axis1=1, axis2=2)
    return q * (ph / np.abs(ph))[:, None, :]


def sampled_extraction(rho, energies, unitaries):
    """Work extracted by each unitary for a diagonal Hamiltonian."""
    h = np.diag(energies)
    e0 = np.real(np.trace(rho @ h))
    out = np.einsum("nij,jk,nlk,li->n", unitaries, rho, unitaries.conj(), h)
    return e0 - np.real(out)


def permutation_ergotropies(rho, energies):
    """Work of every energy-basis permutation applied to a diagonal-energy state."""
    p = np.real(np.diag(rho))
    e0 = float(p @ energies)
    return [e0 - float(p[list(perm)] @ energies) for perm in itertools.permutations(range(len(p)))]


def rabi_flip(omega, detuning, t):
    """Transition probability of a two-level system under a detuned drive."""
    w = math.hypot(omega, detuning)
    return (omega / w) ** 2 * math.sin(w * t / 2) ** 2
