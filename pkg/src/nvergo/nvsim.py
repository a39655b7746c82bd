"""NV-center model: 4-level Hamiltonian, rotating frames, pulses and noise.

Two level orderings are in play:

* protocol order, ``kron(ancilla, system)`` with the system as ``(|e>, |g>)``;
* NV order, ``(|1>n|1>e, |1>n|0>e, |0>n|1>e, |0>n|0>e)``.

Ancilla |0> is nuclear |1>n and system |e> is electron |0>e, so the two
orders differ by a swap of the electron label (``I x X``).

Pulses drive the electron within each nuclear subspace. Within a subspace
the frame co-rotates with that subspace's own transition. Tone ``j``'s
rotating-frame term is ``(Omega_j/2)(cos phi_j sx + sin phi_j sy)`` on its
own subspace. In cross-talk mode it also reaches the other subspace with
its phase winding at the hyperfine splitting ``+-2*pi*A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .qmath import (
    DimensionMismatch,
    HamiltonianSpec,
    dag,
    gate_fidelity,
    matrix_exp,
    tensor_product,
)

TWO_PI = 2.0 * math.pi
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
SWAP_ELECTRON = tensor_product(I2, SX)


class NonDiagonalFrame(ValueError):
    pass


@dataclass(frozen=True)
class NVParams:
    """NV constants in MHz (D in GHz); angular versions are rad/us."""

    d_ghz: float = 2.87
    q_mhz: float = -4.95
    a_mhz: float = -2.16
    field_gauss: float = 500.0
    gamma_e_mhz_per_gauss: float = 2.8025
    gamma_n_khz_per_gauss: float = 0.3077

    @property
    def omega_e_mhz(self) -> float:
        return self.gamma_e_mhz_per_gauss * self.field_gauss

    @property
    def omega_n_mhz(self) -> float:
        return self.gamma_n_khz_per_gauss * self.field_gauss * 1e-3

    @property
    def hyperfine_splitting(self) -> float:
        """Angular splitting of the two electron transitions, 2*pi*A."""
        return TWO_PI * self.a_mhz


@dataclass(frozen=True)
class NoiseParams:
    t1_ms: float = 8.2
    t2_star_us: float = 56.0
    t2_echo_ms: float = 0.9
    t2_rabi_ms: float = 0.6
    p_e: float = 0.97
    p_n: float = 0.99
    rabi_reference_rad_per_us: float = TWO_PI * 1.0
    dephasing_exponent: int = 2

    def __post_init__(self):
        for name in ("t1_ms", "t2_star_us", "t2_echo_ms", "t2_rabi_ms", "rabi_reference_rad_per_us"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("p_e", "p_n"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.dephasing_exponent not in (1, 2):
            raise ValueError("dephasing_exponent must be 1 or 2")

    @property
    def t1_us(self) -> float:
        return self.t1_ms * 1e3

    @property
    def detuning_sigma(self) -> float:
        """Quasi-static detuning spread (rad/us) giving exp(-(t/T2*)^2) Ramsey decay."""
        return math.sqrt(2.0) / self.t2_star_us

    @property
    def amplitude_sigma(self) -> float:
        """Relative amplitude spread giving a nutation envelope decaying in T2'."""
        return math.sqrt(2.0) / (self.rabi_reference_rad_per_us * self.t2_rabi_ms * 1e3)


@dataclass(frozen=True)
class PulseSequence:
    """Piecewise-constant two-tone schedule.

    ``segments`` rows are ``(duration_us, omega1, phi1, omega2, phi2)`` with
    amplitudes in rad/us and phases in rad.
    """

    segments: np.ndarray = field(repr=False)

    def __post_init__(self):
        seg = np.atleast_2d(np.asarray(self.segments, dtype=float))
        if seg.ndim != 2 or seg.shape[1] != 5 or len(seg) == 0:
            raise ValueError("segments must be a non-empty (n, 5) array")
        if np.any(seg[:, 0] <= 0):
            raise ValueError("segment durations must be > 0")
        if np.any(seg[:, [1, 3]] < 0):
            raise ValueError("amplitudes must be >= 0")
        seg = seg.copy()
        seg[:, [2, 4]] = np.mod(seg[:, [2, 4]], TWO_PI)
        object.__setattr__(self, "segments", seg)

    @classmethod
    def zeros(cls, n_segments: int, total_time: float) -> "PulseSequence":
        seg = np.zeros((n_segments, 5))
        seg[:, 0] = total_time / n_segments
        return cls(seg)

    @classmethod
    def from_controls(cls, controls, durations) -> "PulseSequence":
        """Build from quadratures ``controls[s, tone] = (Omega cos phi, Omega sin phi)``."""
        x = np.asarray(controls, dtype=float).reshape(-1, 2, 2)
        amp = np.hypot(x[..., 0], x[..., 1])
        phase = np.arctan2(x[..., 1], x[..., 0])
        seg = np.column_stack([np.broadcast_to(durations, len(x)), amp[:, 0], phase[:, 0], amp[:, 1], phase[:, 1]])
        return cls(seg)

    @property
    def durations(self) -> np.ndarray:
        return self.segments[:, 0]

    @property
    def total_time(self) -> float:
        return float(self.durations.sum())

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def controls(self) -> np.ndarray:
        s = self.segments
        amp = s[:, [1, 3]]
        phase = s[:, [2, 4]]
        return np.stack([amp * np.cos(phase), amp * np.sin(phase)], axis=-1)


# --- Hamiltonians and frames -------------------------------------------------


def subspace_hamiltonian(p: NVParams = NVParams()) -> np.ndarray:
    """4-level NV Hamiltonian (rad/us) in NV order, sigma_z = +1 on |1>."""
    nuc = p.q_mhz + p.omega_n_mhz + p.a_mhz / 2
    ele = p.d_ghz * 1e3 + p.omega_e_mhz + p.a_mhz / 2
    h = nuc * np.kron(SZ, I2) + ele * np.kron(I2, SZ) + p.a_mhz / 2 * np.kron(SZ, SZ)
    return math.pi * h


def transition_frequencies(p: NVParams = NVParams()) -> tuple[float, float]:
    """Electron transition angular frequencies with the nucleus in |1>n and |0>n."""
    d = np.real(np.diag(subspace_hamiltonian(p)))
    return float(d[0] - d[1]), float(d[2] - d[3])


def to_nv_order(op) -> np.ndarray:
    """Re-express a protocol-ordered 4x4 operator in NV order (an involution)."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (4, 4):
        raise DimensionMismatch("expected a 4x4 operator")
    return SWAP_ELECTRON @ op @ SWAP_ELECTRON


from_nv_order = to_nv_order


def electron_operator(u_system) -> np.ndarray:
    """System-basis (|e>, |g>) operator as an electron (|1>e, |0>e) operator."""
    return SX @ np.asarray(u_system, dtype=complex) @ SX


def nv_target(u_system) -> np.ndarray:
    """``I_n x U`` in NV order for a system-basis single-qubit gate."""
    return tensor_product(I2, electron_operator(u_system))


def conditional_hamiltonian(h_s: HamiltonianSpec) -> np.ndarray:
    """``|1><1|_A x H_S`` in NV order."""
    return to_nv_order(tensor_product(np.diag([0.0, 1.0]), h_s.matrix))


def rotating_frame(h_lab, h_s: HamiltonianSpec, t: float = 0.0) -> np.ndarray:
    """Hamiltonian seen in the frame ``U_rot = exp(i (H_lab - |1><1|_A x H_S) t)``.

    ``h_lab`` must be diagonal (NV order); the result is the transformed
    generator ``U H U^dagger - i U dU^dagger/dt``, which is
    ``|1><1|_A x H_S``.
    """
    h_lab = np.asarray(h_lab, dtype=complex)
    if h_lab.shape != (4, 4):
        raise DimensionMismatch("expected a 4x4 lab Hamiltonian")
    if np.max(np.abs(h_lab - np.diag(np.diag(h_lab)))) > 1e-12:
        raise NonDiagonalFrame("rotating frame requires a diagonal lab Hamiltonian")
    k = conditional_hamiltonian(h_s)
    generator = h_lab - k
    u = matrix_exp(generator, 1j * t)
    # -i U d(U^dag)/dt = -i U (-i G) U^dag = -G, since G commutes with U
    return u @ h_lab @ dag(u) - generator


def free_evolution(h, t: float) -> np.ndarray:
    return matrix_exp(h, -1j * t)


# --- pulse propagation -------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Sub-step grid used to integrate the (time-dependent) cross-talk terms."""

    segment: np.ndarray  # segment index of each sub-step
    dt: np.ndarray
    t_mid: np.ndarray
    offsets: np.ndarray  # offsets[j, k]: phase winding rate of tone j in subspace k


def make_schedule(
    durations, cross_talk: bool, splitting: float, max_phase_step: float = 0.05
) -> Schedule:
    durations = np.asarray(durations, dtype=float)
    if cross_talk:
        offsets = np.array([[0.0, splitting], [-splitting, 0.0]])
        n_sub = np.maximum(1, np.ceil(abs(splitting) * durations / max_phase_step)).astype(int)
    else:
        offsets = np.zeros((2, 2))
        n_sub = np.ones(len(durations), dtype=int)
    seg = np.repeat(np.arange(len(durations)), n_sub)
    dt = np.repeat(durations / n_sub, n_sub)
    t_mid = np.cumsum(dt) - dt / 2
    return Schedule(seg, dt, t_mid, offsets)


def drive_coefficients(controls, sched: Schedule, amplitude_scale=1.0):
    """Pauli coefficients (hx, hy) of each sub-step, shape (..., 2 subspaces, M).

    ``amplitude_scale`` may be an array of leading batch shape.
    """
    x = np.asarray(controls, dtype=float)[sched.segment]  # (M, tone, quad)
    ang = sched.offsets[:, :, None] * sched.t_mid  # (tone, subspace, M)
    c, s = np.cos(ang), np.sin(ang)
    u = x[:, :, 0].T[:, None, :]  # (tone, 1, M)
    v = x[:, :, 1].T[:, None, :]
    hx = 0.5 * np.sum(u * c - v * s, axis=0)
    hy = 0.5 * np.sum(u * s + v * c, axis=0)
    scale = np.asarray(amplitude_scale, dtype=float)[..., None, None]
    return scale * hx, scale * hy


def pauli_matrices(hx, hy, hz) -> np.ndarray:
    h = np.empty(np.broadcast(hx, hy, hz).shape + (2, 2), dtype=complex)
    h[..., 0, 0] = hz
    h[..., 1, 1] = -hz
    h[..., 0, 1] = hx - 1j * hy
    h[..., 1, 0] = hx + 1j * hy
    return h


def su2_steps(hx, hy, hz, dt) -> np.ndarray:
    """``exp(-i (hx sx + hy sy + hz sz) dt)`` elementwise, in closed form."""
    hx, hy, hz = np.broadcast_arrays(hx, hy, hz)
    n = np.sqrt(hx**2 + hy**2 + hz**2)
    theta = n * dt
    sinc = np.where(n > 0, np.sin(theta) / np.where(n > 0, n, 1.0), dt)
    out = pauli_matrices(-1j * sinc * hx, -1j * sinc * hy, -1j * sinc * hz)
    c = np.cos(theta)
    out[..., 0, 0] += c
    out[..., 1, 1] += c
    return out


def chain(steps) -> np.ndarray:
    """Time-ordered product ``U_M ... U_1`` along axis -3."""
    u = steps
    while u.shape[-3] > 1:
        if u.shape[-3] % 2:
            pad = np.broadcast_to(np.eye(2, dtype=complex), u.shape[:-3] + (1, 2, 2))
            u = np.concatenate([u, pad], axis=-3)
        u = u[..., 1::2, :, :] @ u[..., 0::2, :, :]
    return u[..., 0, :, :]


def block_diag(blocks) -> np.ndarray:
    """(..., 2, 2, 2) subspace blocks to (..., 4, 4) NV-order unitaries."""
    out = np.zeros(blocks.shape[:-3] + (4, 4), dtype=complex)
    out[..., :2, :2] = blocks[..., 0, :, :]
    out[..., 2:, 2:] = blocks[..., 1, :, :]
    return out


def propagate_pulse(
    seq: PulseSequence,
    detuning_1: float = 0.0,
    detuning_2: float = 0.0,
    *,
    cross_talk: bool = True,
    splitting: float | None = None,
    amplitude_scale: float = 1.0,
    max_phase_step: float = 0.05,
) -> np.ndarray:
    """4x4 NV-order propagator of a pulse sequence.

    ``detuning_k`` adds ``(delta_k / 2) sigma_z`` to the electron in nuclear
    subspace ``k`` (1 for |1>n, 2 for |0>n).
    """
    if splitting is None:
        splitting = NVParams().hyperfine_splitting
    sched = make_schedule(seq.durations, cross_talk, splitting, max_phase_step)
    hx, hy = drive_coefficients(seq.controls(), sched, amplitude_scale)
    hz = 0.5 * np.array([detuning_1, detuning_2])[:, None]
    return block_diag(chain(su2_steps(hx, hy, hz, sched.dt)))


def propagate_batch(
    seq: PulseSequence,
    detunings,
    amplitude_scales,
    *,
    cross_talk: bool = True,
    splitting: float | None = None,
    max_phase_step: float = 0.05,
) -> np.ndarray:
    """Propagators for a batch of common-mode detunings and amplitude scales."""
    if splitting is None:
        splitting = NVParams().hyperfine_splitting
    detunings = np.asarray(detunings, dtype=float)
    sched = make_schedule(seq.durations, cross_talk, splitting, max_phase_step)
    hx, hy = drive_coefficients(seq.controls(), sched, amplitude_scales)
    hz = 0.5 * detunings[:, None, None] * np.ones((1, 2, 1))
    return block_diag(chain(su2_steps(hx, hy, hz, sched.dt)))


# --- channels ----------------------------------------------------------------


def _local(rho, local_dims, fn) -> np.ndarray:
    """Apply a linear map ``fn`` on the second tensor factor (identity on the first)."""
    rho = np.asarray(rho, dtype=complex)
    if local_dims is None:
        return fn(rho)
    d_a, d_s = local_dims
    if d_a * d_s != rho.shape[0]:
        raise DimensionMismatch(f"dims {local_dims} do not match a {rho.shape[0]}-dim state")
    blocks = rho.reshape(d_a, d_s, d_a, d_s).transpose(0, 2, 1, 3)
    out = np.stack([[fn(blocks[a, b]) for b in range(d_a)] for a in range(d_a)])
    return out.transpose(0, 2, 1, 3).reshape(rho.shape)


def dephasing_factor(t: float, t2_star: float, exponent: int = 2) -> float:
    return math.exp(-((t / t2_star) ** exponent))


def dephasing_channel(
    rho, t: float, t2_star: float, *, exponent: int = 2, basis: HamiltonianSpec | None = None,
    local_dims: tuple[int, int] | None = None,
) -> np.ndarray:
    """Energy-basis coherences decay by ``exp(-(t/T2*)^exponent)``.

    ``basis`` defaults to the computational basis; ``local_dims`` applies
    the channel to the second factor of a bipartite state.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    f = dephasing_factor(t, t2_star, exponent)

    def fn(x):
        y = x if basis is None else basis.to_energy_basis(x)
        y = f * y + (1.0 - f) * np.diag(np.diag(y))
        return y if basis is None else basis.from_energy_basis(y)

    return _local(rho, local_dims, fn)


def relaxation_channel(
    rho, t: float, t1: float, stationary, *, local_dims: tuple[int, int] | None = None
) -> np.ndarray:
    """Populations relax as ``exp(-t/T1)`` towards ``stationary``; coherences as ``exp(-t/2T1)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    k = math.exp(-t / t1)
    target = np.real(np.diag(np.asarray(stationary, dtype=complex)))

    def fn(x):
        diag = np.diag(x)
        y = math.sqrt(k) * (x - np.diag(diag))
        return y + np.diag(k * diag + (1.0 - k) * np.trace(x) * target)

    return _local(rho, local_dims, fn)


def quasi_static_nodes(noise: NoiseParams, n_detuning: int = 9, n_amplitude: int = 3):
    """Gauss-Hermite nodes ``(detunings, amplitude_scales, weights)`` of the shot-to-shot noise."""
    xd, wd = hermegauss(n_detuning)
    xa, wa = hermegauss(n_amplitude)
    d, a = np.meshgrid(xd * noise.detuning_sigma, 1.0 + xa * noise.amplitude_sigma, indexing="ij")
    w = np.outer(wd, wa)
    return d.ravel(), a.ravel(), (w / w.sum()).ravel()


def mixed_unitary(rho, unitaries, weights) -> np.ndarray:
    out = np.einsum("n,nij,jk,nlk->il", weights, unitaries, rho, unitaries.conj())
    return 0.5 * (out + dag(out))


def gate_fidelity_monte_carlo(
    seq: PulseSequence,
    target,
    noise: NoiseParams,
    samples: int = 1000,
    seed: int = 0,
    *,
    cross_talk: bool = True,
    splitting: float | None = None,
) -> tuple[float, float]:
    """Mean and standard deviation of the gate fidelity over quasi-static noise shots."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    det = rng.normal(0.0, noise.detuning_sigma, samples)
    amp = 1.0 + rng.normal(0.0, noise.amplitude_sigma, samples)
    us = propagate_batch(seq, det, amp, cross_talk=cross_talk, splitting=splitting)
    f = np.array([gate_fidelity(u, target) for u in us])
    return float(f.mean()), float(f.std(ddof=1) if samples > 1 else 0.0)
