"""Photoluminescence readout: calibration sequences and off-diagonal extraction.

Level order everywhere is the NV ordering
``(|1>n|1>e, |1>n|0>e, |0>n|1>e, |0>n|0>e)``; PL rates use the same order.
Intensities are in the units of the rates. With shot noise, ``counts`` is
the expected photon count of one sequence at unit rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmath import DimensionMismatch

CONDITION_LIMIT = 1e8
CONTRAST_FLOOR = 1e-9


class IllConditioned(ValueError):
    pass


class DegenerateContrast(ValueError):
    pass


@dataclass(frozen=True)
class PLCalibration:
    """PL rates of the four levels, in NV order."""

    l11: float = 0.70
    l10: float = 1.00
    l01: float = 0.55
    l00: float = 0.65

    def __post_init__(self):
        if min(self.as_array()) <= 0:
            raise ValueError("PL rates must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.l11, self.l10, self.l01, self.l00])

    @classmethod
    def from_array(cls, rates) -> "PLCalibration":
        return cls(*(float(r) for r in rates))


@dataclass(frozen=True)
class CalibrationFit:
    calibration: PLCalibration
    residual: float
    condition_number: float


def calibration_matrix(p_e: float) -> np.ndarray:
    """Coefficients mapping the four PL rates onto intensities I1..I5."""
    q = 1.0 - p_e
    return np.array(
        [
            [q, p_e, 0.0, 0.0],
            [p_e, q, 0.0, 0.0],
            [q, 0.0, 0.0, p_e],
            [p_e, 0.0, 0.0, q],
            [0.0, p_e, q, 0.0],
        ]
    )


def forward_calibration_intensities(cal: PLCalibration, p_e: float) -> np.ndarray:
    if not 0.0 <= p_e <= 1.0:
        raise ValueError("p_e must lie in [0, 1]")
    return calibration_matrix(p_e) @ cal.as_array()


def calibrate_pl_rates(intensities, p_e: float) -> CalibrationFit:
    """Least-squares PL rates from five calibration intensities.

    The five equations overdetermine the four rates; the residual norm is
    returned with the fit.
    """
    a = calibration_matrix(p_e)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise IllConditioned(f"calibration system is singular at p_e={p_e} (cond={cond:.3g})")
    b = np.asarray(intensities, dtype=float)
    rates, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.linalg.norm(a @ rates - b))
    return CalibrationFit(PLCalibration.from_array(rates), residual, float(cond))


def offdiagonal_matrix(rho_tot) -> np.ndarray:
    """Coefficients mapping the PL rates onto intensities I6..I9."""
    r = np.asarray(rho_tot, dtype=complex)
    if r.shape != (4, 4):
        raise DimensionMismatch("readout needs the 4-level joint state")
    p = np.real(np.diag(r))
    im24, im13 = r[1, 3].imag, r[0, 2].imag
    m24 = 0.5 * (p[1] + p[3])
    m13 = 0.5 * (p[0] + p[2])
    return np.array(
        [
            [p[0], m24 + im24, p[2], m24 - im24],
            [p[0], m24 - im24, p[2], m24 + im24],
            [p[1], m13 + im13, m13 - im13, p[3]],
            [p[1], m13 - im13, m13 + im13, p[3]],
        ]
    )


def forward_offdiagonal_intensities(rho_tot, cal: PLCalibration) -> np.ndarray:
    return offdiagonal_matrix(rho_tot) @ cal.as_array()


def extract_offdiagonals(intensities, cal: PLCalibration) -> tuple[float, float]:
    """Return ``(Im rho24, Im rho13)`` from intensities I6..I9.

    Also accepts a batch of shape ``(..., 4)``; the outputs are then arrays.
    """
    i = np.asarray(intensities, dtype=float)
    d24 = cal.l10 - cal.l00
    d13 = cal.l10 - cal.l01
    if abs(d24) <= CONTRAST_FLOOR or abs(d13) <= CONTRAST_FLOOR:
        raise DegenerateContrast("PL rate difference vanishes; off-diagonals are unreadable")
    im24 = (i[..., 0] - i[..., 1]) / (2.0 * d24)
    im13 = (i[..., 2] - i[..., 3]) / (2.0 * d13)
    if i.ndim == 1:
        return float(im24), float(im13)
    return im24, im13


def mean_energy_from_offdiagonals(im24: float, im13: float, tau: float) -> float:
    return 2.0 * (im13 + im24) / tau


def sample_intensities(expected, counts: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Poisson photon counting on ``counts * expected``, rescaled back to rate units."""
    lam = np.asarray(expected, dtype=float) * counts
    shape = lam.shape if size is None else (size,) + lam.shape
    return rng.poisson(np.broadcast_to(lam, shape)) / counts


def solve_rates(intensities, p_e: float) -> np.ndarray:
    """Least-squares PL rates for calibration intensities of shape ``(..., 5)``."""
    a = calibration_matrix(p_e)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise IllConditioned(f"calibration system is singular at p_e={p_e} (cond={cond:.3g})")
    return np.asarray(intensities, dtype=float) @ np.linalg.pinv(a).T


def phase_signal(intensities, rates) -> np.ndarray:
    """``2 (Im rho13 + Im rho24)`` from intensities ``(..., 4)`` and rates ``(..., 4)``."""
    i = np.asarray(intensities, dtype=float)
    r = np.asarray(rates, dtype=float)
    d24 = r[..., 1] - r[..., 3]
    d13 = r[..., 1] - r[..., 2]
    if np.any(np.abs(d24) <= CONTRAST_FLOOR) or np.any(np.abs(d13) <= CONTRAST_FLOOR):
        raise DegenerateContrast("PL rate difference vanishes; off-diagonals are unreadable")
    return (i[..., 0] - i[..., 1]) / d24 + (i[..., 2] - i[..., 3]) / d13
