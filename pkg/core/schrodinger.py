# core/schrodinger.py
# coefficients in scipy.fft order: psi_hat_l = sum_j psi_j exp(-i omega_l (x_j - a))
from functools import lru_cache

import numpy as np
from scipy import fft

from .errors import NumericalError
from .grids import XGrid
from .models import EhrenfestPotential, WaveField


def dft(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 1 or values.size % 2:
        raise NumericalError(f"dft expects a 1-D vector of even length, got shape {values.shape}")
    return fft.fft(values)


def idft(coefficients: np.ndarray) -> np.ndarray:
    """Inverse of dft: (1/M) sum_l psi_hat_l exp(i omega_l (x_j - a))."""
    coefficients = np.asarray(coefficients)
    if coefficients.ndim != 1 or coefficients.size % 2:
        raise NumericalError(
            f"idft expects a 1-D vector of even length, got shape {coefficients.shape}"
        )
    return fft.ifft(coefficients)


@lru_cache(maxsize=32)
def kinetic_multiplier(xg: XGrid, h: float, dt: float) -> np.ndarray:
    multiplier = np.exp(-0.5j * h * dt * xg.omega ** 2)
    multiplier.setflags(write=False)
    return multiplier


def kinetic_step(psi: WaveField, dt: float) -> WaveField:
    """Free flight over dt: every coefficient is multiplied by exp(-i h dt omega^2 / 2)."""
    coefficients = dft(psi.values) * kinetic_multiplier(psi.grid, psi.h, dt)
    return psi.with_values(idft(coefficients))


def potential_phase_step(psi: WaveField, upsilon: EhrenfestPotential, dt: float) -> WaveField:
    """psi_j <- exp(-i Upsilon_d(x_j) dt / h) psi_j."""
    if upsilon.grid != psi.grid:
        raise NumericalError("Ehrenfest potential and wave field live on different x-grids")
    return psi.with_values(np.exp(-1j * upsilon.values * dt / psi.h) * psi.values)


def spectral_derivative(psi: WaveField, order: int = 1) -> np.ndarray:
    """d^order psi / dx^order via multiplication of the coefficients by (i omega)^order."""
    return idft(dft(psi.values) * (1j * psi.grid.omega) ** order)


def hgrad_norm(psi: WaveField) -> float:
    """||h d/dx psi|| in the discrete l2 norm."""
    derivative = spectral_derivative(psi)
    return float(psi.h * np.sqrt(psi.grid.dx * np.sum(np.abs(derivative) ** 2)))
