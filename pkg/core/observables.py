# core/observables.py
from typing import Iterator

import numpy as np
from scipy import fft

from .grids import l2_norm_discrete, phase_mass
from .logger import get_logger
from .models import EhrenfestPotential, ObservableRecord, PhaseDensity, WaveField, WignerField
from .schrodinger import dft, hgrad_norm, idft, spectral_derivative

logger = get_logger(__name__)

WIGNER_CHUNK_ROWS = 256
WIGNER_IMAG_TOLERANCE = 1e-10


def position_density(psi: WaveField) -> np.ndarray:
    return np.abs(psi.values) ** 2


def current_density(psi: WaveField) -> np.ndarray:
    """h Im(conj(psi) d/dx psi) with a spectral derivative."""
    return psi.h * np.imag(np.conj(psi.values) * spectral_derivative(psi))


def kinetic_density(psi: WaveField) -> np.ndarray:
    return 0.5 * psi.h ** 2 * np.abs(spectral_derivative(psi)) ** 2


def wigner_kinetic_density(psi: WaveField) -> np.ndarray:
    """
    Exact half second xi-moment of the Wigner function:
    kappa - (h^2/8) d^2 rho/dx^2. Integrates to the same total as kappa.
    """
    rho_hat = dft(position_density(psi).astype(np.complex128))
    rho_xx = np.real(idft(rho_hat * (1j * psi.grid.omega) ** 2))
    return kinetic_density(psi) - psi.h ** 2 / 8.0 * rho_xx


def discrete_energy(psi: WaveField, mu: PhaseDensity, upsilon: EhrenfestPotential) -> float:
    """
    E_d = int h^2/2 |psi_x|^2 dx + int Upsilon_d |psi|^2 dx
          + sum_jk eta_k^2/2 mu_jk dy deta.
    """
    dx = psi.grid.dx
    kinetic = dx * float(np.sum(kinetic_density(psi)))
    coupling = dx * float(np.sum(upsilon.values * position_density(psi)))
    eta = mu.grid.eta
    classical = float(np.sum(0.5 * eta[np.newaxis, :] ** 2 * mu.values)) * mu.grid.cell_area
    return kinetic + coupling + classical


def observe(
    psi: WaveField,
    mu: PhaseDensity,
    upsilon: EhrenfestPotential,
    t: float,
    with_kinetic: bool = True,
) -> ObservableRecord:
    return ObservableRecord(
        t=t,
        mass_psi=l2_norm_discrete(psi),
        mass_mu=phase_mass(mu),
        energy_Ed=discrete_energy(psi, mu, upsilon),
        hgrad_norm=hgrad_norm(psi),
        rho=position_density(psi),
        current=current_density(psi),
        kinetic=kinetic_density(psi) if with_kinetic else None,
    )


def wigner_xi_points(psi: WaveField) -> np.ndarray:
    """xi_m = h * omega_m, m = -M/2..M/2-1, covering [-h omega_{M/2}, h omega_{M/2})."""
    return psi.h * psi.grid.ordered_omega


def _half_grid_samples(psi: WaveField) -> np.ndarray:
    """psi on the doubled grid a + p dx/2; odd entries by trigonometric interpolation."""
    xg = psi.grid
    shifted = idft(dft(psi.values) * np.exp(0.5j * xg.omega * xg.dx))
    samples = np.empty(2 * xg.M, dtype=np.complex128)
    samples[0::2] = psi.values
    samples[1::2] = shifted
    return samples


def iter_wigner_rows(
    psi: WaveField, rows: np.ndarray | None = None, chunk: int = WIGNER_CHUNK_ROWS
) -> Iterator[tuple[np.ndarray, np.ndarray, float]]:
    """
    Yield (row indices, w rows with xi ascending, max imaginary residue)
    in chunks, so large grids never materialise the full correlation matrix.

    w(x_j, xi) = 1/(2 pi h) int psi(x_j - z/2) conj(psi(x_j + z/2)) exp(i xi z/h) dz,
    sampled at z_n = n dx, n = -M/2..M/2-1.
    """
    xg = psi.grid
    M = xg.M
    samples = _half_grid_samples(psi)
    n = np.fft.fftfreq(M, d=1.0 / M).astype(np.int64)
    all_rows = np.arange(M) if rows is None else np.asarray(rows, dtype=np.int64)
    scale = xg.dx * M / (2.0 * np.pi * psi.h)

    for start in range(0, all_rows.size, chunk):
        block = all_rows[start:start + chunk]
        twice = 2 * block[:, np.newaxis]
        left = samples[(twice - n[np.newaxis, :]) % (2 * M)]
        right = samples[(twice + n[np.newaxis, :]) % (2 * M)]
        transformed = scale * fft.ifft(left * np.conj(right), axis=1)
        transformed = fft.fftshift(transformed, axes=1)
        residue = float(np.max(np.abs(transformed.imag), initial=0.0))
        yield block, np.ascontiguousarray(transformed.real), residue


def wigner_transform(psi: WaveField, chunk: int = WIGNER_CHUNK_ROWS) -> WignerField:
    """Full discrete Wigner transform on the (x_j, xi_m) grid, M x M."""
    M = psi.grid.M
    values = np.empty((M, M), dtype=np.float64)
    residue = 0.0
    for block, rows, block_residue in iter_wigner_rows(psi, chunk=chunk):
        values[block] = rows
        residue = max(residue, block_residue)
    if residue > WIGNER_IMAG_TOLERANCE * max(1.0, float(np.max(np.abs(values)))):
        logger.warning("Wigner transform has imaginary residue %.3e (truncated correlation)", residue)
    return WignerField(
        xg=psi.grid, xi_points=wigner_xi_points(psi), values=values, h=psi.h, imag_residue=residue
    )


def wigner_norm_expected(psi: WaveField) -> float:
    """||w||_{L2} = ||psi||^2 / sqrt(2 pi h) in one dimension."""
    return l2_norm_discrete(psi) ** 2 / np.sqrt(2.0 * np.pi * psi.h)


def relative_l2(test: np.ndarray, reference: np.ndarray) -> float:
    denominator = float(np.linalg.norm(reference))
    if denominator == 0.0:
        return float(np.linalg.norm(test))
    return float(np.linalg.norm(test - reference)) / denominator


def wigner_moment_errors(psi: WaveField) -> dict[str, float]:
    """Relative l2 mismatch of the zeroth/first/second xi-moments against rho, j, kappa.

    `kinetic` compares against kappa - (h^2/8) rho_xx, which the second moment
    reproduces exactly; `kinetic_plain` is the mismatch against kappa itself.
    """
    wigner = wigner_transform(psi)
    half_m2 = 0.5 * wigner.moment(2)
    return {
        "rho": relative_l2(wigner.moment(0), position_density(psi)),
        "current": relative_l2(wigner.moment(1), current_density(psi)),
        "kinetic": relative_l2(half_m2, wigner_kinetic_density(psi)),
        "kinetic_plain": relative_l2(half_m2, kinetic_density(psi)),
        "norm": abs(wigner.l2_norm() - wigner_norm_expected(psi)) / wigner_norm_expected(psi),
        "imag_residue": wigner.imag_residue,
    }
