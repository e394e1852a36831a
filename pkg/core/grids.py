# core/grids.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import GridError

if TYPE_CHECKING:
    from .models import PhaseDensity, WaveField


@dataclass(frozen=True)
class XGrid:
    """
    Periodic grid x_j = a + j*dx, j = 0..M-1, with dx = (b - a)/M.
    Spectral frequencies are omega_l = 2*pi*l/(b - a), l = -M/2..M/2-1.
    """
    a: float
    b: float
    M: int

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.M

    @property
    def points(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.M)

    @property
    def omega(self) -> np.ndarray:
        """Frequencies in transform order (0, 1, .., M/2-1, -M/2, .., -1)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.M, d=self.dx)

    @property
    def ordered_omega(self) -> np.ndarray:
        """Frequencies for l = -M/2..M/2-1 in ascending order."""
        return 2.0 * np.pi * np.arange(-self.M // 2, self.M // 2) / self.length

    def frequency(self, ell: int) -> float:
        return 2.0 * np.pi * ell / self.length


@dataclass(frozen=True)
class PhaseGrid:
    """
    Periodic phase-space grid y_j = c + j*dy (J points) and
    eta_k = alpha + k*deta (K points). Field indices are cyclic.
    """
    c: float
    d: float
    J: int
    alpha: float
    beta: float
    K: int

    @property
    def dy(self) -> float:
        return (self.d - self.c) / self.J

    @property
    def deta(self) -> float:
        return (self.beta - self.alpha) / self.K

    @property
    def cell_area(self) -> float:
        return self.dy * self.deta

    @property
    def y(self) -> np.ndarray:
        return self.c + self.dy * np.arange(self.J)

    @property
    def eta(self) -> np.ndarray:
        return self.alpha + self.deta * np.arange(self.K)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.J, self.K)

    def nearest_cell(self, y: float, eta: float) -> tuple[int, int]:
        """Cyclic index of the cell whose node is closest to (y, eta)."""
        j = int(round((y - self.c) / self.dy)) % self.J
        k = int(round((eta - self.alpha) / self.deta)) % self.K
        return j, k


def _check_interval(lo: float, hi: float, label: str) -> None:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise GridError(f"{label}: interval endpoints must be finite, got ({lo}, {hi})")
    if hi <= lo:
        raise GridError(f"{label}: degenerate interval ({lo}, {hi})")


def make_xgrid(a: float, b: float, M: int) -> XGrid:
    _check_interval(a, b, "x")
    if int(M) != M or M <= 0:
        raise GridError(f"x: point count M must be a positive integer, got {M}")
    if M % 2:
        raise GridError(f"x: point count M must be even, got {M}")
    return XGrid(a=float(a), b=float(b), M=int(M))


def make_phasegrid(c: float, d: float, J: int, alpha: float, beta: float, K: int) -> PhaseGrid:
    _check_interval(c, d, "y")
    _check_interval(alpha, beta, "eta")
    for label, n in (("J", J), ("K", K)):
        if int(n) != n or n <= 0:
            raise GridError(f"{label} must be a positive integer, got {n}")
    return PhaseGrid(
        c=float(c), d=float(d), J=int(J), alpha=float(alpha), beta=float(beta), K=int(K)
    )


def l2_norm_discrete(field: WaveField) -> float:
    """sqrt((b - a)/M * sum |psi_j|^2); NaN entries propagate."""
    values = field.values
    return float(np.sqrt(field.grid.dx * np.sum(np.abs(values) ** 2)))


def phase_mass(mu: PhaseDensity) -> float:
    """sum_jk mu_jk * dy * deta (plain sum and trapezoid rule coincide on a periodic grid)."""
    return float(np.sum(mu.values) * mu.grid.cell_area)


def phase_l2_norm(values: np.ndarray, pg: PhaseGrid) -> float:
    return float(np.sqrt(pg.cell_area * np.sum(np.abs(values) ** 2)))
