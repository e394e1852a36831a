# core/models.py
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError
from .grids import PhaseGrid, XGrid


@dataclass
class WaveField:
    """
    Complex samples psi_j on a periodic x-grid, with the semiclassical
    parameter h attached.
    """
    grid: XGrid
    values: np.ndarray
    h: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.M,):
            raise NumericalError(
                f"wave field has shape {self.values.shape}, grid expects ({self.grid.M},)"
            )

    def with_values(self, values: np.ndarray) -> "WaveField":
        return replace(self, values=values)

    def check_finite(self, where: str = "wave field") -> None:
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite entries in {where}")


@dataclass
class PhaseDensity:
    """Real samples mu_jk on a periodic (y, eta) grid; indexing is cyclic."""
    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise NumericalError(
                f"phase density has shape {self.values.shape}, grid expects {self.grid.shape}"
            )

    def at(self, j: int, k: int) -> float:
        return float(self.values[j % self.grid.J, k % self.grid.K])

    def with_values(self, values: np.ndarray) -> "PhaseDensity":
        return replace(self, values=values)

    def check_finite(self, where: str = "phase density") -> None:
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite entries in {where}")


@dataclass
class NuField(PhaseDensity):
    """
    Classical-limit density nu on an (x, xi) grid. The PhaseGrid's first
    axis carries x (c, d = a, b) and the second carries xi.
    """

    @property
    def x_marginal(self) -> np.ndarray:
        """Position density: integral of nu over xi."""
        return np.sum(self.values, axis=1) * self.grid.deta


@dataclass
class EhrenfestPotential:
    """Quadrature potential Upsilon_d(x_j) felt by the wave function."""
    grid: XGrid
    values: np.ndarray


@dataclass
class SleState:
    psi: WaveField
    mu: PhaseDensity
    t: float = 0.0


@dataclass
class ObservableRecord:
    """Time-stamped scalars and profiles recorded along a run."""
    t: float
    mass_psi: float
    mass_mu: float
    energy_Ed: float
    hgrad_norm: float
    rho: np.ndarray
    current: np.ndarray
    kinetic: np.ndarray | None = None

    def without_profiles(self) -> "ObservableRecord":
        """Scalar-only copy; long runs keep profiles just at checkpoints and the end."""
        return replace(self, rho=np.empty(0), current=np.empty(0), kinetic=None)

    def scalars(self) -> dict[str, float]:
        return {
            "t": self.t,
            "mass_psi": self.mass_psi,
            "mass_mu": self.mass_mu,
            "energy_Ed": self.energy_Ed,
            "hgrad_norm": self.hgrad_norm,
        }


@dataclass
class WignerField:
    """Real Wigner samples w(x_j, xi_m); xi ascending."""
    xg: XGrid
    xi_points: np.ndarray
    values: np.ndarray
    h: float
    imag_residue: float = 0.0

    @property
    def dxi(self) -> float:
        return float(self.xi_points[1] - self.xi_points[0])

    def moment(self, order: int) -> np.ndarray:
        """dxi * sum_m xi_m**order * w(x_j, xi_m) for every x_j."""
        weights = self.xi_points ** order
        return self.dxi * (self.values @ weights)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.xg.dx * self.dxi * np.sum(self.values ** 2)))


@dataclass
class Trajectory:
    """Point-particle samples (t, y, eta) of the Ehrenfest ODE."""
    t: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    eta: list[float] = field(default_factory=list)

    def append(self, t: float, y: float, eta: float) -> None:
        self.t.append(t)
        self.y.append(y)
        self.eta.append(eta)


@dataclass
class LimitRecord:
    """Observables of the classical-limit run; rho is the x-marginal of nu."""
    t: float
    mass_nu: float
    mass_mu: float
    energy: float
    rho: np.ndarray

    def scalars(self) -> dict[str, float]:
        return {
            "t": self.t,
            "mass_nu": self.mass_nu,
            "mass_mu": self.mass_mu,
            "energy": self.energy,
        }
