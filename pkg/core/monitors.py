# core/monitors.py
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import InvariantViolationError
from .grids import PhaseGrid, l2_norm_discrete, phase_mass
from .logger import get_logger
from .models import EhrenfestPotential, ObservableRecord, PhaseDensity, WaveField
from .observables import discrete_energy
from .potential import CouplingPotential
from .schrodinger import hgrad_norm

logger = get_logger(__name__)

MASS_TOLERANCE = 1e-10
BOUND_SLACK = 1e-9


@dataclass
class MonitorViolation:
    t: float
    check: str
    value: float
    bound: float

    def __str__(self) -> str:
        return f"t={self.t:.6g} {self.check}: {self.value:.12g} exceeds {self.bound:.12g}"


def energy_constant(V: CouplingPotential, pg: PhaseGrid, mass_mu: float) -> float:
    """C1 = 2 L^2 C + (L C / 2) deta with C the phase mass."""
    L = V.sup_dv_dy
    return 2.0 * L ** 2 * mass_mu + 0.5 * L * mass_mu * pg.deta


def energy_bound(E0: float, C1: float, t: float) -> float:
    return (C1 + E0) * math.exp(t) - C1


def oscillation_bound(hgrad0: float, C0: float, t: float) -> float:
    return hgrad0 + C0 * t


@dataclass
class InvariantMonitor:
    """Baselines taken from the initial state; check() is called at each output cadence."""
    potential: CouplingPotential
    pg: PhaseGrid
    mass_psi0: float
    mass_mu0: float
    energy0: float
    hgrad0: float
    strict: bool = False
    violations: List[MonitorViolation] = field(default_factory=list)

    @classmethod
    def start(
        cls,
        V: CouplingPotential,
        psi: WaveField,
        mu: PhaseDensity,
        upsilon: EhrenfestPotential,
        strict: bool = False,
    ) -> "InvariantMonitor":
        return cls(
            potential=V,
            pg=mu.grid,
            mass_psi0=l2_norm_discrete(psi),
            mass_mu0=phase_mass(mu),
            energy0=discrete_energy(psi, mu, upsilon),
            hgrad0=hgrad_norm(psi),
            strict=strict,
        )

    @property
    def C1(self) -> float:
        return energy_constant(self.potential, self.pg, self.mass_mu0)

    @property
    def C0(self) -> float:
        return self.potential.sup_dv_dx * self.mass_mu0

    def _flag(self, found: List[MonitorViolation], t: float, check: str, value: float, bound: float) -> None:
        violation = MonitorViolation(t=t, check=check, value=value, bound=bound)
        found.append(violation)
        logger.error("Invariant violated: %s", violation)

    def check(
        self, record: ObservableRecord, F: np.ndarray | None = None, G: np.ndarray | None = None
    ) -> List[MonitorViolation]:
        t = record.t
        found: List[MonitorViolation] = []

        drift = abs(record.mass_psi - self.mass_psi0)
        if drift > MASS_TOLERANCE * max(1.0, self.mass_psi0):
            self._flag(found, t, "mass_psi drift", drift, MASS_TOLERANCE)
        drift = abs(record.mass_mu - self.mass_mu0)
        if drift > MASS_TOLERANCE * max(1.0, self.mass_mu0):
            self._flag(found, t, "mass_mu drift", drift, MASS_TOLERANCE)

        bound = energy_bound(self.energy0, self.C1, t)
        if not math.isfinite(record.energy_Ed) or record.energy_Ed > bound + BOUND_SLACK * max(1.0, abs(bound)):
            self._flag(found, t, "energy bound", record.energy_Ed, bound)

        bound = oscillation_bound(self.hgrad0, self.C0, t)
        if record.hgrad_norm > bound + BOUND_SLACK * max(1.0, bound):
            self._flag(found, t, "h-oscillation bound", record.hgrad_norm, bound)

        psi_mass_sq = record.mass_psi ** 2
        if F is not None:
            worst = float(np.max(np.abs(F), initial=0.0))
            bound = self.potential.sup_dv_dy * psi_mass_sq
            if worst > bound + BOUND_SLACK * max(1.0, bound):
                self._flag(found, t, "force bound", worst, bound)
        if G is not None and G.size > 1:
            worst = float(np.max(np.abs(np.diff(G))))
            bound = self.potential.sup_dv_dy * self.pg.dy * psi_mass_sq
            if worst > bound + BOUND_SLACK * max(1.0, bound):
                self._flag(found, t, "G Lipschitz bound", worst, bound)

        self.violations.extend(found)
        if found and self.strict:
            raise InvariantViolationError("; ".join(str(v) for v in found))
        return found
