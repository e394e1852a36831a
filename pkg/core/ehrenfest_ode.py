# core/ehrenfest_ode.py
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .initial import build_wave
from .logger import get_logger
from .models import EhrenfestPotential, Trajectory, WaveField
from .potential import CouplingPotential, build_potential, ehrenfest_force_at
from .schrodinger import kinetic_step, potential_phase_step

logger = get_logger(__name__)


def ode_step(
    psi: WaveField, y: float, eta: float, dt: float, V: CouplingPotential
) -> tuple[WaveField, float, float]:
    """
    Symplectic Euler for (y, eta) with the force of the incoming psi,
    free flight of psi, then rotation of psi by V(x, y_new).
    """
    force = ehrenfest_force_at(V, psi, y)
    psi = kinetic_step(psi, dt)
    eta = eta + dt * force
    y = y + dt * eta
    x = psi.grid.points
    upsilon = EhrenfestPotential(
        grid=psi.grid, values=np.broadcast_to(V.v(x, y), x.shape).astype(np.float64)
    )
    return potential_phase_step(psi, upsilon, dt), y, eta


@dataclass
class OdeResult:
    trajectory: Trajectory
    psi: WaveField


def run_ode(
    cfg: RunConfig,
    y0: float,
    eta0: float,
    potential: CouplingPotential | None = None,
    psi: WaveField | None = None,
) -> OdeResult:
    xg = cfg.xgrid()
    V = potential or build_potential(cfg.potential, xg, cfg.phasegrid())
    psi = psi or build_wave(cfg.psi_init.name, xg, cfg.h, cfg.psi_init.params)

    trajectory = Trajectory()
    trajectory.append(0.0, y0, eta0)
    y, eta, t = y0, eta0, 0.0
    steps = cfg.step_count()
    for n in range(steps):
        last = n == steps - 1
        dt = cfg.T - t if last else cfg.dt
        psi, y, eta = ode_step(psi, y, eta, dt, V)
        t = cfg.T if last else (n + 1) * cfg.dt
        trajectory.append(t, y, eta)
    psi.check_finite("psi of the Ehrenfest trajectory run")
    logger.info("Ehrenfest trajectory: (y, eta) = (%.6f, %.6f) at t=%g", y, eta, t)
    return OdeResult(trajectory=trajectory, psi=psi)
