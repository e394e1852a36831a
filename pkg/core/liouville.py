# core/liouville.py
import math

import numpy as np

from .errors import CFLViolationError, NumericalError
from .grids import PhaseGrid
from .logger import get_logger
from .models import PhaseDensity

logger = get_logger(__name__)

# (grid, dt) pairs already reported in non-strict mode
_cfl_warned: set[tuple[PhaseGrid, float]] = set()


def upwind_difference(values: np.ndarray, speed: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """
    speed * D u along axis, split by the sign of the speed:
    1/2 (s + |s|)(u_i - u_{i-1})/h + 1/2 (s - |s|)(u_{i+1} - u_i)/h,
    with cyclic neighbours. speed must broadcast against values.
    """
    forward_weight = 0.5 * (speed + np.abs(speed))
    backward_weight = 0.5 * (speed - np.abs(speed))
    behind = (values - np.roll(values, 1, axis=axis)) / spacing
    ahead = (np.roll(values, -1, axis=axis) - values) / spacing
    return forward_weight * behind + backward_weight * ahead


def upwind_dy(mu: PhaseDensity, k: int) -> np.ndarray:
    """eta_k (D_y mu)_{jk} for all j at column k."""
    pg = mu.grid
    column = mu.values[:, k % pg.K]
    return upwind_difference(column, np.asarray(pg.eta[k % pg.K]), pg.dy, axis=0)


def upwind_deta(mu: PhaseDensity, Fj: float, j: int) -> np.ndarray:
    """F_j (D_eta mu)_{jk} for all k at row j."""
    pg = mu.grid
    row = mu.values[j % pg.J, :]
    return upwind_difference(row, np.asarray(Fj), pg.deta, axis=0)


def transport_rate(values: np.ndarray, pg: PhaseGrid, F: np.ndarray) -> np.ndarray:
    """Right-hand side -eta D_y mu - F D_eta mu on the whole grid."""
    eta = pg.eta[np.newaxis, :]
    force = np.asarray(F, dtype=np.float64)[:, np.newaxis]
    return -(
        upwind_difference(values, eta, pg.dy, axis=0)
        + upwind_difference(values, force, pg.deta, axis=1)
    )


def cfl_max_dt(pg: PhaseGrid, L: float) -> float:
    """Largest dt with max|eta| dt/dy + L dt/deta <= 1; inf when nothing moves."""
    rate = float(np.max(np.abs(pg.eta))) / pg.dy + abs(L) / pg.deta
    if rate == 0.0:
        return math.inf
    return 1.0 / rate


def cfl_number(pg: PhaseGrid, F: np.ndarray, dt: float) -> float:
    return abs(dt) * (
        float(np.max(np.abs(pg.eta))) / pg.dy + float(np.max(np.abs(F), initial=0.0)) / pg.deta
    )


def check_cfl(pg: PhaseGrid, F: np.ndarray, dt: float, strict: bool = False) -> float:
    """Return the CFL number; raise in strict mode or warn once otherwise when it exceeds 1."""
    return report_cfl(pg, dt, cfl_number(pg, F, dt), strict)


def report_cfl(pg: PhaseGrid, dt: float, number: float, strict: bool = False) -> float:
    if number <= 1.0:
        return number
    if strict:
        raise CFLViolationError(
            f"time step {dt:.6g} violates the upwind CFL bound (CFL number {number:.4f} > 1)"
        )
    key = (pg, float(dt))
    if key not in _cfl_warned:
        _cfl_warned.add(key)
        logger.warning(
            "Time step %.6g exceeds the upwind CFL bound on a %dx%d phase grid "
            "(CFL number %.4f); positivity is no longer guaranteed.",
            dt, pg.J, pg.K, number,
        )
    return number


def _checked_force(F: np.ndarray, pg: PhaseGrid) -> np.ndarray:
    force = np.asarray(F, dtype=np.float64)
    if force.shape != (pg.J,):
        raise NumericalError(f"force has shape {force.shape}, expected ({pg.J},)")
    if not np.all(np.isfinite(force)):
        raise NumericalError("non-finite entries in the mean-field force")
    return force


def transport_step(
    mu: PhaseDensity,
    F: np.ndarray,
    dt: float,
    strict: bool = False,
    order: int = 1,
    F_end: np.ndarray | None = None,
) -> PhaseDensity:
    """
    One step of d/dt mu = -eta D_y mu - F D_eta mu.

    order=1 is forward Euler with F frozen. order=2 is Heun (SSP-RK2); its
    second stage uses F_end when given, the force at the end of the step.
    Both are conservative; both keep mu >= 0 when the CFL number is <= 1.
    """
    pg = mu.grid
    force = _checked_force(F, pg)
    check_cfl(pg, force, dt, strict)

    first = mu.values + dt * transport_rate(mu.values, pg, force)
    if order == 1:
        return mu.with_values(first)
    if order != 2:
        raise ValueError(f"unsupported transport order {order}")

    force_end = force if F_end is None else _checked_force(F_end, pg)
    if F_end is not None:
        check_cfl(pg, force_end, dt, strict)
    second = first + dt * transport_rate(first, pg, force_end)
    return mu.with_values(0.5 * (mu.values + second))
