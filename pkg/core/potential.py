# core/potential.py
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict

import numpy as np

from .errors import PotentialError
from .grids import PhaseGrid, XGrid
from .logger import get_logger
from .models import EhrenfestPotential, PhaseDensity, WaveField

logger = get_logger(__name__)

Field2D = Callable[[np.ndarray, np.ndarray], np.ndarray]

FD_STEP = 1e-5
FD_TOLERANCE = 1e-6
FD_SAMPLES = 16


@dataclass(frozen=True)
class CouplingPotential:
    """
    V(x, y) with analytic partial derivatives. The callables must accept
    broadcastable numpy arrays. Sup-norm bounds are box-local.
    """
    name: str
    v: Field2D
    dv_dx: Field2D
    dv_dy: Field2D
    sup_dv_dx: float
    sup_dv_dy: float


@dataclass(frozen=True)
class CouplingTable:
    """V, dV/dx and dV/dy sampled on the (y_j, x_m) mesh, shape (J, M)."""
    v: np.ndarray
    dv_dx: np.ndarray
    dv_dy: np.ndarray


def _mesh(xg: XGrid, pg: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    return np.meshgrid(xg.points, pg.y, indexing="xy")


def _finite_difference_check(
    name: str, v: Field2D, dv_dx: Field2D, dv_dy: Field2D, xg: XGrid, pg: PhaseGrid
) -> None:
    xs = xg.points[:: max(1, xg.M // FD_SAMPLES)]
    ys = pg.y[:: max(1, pg.J // FD_SAMPLES)]
    X, Y = np.meshgrid(xs, ys)
    fd_x = (v(X + FD_STEP, Y) - v(X - FD_STEP, Y)) / (2 * FD_STEP)
    fd_y = (v(X, Y + FD_STEP) - v(X, Y - FD_STEP)) / (2 * FD_STEP)
    for label, fd, exact in (("dv_dx", fd_x, dv_dx(X, Y)), ("dv_dy", fd_y, dv_dy(X, Y))):
        scale = np.maximum(1.0, np.abs(exact))
        worst = float(np.max(np.abs(fd - exact) / scale))
        if worst > FD_TOLERANCE:
            raise PotentialError(
                f"potential '{name}': {label} disagrees with finite differences of v "
                f"(max scaled deviation {worst:.3e})"
            )


def make_potential(
    name: str,
    v: Field2D,
    dv_dx: Field2D,
    dv_dy: Field2D,
    xg: XGrid,
    pg: PhaseGrid,
    check: bool = True,
) -> CouplingPotential:
    """Build a potential, computing its sup bounds on the computational box."""
    X, Y = _mesh(xg, pg)
    values = np.broadcast_to(v(X, Y), X.shape)
    if np.min(values) < 0:
        raise PotentialError(f"potential '{name}' is negative on the computational box")
    if check:
        _finite_difference_check(name, v, dv_dx, dv_dy, xg, pg)

    # The box is closed at the right end for the bound, so include b and d.
    xb = np.append(xg.points, xg.b)
    yb = np.append(pg.y, pg.d)
    XB, YB = np.meshgrid(xb, yb)
    sup_dx = float(np.max(np.abs(np.broadcast_to(dv_dx(XB, YB), XB.shape))))
    sup_dy = float(np.max(np.abs(np.broadcast_to(dv_dy(XB, YB), XB.shape))))
    logger.debug("Potential %s: sup|dV/dx|=%.6g sup|dV/dy|=%.6g", name, sup_dx, sup_dy)
    return CouplingPotential(
        name=name, v=v, dv_dx=dv_dx, dv_dy=dv_dy, sup_dv_dx=sup_dx, sup_dv_dy=sup_dy
    )


def _quadratic(xg: XGrid, pg: PhaseGrid) -> CouplingPotential:
    return make_potential(
        "quadratic_coupling",
        lambda x, y: 0.5 * (x + y) ** 2,
        lambda x, y: x + y,
        lambda x, y: x + y,
        xg,
        pg,
    )


def _zero(xg: XGrid, pg: PhaseGrid) -> CouplingPotential:
    return make_potential(
        "zero",
        lambda x, y: np.zeros(np.broadcast(x, y).shape),
        lambda x, y: np.zeros(np.broadcast(x, y).shape),
        lambda x, y: np.zeros(np.broadcast(x, y).shape),
        xg,
        pg,
    )


POTENTIALS: Dict[str, Callable[[XGrid, PhaseGrid], CouplingPotential]] = {
    "quadratic_coupling": _quadratic,
    "zero": _zero,
}


def build_potential(name: str, xg: XGrid, pg: PhaseGrid) -> CouplingPotential:
    builder = POTENTIALS.get(name)
    if builder is None:
        raise PotentialError(
            f"unknown potential '{name}'; expected one of {sorted(POTENTIALS)}"
        )
    return builder(xg, pg)


@lru_cache(maxsize=8)
def coupling_table(V: CouplingPotential, xg: XGrid, pg: PhaseGrid) -> CouplingTable:
    X, Y = _mesh(xg, pg)
    shape = X.shape
    return CouplingTable(
        v=np.ascontiguousarray(np.broadcast_to(V.v(X, Y), shape), dtype=np.float64),
        dv_dx=np.ascontiguousarray(np.broadcast_to(V.dv_dx(X, Y), shape), dtype=np.float64),
        dv_dy=np.ascontiguousarray(np.broadcast_to(V.dv_dy(X, Y), shape), dtype=np.float64),
    )


def y_marginal(mu: PhaseDensity) -> np.ndarray:
    """Weights sum_k mu_jk * dy * deta for every y_j."""
    return np.sum(mu.values, axis=1) * mu.grid.cell_area


def ehrenfest_potential(V: CouplingPotential, mu: PhaseDensity, xg: XGrid) -> EhrenfestPotential:
    """Upsilon_d(x_m) = sum_jk V(x_m, y_j) mu_jk dy deta."""
    table = coupling_table(V, xg, mu.grid)
    return EhrenfestPotential(grid=xg, values=table.v.T @ y_marginal(mu))


def ehrenfest_gradient(V: CouplingPotential, mu: PhaseDensity, xg: XGrid) -> np.ndarray:
    """d/dx Upsilon_d(x_m) using the exact derivative of V."""
    table = coupling_table(V, xg, mu.grid)
    return table.dv_dx.T @ y_marginal(mu)


def mean_force(V: CouplingPotential, psi: WaveField, pg: PhaseGrid) -> np.ndarray:
    """F_j = -dx * sum_m dV/dy(x_m, y_j) |psi_m|^2."""
    table = coupling_table(V, psi.grid, pg)
    density = np.abs(psi.values) ** 2
    return -psi.grid.dx * (table.dv_dy @ density)


def g_integrand(V: CouplingPotential, psi: WaveField, pg: PhaseGrid) -> np.ndarray:
    """G_j = dx * sum_m V(x_m, y_j) |psi_m|^2, the Ehrenfest potential at y_j."""
    table = coupling_table(V, psi.grid, pg)
    density = np.abs(psi.values) ** 2
    return psi.grid.dx * (table.v @ density)


def ehrenfest_force_at(V: CouplingPotential, psi: WaveField, y: float) -> float:
    """-dV_E/dy at a single classical position y."""
    x = psi.grid.points
    density = np.abs(psi.values) ** 2
    dvdy = np.broadcast_to(V.dv_dy(x, np.full_like(x, y)), x.shape)
    return float(-psi.grid.dx * np.dot(dvdy, density))
