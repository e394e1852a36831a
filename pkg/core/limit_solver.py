# core/limit_solver.py
# A: nu drifts in x, mu moves under F0 from nu
# B: nu is kicked by -dU0/dx, U0 from the transported mu
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np

from .config import LimitSettings, RunConfig
from .errors import ConfigError
from .grids import PhaseGrid, XGrid, make_phasegrid, make_xgrid, phase_mass
from .initial import build_phase_density, build_wave, wkb_data
from .liouville import report_cfl, transport_step, upwind_difference
from .logger import get_logger
from .models import LimitRecord, NuField, PhaseDensity, WaveField
from .observables import iter_wigner_rows
from .potential import (
    CouplingPotential,
    build_potential,
    coupling_table,
    ehrenfest_gradient,
    ehrenfest_potential,
)

logger = get_logger(__name__)


def nu_grids(cfg: RunConfig, settings: LimitSettings) -> tuple[XGrid, PhaseGrid]:
    """The (x, xi) grid of nu, sharing [a, b) with the quantum grid."""
    a, b = cfg.x_interval
    lo, hi = settings.xi_interval
    return make_xgrid(a, b, settings.M), make_phasegrid(a, b, settings.M, lo, hi, settings.K)


def _normalised(values: np.ndarray, pg: PhaseGrid, source: str) -> NuField:
    nu = NuField(grid=pg, values=values)
    mass = phase_mass(nu)
    if mass <= 0.0:
        raise ConfigError(f"limit initial density from {source} has no mass on the (x, xi) grid")
    return nu.with_values(values / mass)


def nu_from_wigner(psi: WaveField, pg: PhaseGrid) -> NuField:
    """
    Pool the Wigner transform of psi onto the coarser (x, xi) grid by
    nearest node, clip negative values and renormalise to unit mass.
    Rows are streamed so the full M x M transform is never stored.
    """
    xg = psi.grid
    xi = psi.h * xg.ordered_omega
    dxi = float(xi[1] - xi[0])

    x_index = np.rint((xg.points - pg.c) / pg.dy).astype(np.int64) % pg.J
    k = np.rint((xi - pg.alpha) / pg.deta).astype(np.int64)
    cols = np.nonzero((k >= 0) & (k < pg.K))[0]
    if cols.size == 0:
        raise ConfigError("xi interval of the limit grid misses the resolved Wigner band")
    ks = k[cols]
    starts = np.concatenate(([0], np.nonzero(np.diff(ks))[0] + 1))
    bins = ks[starts]

    pooled = np.zeros((pg.J, bins.size))
    for block, rows, _ in iter_wigner_rows(psi):
        np.add.at(pooled, x_index[block], np.add.reduceat(rows[:, cols], starts, axis=1))

    values = np.zeros(pg.shape)
    values[:, bins] = pooled * (xg.dx * dxi) / pg.cell_area
    negative = float(-np.sum(values[values < 0.0]) * pg.cell_area)
    logger.info("Wigner initial density: clipped negative mass %.3e before renormalising", negative)
    return _normalised(np.clip(values, 0.0, None), pg, "the Wigner transform")


def nu_from_wkb(name: str, params: dict, pg: PhaseGrid) -> NuField:
    """|A(x)|^2 placed at xi = S'(x), split linearly between the two nearest xi nodes."""
    data = wkb_data(name, params)
    x = pg.y
    mass = np.abs(data.amplitude(x)) ** 2
    position = (np.asarray(data.phase_gradient(x), dtype=np.float64) - pg.alpha) / pg.deta
    lower = np.floor(position).astype(np.int64)
    frac = position - lower
    values = np.zeros(pg.shape)
    rows = np.arange(pg.J)
    for offset, weight in ((0, 1.0 - frac), (1, frac)):
        k = lower + offset
        inside = (k >= 0) & (k < pg.K)
        np.add.at(values, (rows[inside], k[inside]), mass[inside] * weight[inside] / pg.deta)
    return _normalised(values, pg, f"WKB data '{name}'")


def initial_nu(cfg: RunConfig, settings: LimitSettings, h: float | None = None) -> NuField:
    _, pg_nu = nu_grids(cfg, settings)
    if settings.init == "wkb":
        return nu_from_wkb(cfg.psi_init.name, dict(cfg.psi_init.params), pg_nu)
    resolved = replace(cfg, h=h if h is not None else cfg.h)
    psi = build_wave(cfg.psi_init.name, resolved.xgrid(), resolved.h, cfg.psi_init.params)
    return nu_from_wigner(psi, pg_nu)


def limit_force(V: CouplingPotential, nu: NuField, pg: PhaseGrid) -> np.ndarray:
    """F0_j = -dx dxi sum dV/dy(x_i, y_j) nu_im."""
    xg = make_xgrid(nu.grid.c, nu.grid.d, nu.grid.J)
    table = coupling_table(V, xg, pg)
    return -xg.dx * (table.dv_dy @ nu.x_marginal)


def limit_energy(V: CouplingPotential, nu: NuField, mu: PhaseDensity) -> float:
    xg = make_xgrid(nu.grid.c, nu.grid.d, nu.grid.J)
    xi = nu.grid.eta
    kinetic = float(np.sum(0.5 * xi[np.newaxis, :] ** 2 * nu.values)) * nu.grid.cell_area
    coupling = xg.dx * float(np.dot(ehrenfest_potential(V, mu, xg).values, nu.x_marginal))
    classical = float(np.sum(0.5 * mu.grid.eta[np.newaxis, :] ** 2 * mu.values)) * mu.grid.cell_area
    return kinetic + coupling + classical


class LimitSolver:
    def __init__(self, potential: CouplingPotential, strict_cfl: bool = False) -> None:
        self.potential = potential
        self.strict_cfl = strict_cfl

    def limit_step(self, nu: NuField, mu: PhaseDensity, dt: float) -> tuple[NuField, PhaseDensity]:
        pg_nu = nu.grid
        F0 = limit_force(self.potential, nu, mu.grid)

        # A: free flight of nu in x, mu under the frozen limit force
        nu = transport_step(nu, np.zeros(pg_nu.J), dt, strict=self.strict_cfl)
        mu = transport_step(mu, F0, dt, strict=self.strict_cfl)

        # B: nu accelerated by -dU0/dx, mu frozen
        xg = make_xgrid(pg_nu.c, pg_nu.d, pg_nu.J)
        speed = -ehrenfest_gradient(self.potential, mu, xg)
        number = abs(dt) * float(np.max(np.abs(speed), initial=0.0)) / pg_nu.deta
        report_cfl(pg_nu, dt, number, self.strict_cfl)
        rate = upwind_difference(nu.values, speed[:, np.newaxis], pg_nu.deta, axis=1)
        nu = nu.with_values(nu.values - dt * rate)
        return nu, mu


@dataclass
class LimitResult:
    records: List[LimitRecord]
    nu: NuField
    mu: PhaseDensity
    init: str
    steps: int = 0
    violations: List[str] = field(default_factory=list)


def _observe(V: CouplingPotential, nu: NuField, mu: PhaseDensity, t: float) -> LimitRecord:
    return LimitRecord(
        t=t,
        mass_nu=phase_mass(nu),
        mass_mu=phase_mass(mu),
        energy=limit_energy(V, nu, mu),
        rho=nu.x_marginal,
    )


def run_limit(
    cfg: RunConfig,
    settings: LimitSettings,
    h_init: float | None = None,
    potential: CouplingPotential | None = None,
) -> LimitResult:
    """
    Drive the limit system from the configured initial data to T with the
    same dt, cadence and last-step rule as the quantum run.
    """
    xg_nu, _ = nu_grids(cfg, settings)
    pg = cfg.phasegrid()
    V = potential or build_potential(cfg.potential, xg_nu, pg)
    nu = initial_nu(cfg, settings, h_init)
    mu = build_phase_density(cfg.mu_init.name, pg, cfg.mu_init.params)
    solver = LimitSolver(V, cfg.strict_cfl)

    steps = cfg.step_count()
    logger.info(
        "Limit run '%s': nu grid %dx%d init=%s dt=%g T=%g steps=%d",
        cfg.label, settings.M, settings.K, settings.init, cfg.dt, cfg.T, steps,
    )
    result = LimitResult(records=[_observe(V, nu, mu, 0.0)], nu=nu, mu=mu, init=settings.init)
    mass_nu0, mass_mu0 = result.records[0].mass_nu, result.records[0].mass_mu

    t = 0.0
    for n in range(steps):
        last = n == steps - 1
        dt = cfg.T - t if last else cfg.dt
        nu, mu = solver.limit_step(nu, mu, dt)
        t = cfg.T if last else (n + 1) * cfg.dt
        nu.check_finite(f"nu at t={t:.6g}")
        mu.check_finite(f"mu at t={t:.6g}")
        if last or (n + 1) % cfg.cadence == 0:
            rec = _observe(V, nu, mu, t)
            result.records.append(rec)
            for label, value, start in (("nu", rec.mass_nu, mass_nu0), ("mu", rec.mass_mu, mass_mu0)):
                if abs(value - start) > 1e-10 * max(1.0, start):
                    message = f"t={t:.6g} mass_{label} drifted from {start:.15g} to {value:.15g}"
                    logger.error("Limit run invariant violated: %s", message)
                    result.violations.append(message)

    result.nu, result.mu, result.steps = nu, mu, steps
    return result


def pool_density(rho: np.ndarray, xg: XGrid, target: XGrid) -> np.ndarray:
    """Cell averages of a fine-grid density on the nodes of a coarser grid sharing [a, b)."""
    index = np.rint((xg.points - target.a) / target.dx).astype(np.int64) % target.M
    pooled = np.bincount(index, weights=rho * xg.dx, minlength=target.M)
    return pooled / target.dx
