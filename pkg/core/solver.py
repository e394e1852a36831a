# core/solver.py
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List

import numpy as np

from .config import RunConfig
from .errors import CFLViolationError
from .grids import PhaseGrid, XGrid
from .initial import build_phase_density, build_wave
from .liouville import cfl_max_dt, check_cfl, transport_step
from .logger import get_logger
from .models import ObservableRecord, PhaseDensity, SleState, WaveField
from .monitors import InvariantMonitor, MonitorViolation
from .observables import observe, wigner_moment_errors
from .potential import (
    CouplingPotential,
    build_potential,
    ehrenfest_potential,
    g_integrand,
    mean_force,
)
from .schrodinger import kinetic_step, potential_phase_step

logger = get_logger(__name__)

CHECKPOINT_TOLERANCE = 1e-9


class SLESolver:
    def __init__(
        self,
        potential: CouplingPotential,
        xg: XGrid,
        pg: PhaseGrid,
        splitting: str = "lie",
        liouville_order: int = 1,
        strict_cfl: bool = False,
    ) -> None:
        self.potential = potential
        self.xg = xg
        self.pg = pg
        self.splitting = splitting
        self.liouville_order = liouville_order
        self.strict_cfl = strict_cfl

    def _flow_a(self, psi: WaveField, mu: PhaseDensity, dt: float) -> tuple[WaveField, PhaseDensity]:
        """Free flight of psi; mu transported under the force of the incoming psi."""
        F = mean_force(self.potential, psi, self.pg)
        flown = kinetic_step(psi, dt)
        F_end = mean_force(self.potential, flown, self.pg) if self.liouville_order == 2 else None
        moved = transport_step(
            mu, F, dt, strict=self.strict_cfl, order=self.liouville_order, F_end=F_end
        )
        return flown, moved

    def _flow_b(self, psi: WaveField, mu: PhaseDensity, dt: float) -> WaveField:
        # Upsilon from the already transported mu
        upsilon = ehrenfest_potential(self.potential, mu, self.xg)
        return potential_phase_step(psi, upsilon, dt)

    def lie_step(self, state: SleState, dt: float) -> SleState:
        psi, mu = self._flow_a(state.psi, state.mu, dt)
        psi = self._flow_b(psi, mu, dt)
        return SleState(psi=psi, mu=mu, t=state.t + dt)

    def strang_step(self, state: SleState, dt: float) -> SleState:
        half = 0.5 * dt
        psi, mu = self._flow_a(state.psi, state.mu, half)
        psi = self._flow_b(psi, mu, dt)
        psi, mu = self._flow_a(psi, mu, half)
        return SleState(psi=psi, mu=mu, t=state.t + dt)

    def step(self, state: SleState, dt: float) -> SleState:
        if self.splitting == "strang":
            return self.strang_step(state, dt)
        return self.lie_step(state, dt)


@dataclass
class RunResult:
    config: RunConfig
    records: List[ObservableRecord]
    final: SleState
    violations: List[MonitorViolation] = field(default_factory=list)
    profiles: List[ObservableRecord] = field(default_factory=list)
    wigner: Dict[float, Dict[str, float]] = field(default_factory=dict)
    steps: int = 0


def initial_state(cfg: RunConfig, xg: XGrid, pg: PhaseGrid) -> SleState:
    psi = build_wave(cfg.psi_init.name, xg, cfg.h, cfg.psi_init.params)
    mu = build_phase_density(cfg.mu_init.name, pg, cfg.mu_init.params)
    return SleState(psi=psi, mu=mu, t=0.0)


def _due(times: List[float], t: float) -> List[float]:
    return [c for c in times if c <= t + CHECKPOINT_TOLERANCE]


def run(
    cfg: RunConfig,
    potential: CouplingPotential | None = None,
    state: SleState | None = None,
    observer: Callable[[SleState], None] | None = None,
) -> RunResult:
    """
    Advance the configured initial data to T. The last step is shortened
    when T is not a multiple of dt. Observables are recorded every
    cfg.cadence steps and at the final time; monitors run at each record,
    and observer, when given, sees every recorded state.
    """
    xg = cfg.xgrid()
    pg = cfg.phasegrid()
    V = potential or build_potential(cfg.potential, xg, pg)
    state = state or initial_state(cfg, xg, pg)
    solver = SLESolver(V, xg, pg, cfg.splitting, cfg.liouville_order, cfg.strict_cfl)

    dt_max = cfl_max_dt(pg, V.sup_dv_dy)
    if cfg.dt > dt_max:
        if cfg.strict_cfl:
            raise CFLViolationError(
                f"dt={cfg.dt:.6g} exceeds the box CFL bound {dt_max:.6g} for potential '{V.name}'"
            )
        check_cfl(pg, np.array([V.sup_dv_dy]), cfg.dt, strict=False)

    upsilon = ehrenfest_potential(V, state.mu, xg)
    monitor = InvariantMonitor.start(V, state.psi, state.mu, upsilon, strict=cfg.strict_monitors)
    result = RunResult(config=cfg, records=[], final=state)
    pending_profiles = sorted(cfg.checkpoints)
    pending_wigner = sorted(cfg.wigner_checkpoints)

    def record(current: SleState, final: bool = False) -> None:
        ups = ehrenfest_potential(V, current.mu, xg)
        rec = observe(current.psi, current.mu, ups, current.t, with_kinetic=final)
        monitor.check(rec, F=mean_force(V, current.psi, pg), G=g_integrand(V, current.psi, pg))
        result.records.append(rec if final else rec.without_profiles())
        if observer is not None:
            observer(current)
        logger.debug(
            "t=%.6f mass_psi=%.15f mass_mu=%.15f E_d=%.10g",
            rec.t, rec.mass_psi, rec.mass_mu, rec.energy_Ed,
        )

    def checkpoints(current: SleState) -> None:
        nonlocal pending_profiles, pending_wigner
        for c in _due(pending_profiles, current.t):
            ups = ehrenfest_potential(V, current.mu, xg)
            result.profiles.append(observe(current.psi, current.mu, ups, current.t))
            pending_profiles.remove(c)
        for c in _due(pending_wigner, current.t):
            result.wigner[current.t] = wigner_moment_errors(current.psi)
            pending_wigner.remove(c)

    steps = cfg.step_count()
    logger.info(
        "Run '%s': h=%g dt=%g T=%g steps=%d splitting=%s M=%d J=%d K=%d",
        cfg.label, cfg.h, cfg.dt, cfg.T, steps, cfg.splitting, xg.M, pg.J, pg.K,
    )
    record(state, final=steps == 0)
    checkpoints(state)

    for n in range(steps):
        last = n == steps - 1
        t_next = cfg.T if last else (n + 1) * cfg.dt
        dt = cfg.T - state.t if last else cfg.dt
        state = replace(solver.step(state, dt), t=t_next)
        state.psi.check_finite(f"psi at t={t_next:.6g}")
        state.mu.check_finite(f"mu at t={t_next:.6g}")
        if last or (n + 1) % cfg.cadence == 0:
            record(state, final=last)
        checkpoints(state)

    result.final = state
    result.steps = steps
    result.violations = list(monitor.violations)
    if result.violations:
        logger.error("Run '%s' finished with %d monitor violation(s).", cfg.label, len(result.violations))
    else:
        logger.info("Run '%s' finished at t=%g with no monitor violations.", cfg.label, state.t)
    return result
