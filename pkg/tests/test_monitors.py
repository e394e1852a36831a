import math

import numpy as np
import pytest

from core.errors import InvariantViolationError
from core.models import ObservableRecord
from core.monitors import InvariantMonitor, energy_bound, energy_constant, oscillation_bound
from core.potential import ehrenfest_potential


def _record(t: float, mass_psi: float = 1.0, energy: float = 0.5, hgrad: float = 0.1) -> ObservableRecord:
    return ObservableRecord(
        t=t,
        mass_psi=mass_psi,
        mass_mu=1.0,
        energy_Ed=energy,
        hgrad_norm=hgrad,
        rho=np.empty(0),
        current=np.empty(0),
    )


def _monitor(quadratic, phasegrid, strict: bool = False) -> InvariantMonitor:
    return InvariantMonitor(
        potential=quadratic,
        pg=phasegrid,
        mass_psi0=1.0,
        mass_mu0=1.0,
        energy0=0.5,
        hgrad0=0.1,
        strict=strict,
    )


def test_energy_constant_for_quadratic_coupling(quadratic, phasegrid) -> None:
    L = 3 * math.pi
    expected = 2 * L ** 2 + 0.5 * L * phasegrid.deta
    assert energy_constant(quadratic, phasegrid, 1.0) == pytest.approx(expected)


def test_bounds_start_at_initial_values() -> None:
    assert energy_bound(0.7, 12.0, 0.0) == pytest.approx(0.7)
    assert energy_bound(0.7, 12.0, 1.0) == pytest.approx(12.7 * math.e - 12.0)
    assert oscillation_bound(0.2, 3.0, 0.5) == pytest.approx(1.7)


def test_clean_record_passes(quadratic, phasegrid) -> None:
    monitor = _monitor(quadratic, phasegrid)
    F = np.full(phasegrid.J, 0.5 * quadratic.sup_dv_dy)
    G = np.arange(phasegrid.J) * 0.5 * quadratic.sup_dv_dy * phasegrid.dy
    assert monitor.check(_record(0.1), F=F, G=G) == []
    assert monitor.C0 == pytest.approx(quadratic.sup_dv_dx)


def test_mass_drift_is_flagged(quadratic, phasegrid) -> None:
    monitor = _monitor(quadratic, phasegrid)
    found = monitor.check(_record(0.1, mass_psi=1.0 + 1e-6))
    assert [v.check for v in found] == ["mass_psi drift"]
    assert monitor.violations == found


def test_energy_and_oscillation_bounds_are_flagged(quadratic, phasegrid) -> None:
    monitor = _monitor(quadratic, phasegrid)
    found = monitor.check(_record(0.1, energy=1e6, hgrad=1e3))
    assert {v.check for v in found} == {"energy bound", "h-oscillation bound"}


def test_force_and_lipschitz_bounds_are_flagged(quadratic, phasegrid) -> None:
    monitor = _monitor(quadratic, phasegrid)
    F = np.full(phasegrid.J, 2.0 * quadratic.sup_dv_dy)
    G = np.arange(phasegrid.J) * 2.0 * quadratic.sup_dv_dy * phasegrid.dy
    found = monitor.check(_record(0.1), F=F, G=G)
    assert {v.check for v in found} == {"force bound", "G Lipschitz bound"}


def test_strict_monitor_raises(quadratic, phasegrid) -> None:
    monitor = _monitor(quadratic, phasegrid, strict=True)
    with pytest.raises(InvariantViolationError, match="mass_psi drift"):
        monitor.check(_record(0.2, mass_psi=0.9))


def test_start_takes_baselines_from_the_state(quadratic, wave, bump) -> None:
    upsilon = ehrenfest_potential(quadratic, bump, wave.grid)
    monitor = InvariantMonitor.start(quadratic, wave, bump, upsilon)
    assert monitor.mass_psi0 == pytest.approx(1.0)
    assert monitor.mass_mu0 == pytest.approx(1.0)
    assert monitor.hgrad0 > 0.0
    assert monitor.C1 == pytest.approx(energy_constant(quadratic, bump.grid, 1.0))
