import logging
from dataclasses import replace

import numpy as np
import pytest

from core.diff import diff_states
from core.errors import CFLViolationError, InvariantViolationError
from core.models import SleState
from core.potential import build_potential
from core.solver import SLESolver, initial_state, run


def test_zero_final_time_returns_initial_observables(tiny_config) -> None:
    cfg = tiny_config(T=0.0)
    result = run(cfg)
    assert result.steps == 0
    assert len(result.records) == 1
    assert result.records[0].t == 0.0
    assert result.records[0].kinetic is not None
    expected = initial_state(cfg, cfg.xgrid(), cfg.phasegrid())
    assert np.array_equal(result.final.psi.values, expected.psi.values)


def test_mass_is_conserved_at_every_step(tiny_config) -> None:
    result = run(tiny_config())
    assert result.steps == 10
    assert len(result.records) == 11
    for record in result.records:
        assert abs(record.mass_psi - 1.0) <= 1e-10
        assert abs(record.mass_mu - 1.0) <= 1e-10
    assert result.violations == []


@pytest.mark.parametrize("splitting, order", [("lie", 1), ("strang", 1), ("strang", 2)])
def test_monitors_stay_quiet_under_cfl(tiny_config, splitting: str, order: int) -> None:
    result = run(tiny_config(splitting=splitting, liouville_order=order, strict_monitors=True))
    assert result.violations == []


def test_cadence_and_shortened_last_step(tiny_config) -> None:
    result = run(tiny_config(T=0.012, cadence=2))
    assert result.steps == 3
    assert [r.t for r in result.records] == pytest.approx([0.0, 0.01, 0.012])
    assert result.final.t == 0.012
    assert result.records[-1].kinetic is not None
    assert result.records[1].rho.size == 0


def test_runs_are_deterministic(tiny_config) -> None:
    first = run(tiny_config())
    second = run(tiny_config())
    assert np.array_equal(first.final.psi.values, second.final.psi.values)
    assert np.array_equal(first.final.mu.values, second.final.mu.values)


def test_checkpoints_and_observer(tiny_config) -> None:
    seen = []
    cfg = tiny_config(cadence=5, checkpoints=(0.025, 0.05), wigner_checkpoints=(0.0,))
    result = run(cfg, observer=lambda state: seen.append(state.t))
    assert seen == pytest.approx([0.0, 0.025, 0.05])
    assert [p.t for p in result.profiles] == pytest.approx([0.025, 0.05])
    assert all(p.kinetic is not None for p in result.profiles)
    assert list(result.wigner) == [0.0]
    assert result.wigner[0.0]["rho"] < 1e-10


def test_strict_cfl_rejects_a_large_step(tiny_config) -> None:
    with pytest.raises(CFLViolationError):
        run(tiny_config(dt=0.05, T=0.1, strict_cfl=True))


def test_large_step_warns_and_proceeds(tiny_config, caplog: pytest.LogCaptureFixture) -> None:
    with caplog.at_level(logging.WARNING):
        result = run(tiny_config(dt=0.05, T=0.1))
    assert result.steps == 2
    assert any("CFL" in r.getMessage() for r in caplog.records)


def test_strict_monitors_raise_on_violation(tiny_config, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr("core.monitors.MASS_TOLERANCE", -1.0)
    with pytest.raises(InvariantViolationError):
        run(tiny_config(strict_monitors=True))


def _solver(cfg, potential: str = "quadratic_coupling") -> tuple[SLESolver, SleState]:
    xg, pg = cfg.xgrid(), cfg.phasegrid()
    V = build_potential(potential, xg, pg)
    return SLESolver(V, xg, pg, cfg.splitting, cfg.liouville_order), initial_state(cfg, xg, pg)


def test_strang_matches_lie_for_psi_without_coupling(tiny_config) -> None:
    lie, state = _solver(tiny_config(splitting="lie"), "zero")
    strang, _ = _solver(tiny_config(splitting="strang"), "zero")
    dt = 0.005
    assert np.allclose(lie.step(state, dt).psi.values, strang.step(state, dt).psi.values, atol=1e-12)


def test_free_step_is_reversible(tiny_config) -> None:
    solver, state = _solver(tiny_config(splitting="strang"), "zero")
    there = solver.step(state, 0.005)
    back = solver.step(there, -0.005)
    assert np.allclose(back.psi.values, state.psi.values, atol=1e-10)
    assert back.t == pytest.approx(0.0)


def _refinement_ratio(tiny_config, **changes) -> float:
    T, dt, reference = 0.1, 0.004, 0.00025
    runs = {
        step: run(tiny_config(T=T, dt=step, cadence=1000, **changes)).final
        for step in (dt, dt / 2, reference)
    }
    coarse = diff_states(runs[dt], runs[reference]).err_psi
    fine = diff_states(runs[dt / 2], runs[reference]).err_psi
    return coarse / fine


def test_lie_splitting_is_first_order(tiny_config) -> None:
    ratio = _refinement_ratio(tiny_config, splitting="lie", liouville_order=1)
    assert 1.6 <= ratio <= 2.8


def test_strang_with_heun_transport_is_second_order(tiny_config) -> None:
    ratio = _refinement_ratio(tiny_config, splitting="strang", liouville_order=2)
    assert ratio >= 3.0


def test_initial_state_can_be_supplied(tiny_config) -> None:
    cfg = tiny_config(T=0.01)
    start = initial_state(cfg, cfg.xgrid(), cfg.phasegrid())
    shifted = replace(start, mu=start.mu.with_values(np.roll(start.mu.values, 3, axis=0)))
    result = run(cfg, state=shifted)
    assert not np.array_equal(result.final.mu.values, run(cfg).final.mu.values)
