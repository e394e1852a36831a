import math

import numpy as np
import pytest

from core.config import InitialCondition
from core.ehrenfest_ode import ode_step, run_ode
from core.initial import build_wave
from core.potential import ehrenfest_force_at
from core.schrodinger import kinetic_step
from core.solver import run
from experiments.ode_crosscheck import compare, cyclic_distance, peak_cell


def test_free_particle_moves_in_a_straight_line(tiny_config) -> None:
    cfg = tiny_config(potential="zero", T=0.05)
    result = run_ode(cfg, y0=0.5, eta0=-1.5)
    assert result.trajectory.t[-1] == pytest.approx(0.05)
    assert result.trajectory.eta == pytest.approx([-1.5] * 11)
    assert result.trajectory.y[-1] == pytest.approx(0.5 - 1.5 * 0.05)


def test_single_step_uses_the_incoming_wave_for_the_force(quadratic, wave) -> None:
    y, eta, dt = 0.3, 0.7, 0.01
    force = ehrenfest_force_at(quadratic, wave, y)
    psi, y_new, eta_new = ode_step(wave, y, eta, dt, quadratic)
    assert eta_new == pytest.approx(eta + dt * force)
    assert y_new == pytest.approx(y + dt * eta_new)
    flown = kinetic_step(wave, dt)
    assert np.allclose(np.abs(psi.values), np.abs(flown.values), atol=1e-14)
    expected = np.exp(-1j * 0.5 * (wave.grid.points + y_new) ** 2 * dt / wave.h) * flown.values
    assert np.allclose(psi.values, expected, atol=1e-12)


def test_centred_wave_gives_a_harmonic_trajectory(quadratic, xgrid) -> None:
    # with <x> = 0 the quadratic coupling pulls with -y, so y'' = -y
    psi0 = build_wave("gaussian", xgrid, 1.0 / 16, {"x0": 0.0, "p0": 0.0, "sigma": 0.25})
    assert ehrenfest_force_at(quadratic, psi0, 0.0) == pytest.approx(0.0, abs=1e-12)
    y, eta, dt = 0.5, 0.2, 1e-3
    for _ in range(1000):
        _, y, eta = ode_step(psi0, y, eta, dt, quadratic)
    assert y == pytest.approx(0.5 * math.cos(1.0) + 0.2 * math.sin(1.0), abs=2e-3)
    assert eta == pytest.approx(-0.5 * math.sin(1.0) + 0.2 * math.cos(1.0), abs=2e-3)


def test_quadratic_force_is_linear_in_y(quadratic, wave) -> None:
    centre = float(wave.grid.dx * np.sum(wave.grid.points * np.abs(wave.values) ** 2))
    assert ehrenfest_force_at(quadratic, wave, -centre) == pytest.approx(0.0, abs=1e-10)
    assert ehrenfest_force_at(quadratic, wave, 1.0 - centre) == pytest.approx(-1.0, abs=1e-10)


def test_cyclic_distance_wraps() -> None:
    assert cyclic_distance(0, 127, 128) == 1
    assert cyclic_distance(10, 14, 128) == 4
    assert cyclic_distance(3, 3, 8) == 0


def test_peak_cell_and_compare(phasegrid) -> None:
    values = np.zeros(phasegrid.shape)
    values[4, 30] = 2.0
    peak = peak_cell(values)
    assert peak == (4, 30)
    row = compare(phasegrid, 0.1, phasegrid.y[5], phasegrid.eta[31], peak)
    assert row[3:5] == [5, 31]
    assert row[-1] == 1
    wrapped = compare(phasegrid, 0.1, phasegrid.y[5], phasegrid.eta[0], peak)
    assert wrapped[-1] == 2


def test_point_mass_run_tracks_the_trajectory(tiny_config) -> None:
    point = InitialCondition("point_mass", {"y0": 0.0, "eta0": 0.5})
    cfg = tiny_config(mu_init=point, T=0.05)
    result = run(cfg)
    ode = run_ode(cfg, 0.0, 0.5)
    pg = cfg.phasegrid()
    j, k = peak_cell(result.final.mu.values)
    j_ode, k_ode = pg.nearest_cell(ode.trajectory.y[-1], ode.trajectory.eta[-1])
    assert cyclic_distance(j, j_ode, pg.J) <= 1
    assert cyclic_distance(k, k_ode, pg.K) <= 1
