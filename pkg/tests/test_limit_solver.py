import math

import numpy as np
import pytest

from core.config import InitialCondition, LimitSettings
from core.errors import ConfigError
from core.grids import make_phasegrid, make_xgrid, phase_mass
from core.initial import build_phase_density, build_wave
from core.limit_solver import (
    LimitSolver,
    initial_nu,
    limit_energy,
    limit_force,
    nu_from_wigner,
    nu_from_wkb,
    nu_grids,
    pool_density,
    run_limit,
)
from core.observables import position_density
from core.potential import build_potential

SETTINGS = LimitSettings(M=32, K=32, xi_interval=(-2 * math.pi, 2 * math.pi), init="wkb")


def test_nu_grid_shares_the_x_interval(tiny_config) -> None:
    xg, pg = nu_grids(tiny_config(), SETTINGS)
    assert (xg.a, xg.b, xg.M) == pytest.approx((-math.pi, math.pi, 32))
    assert (pg.c, pg.d, pg.J, pg.K) == pytest.approx((-math.pi, math.pi, 32, 32))


def test_pool_density_conserves_mass(wave) -> None:
    target = make_xgrid(-math.pi, math.pi, 32)
    rho = position_density(wave)
    pooled = pool_density(rho, wave.grid, target)
    assert target.dx * float(np.sum(pooled)) == pytest.approx(wave.grid.dx * float(np.sum(rho)), rel=1e-12)


def test_wkb_initial_density_sits_on_the_phase_gradient() -> None:
    pg = make_phasegrid(-math.pi, math.pi, 64, -2 * math.pi, 2 * math.pi, 128)
    nu = nu_from_wkb("gaussian", {"x0": 0.0, "p0": pg.eta[80], "sigma": 0.3}, pg)
    assert phase_mass(nu) == pytest.approx(1.0)
    assert float(np.min(nu.values)) >= 0.0
    column_mass = np.sum(nu.values, axis=0) * pg.cell_area
    assert column_mass[80] == pytest.approx(1.0, abs=1e-10)


def test_wigner_initial_density_marginal_matches_rho() -> None:
    h = 1.0 / 64
    psi = build_wave("gaussian", make_xgrid(-math.pi, math.pi, 1024), h, {"x0": 0.2, "p0": 0.5, "sigma": 0.3})
    pg = make_phasegrid(-math.pi, math.pi, 64, -2 * math.pi, 2 * math.pi, 128)
    nu = nu_from_wigner(psi, pg)
    assert phase_mass(nu) == pytest.approx(1.0)
    assert float(np.min(nu.values)) >= 0.0
    pooled = pool_density(position_density(psi), psi.grid, make_xgrid(-math.pi, math.pi, 64))
    assert np.allclose(nu.x_marginal, pooled, atol=1e-6)


def test_wigner_initial_density_needs_overlapping_xi_band() -> None:
    psi = build_wave("gaussian", make_xgrid(-math.pi, math.pi, 64), 1.0 / 64)
    pg = make_phasegrid(-math.pi, math.pi, 16, 50.0, 60.0, 16)
    with pytest.raises(ConfigError, match="xi interval"):
        nu_from_wigner(psi, pg)


def test_initial_nu_dispatches_on_the_method(tiny_config) -> None:
    cfg = tiny_config(psi_init=InitialCondition("gaussian", {"p0": 0.5}))
    wkb = initial_nu(cfg, SETTINGS)
    wigner = initial_nu(cfg, LimitSettings(M=32, K=32, init="wigner"), h=1.0 / 32)
    assert wkb.values.shape == wigner.values.shape == (32, 32)
    assert phase_mass(wkb) == pytest.approx(1.0)
    assert phase_mass(wigner) == pytest.approx(1.0)


def test_limit_step_conserves_both_masses(tiny_config) -> None:
    cfg = tiny_config()
    xg, _ = nu_grids(cfg, SETTINGS)
    pg = cfg.phasegrid()
    V = build_potential(cfg.potential, xg, pg)
    nu = initial_nu(cfg, SETTINGS)
    mu = build_phase_density("bump", pg)
    F0 = limit_force(V, nu, pg)
    assert F0.shape == (pg.J,)
    assert float(np.max(np.abs(F0))) <= V.sup_dv_dy * phase_mass(nu) + 1e-12

    new_nu, new_mu = LimitSolver(V, strict_cfl=True).limit_step(nu, mu, cfg.dt)
    assert phase_mass(new_nu) == pytest.approx(1.0, abs=1e-12)
    assert phase_mass(new_mu) == pytest.approx(1.0, abs=1e-12)
    assert float(np.min(new_nu.values)) >= -1e-14
    assert math.isfinite(limit_energy(V, new_nu, new_mu))


def test_run_limit_records_and_conserves(tiny_config) -> None:
    cfg = tiny_config(cadence=5)
    result = run_limit(cfg, SETTINGS)
    assert result.steps == 10
    assert [r.t for r in result.records] == pytest.approx([0.0, 0.025, 0.05])
    assert result.violations == []
    assert result.init == "wkb"
    for record in result.records:
        assert record.mass_nu == pytest.approx(1.0, abs=1e-10)
        assert record.mass_mu == pytest.approx(1.0, abs=1e-10)
        assert record.rho.shape == (32,)
