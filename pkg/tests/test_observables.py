import math

import numpy as np
import pytest

from core.grids import make_xgrid
from core.initial import build_phase_density, build_wave
from core.models import EhrenfestPotential, WaveField
from core.observables import (
    current_density,
    discrete_energy,
    iter_wigner_rows,
    kinetic_density,
    observe,
    position_density,
    wigner_moment_errors,
    wigner_transform,
)


def _plane_wave(xg, h: float, p: float) -> WaveField:
    return WaveField(grid=xg, values=np.exp(1j * p * xg.points / h) / math.sqrt(2 * math.pi), h=h)


def test_plane_wave_current_is_density_times_momentum(xgrid) -> None:
    psi = _plane_wave(xgrid, 1.0 / 16, 1.0)
    assert np.allclose(current_density(psi), position_density(psi) * 1.0, atol=1e-12)
    assert np.allclose(kinetic_density(psi), 0.5 * position_density(psi), atol=1e-12)


def test_current_vanishes_for_real_data_and_ignores_global_phase(wave) -> None:
    real = WaveField(grid=wave.grid, values=np.abs(wave.values).astype(np.complex128), h=wave.h)
    assert np.allclose(current_density(real), 0.0, atol=1e-12)

    rotated = WaveField(grid=wave.grid, values=np.exp(0.7j) * wave.values, h=wave.h)
    assert np.allclose(current_density(rotated), current_density(wave), atol=1e-12)
    assert np.allclose(kinetic_density(rotated), kinetic_density(wave), atol=1e-12)


def test_energy_of_plane_wave_and_point_mass(xgrid, phasegrid) -> None:
    psi = _plane_wave(xgrid, 1.0 / 16, 1.0)
    mu = build_phase_density("point_mass", phasegrid, {"y0": 0.0, "eta0": 1.0})
    _, k = phasegrid.nearest_cell(0.0, 1.0)
    upsilon = EhrenfestPotential(grid=xgrid, values=np.zeros(xgrid.M))
    expected = 0.5 + 0.5 * phasegrid.eta[k] ** 2
    assert discrete_energy(psi, mu, upsilon) == pytest.approx(expected, rel=1e-12)


def test_observe_collects_profiles(wave, bump, quadratic) -> None:
    upsilon = EhrenfestPotential(grid=wave.grid, values=np.zeros(wave.grid.M))
    record = observe(wave, bump, upsilon, 0.25)
    assert record.t == 0.25
    assert record.mass_psi == pytest.approx(1.0, abs=1e-13)
    assert record.mass_mu == pytest.approx(1.0, abs=1e-13)
    assert record.rho.shape == (wave.grid.M,)
    assert record.kinetic is not None
    scalars = record.without_profiles()
    assert scalars.rho.size == 0 and scalars.kinetic is None
    assert scalars.scalars() == record.scalars()


def test_wigner_zeroth_moment_is_the_density(wave) -> None:
    w = wigner_transform(wave)
    assert w.values.shape == (wave.grid.M, wave.grid.M)
    assert np.allclose(w.moment(0), position_density(wave), atol=1e-12)


def test_wigner_of_gaussian_is_nonnegative() -> None:
    xg = make_xgrid(-math.pi, math.pi, 512)
    # sigma small enough that the correlation has decayed before |z| = L/2
    psi = build_wave("gaussian", xg, 1.0 / 32, {"x0": 0.3, "p0": 0.5, "sigma": 0.15})
    w = wigner_transform(psi)
    assert float(np.min(w.values)) >= -1e-10 * float(np.max(w.values))


def test_wigner_rows_stream_in_chunks(wave) -> None:
    full = wigner_transform(wave)
    rows = np.array([0, 17, 130])
    seen = []
    for block, values, _ in iter_wigner_rows(wave, rows=rows, chunk=2):
        seen.extend(block.tolist())
        assert np.allclose(values, full.values[block], atol=1e-12, rtol=1e-12)
    assert seen == rows.tolist()


def test_wigner_moment_identities_for_wkb_data() -> None:
    h = 1.0 / 64
    xg = make_xgrid(-math.pi, math.pi, 1024)
    psi = build_wave("wkb_cosh", xg, h)
    errors = wigner_moment_errors(psi)
    assert errors["rho"] <= 1e-4
    assert errors["current"] <= 1e-4
    assert errors["kinetic"] <= 1e-3
    assert errors["norm"] <= 1e-8
    assert math.isfinite(errors["kinetic_plain"])


def test_plain_kinetic_mismatch_matches_corrected_one_for_flat_density(xgrid) -> None:
    errors = wigner_moment_errors(_plane_wave(xgrid, 1.0 / 16, 1.0))
    assert errors["kinetic"] <= 1e-10
    assert errors["kinetic_plain"] == pytest.approx(errors["kinetic"], abs=1e-10)
