# core/initial.py
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping

import numpy as np

from .errors import ConfigError
from .grids import PhaseGrid, XGrid, l2_norm_discrete, phase_mass
from .models import PhaseDensity, WaveField

Profile = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WKBData:
    """psi = A(x) exp(i S(x)/h); the limit measure is |A|^2 delta(xi - S'(x))."""
    amplitude: Profile
    phase: Profile
    phase_gradient: Profile


def _wkb_cosh(params: Mapping[str, Any]) -> WKBData:
    shift = float(params.get("shift", 0.2))
    width = float(params.get("width", 25.0))
    rate = float(params.get("rate", 5.0))
    return WKBData(
        amplitude=lambda x: np.exp(-width * (x + shift) ** 2),
        phase=lambda x: -np.log(2.0 * np.cosh(rate * (x + shift))) / rate,
        phase_gradient=lambda x: -np.tanh(rate * (x + shift)),
    )


def _wkb_sine(params: Mapping[str, Any]) -> WKBData:
    shift = float(params.get("shift", 0.1))
    width = float(params.get("width", 5.0))
    return WKBData(
        amplitude=lambda x: np.exp(-width * (x + shift) ** 2),
        phase=np.sin,
        phase_gradient=np.cos,
    )


def _gaussian(params: Mapping[str, Any]) -> WKBData:
    x0 = float(params.get("x0", 0.0))
    p0 = float(params.get("p0", 0.0))
    s = float(params.get("sigma", 0.2))
    return WKBData(
        amplitude=lambda x: np.exp(-((x - x0) ** 2) / (4.0 * s ** 2)),
        phase=lambda x: p0 * x,
        phase_gradient=lambda x: np.full_like(x, p0),
    )


WAVE_INITIAL_CONDITIONS: Dict[str, Callable[[Mapping[str, Any]], WKBData]] = {
    "wkb_cosh": _wkb_cosh,
    "wkb_sine": _wkb_sine,
    "gaussian": _gaussian,
}


def wkb_data(name: str, params: Mapping[str, Any] | None = None) -> WKBData:
    builder = WAVE_INITIAL_CONDITIONS.get(name)
    if builder is None:
        raise ConfigError(
            f"unknown wave initial condition '{name}'; expected one of "
            f"{sorted(WAVE_INITIAL_CONDITIONS)}"
        )
    return builder(params or {})


def build_wave(name: str, xg: XGrid, h: float, params: Mapping[str, Any] | None = None) -> WaveField:
    data = wkb_data(name, params)
    x = xg.points
    values = data.amplitude(x) * np.exp(1j * data.phase(x) / h)
    psi = WaveField(grid=xg, values=values, h=h)
    norm = l2_norm_discrete(psi)
    if not np.isfinite(norm) or norm == 0.0:
        raise ConfigError(f"wave initial condition '{name}' vanishes on the grid")
    return psi.with_values(psi.values / norm)


def _bump_profile(s: np.ndarray, radius: float) -> np.ndarray:
    u = s / radius
    inside = np.abs(u) < 1.0
    out = np.zeros_like(u)
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _bump(pg: PhaseGrid, params: Mapping[str, Any]) -> np.ndarray:
    y0 = float(params.get("y0", 0.0))
    eta0 = float(params.get("eta0", 0.0))
    radius = float(params.get("radius", 1.0))
    by = _bump_profile(pg.y - y0, radius)
    be = _bump_profile(pg.eta - eta0, radius)
    return np.outer(by, be)


def _point_mass(pg: PhaseGrid, params: Mapping[str, Any]) -> np.ndarray:
    j, k = pg.nearest_cell(float(params.get("y0", 0.0)), float(params.get("eta0", 0.0)))
    values = np.zeros(pg.shape)
    values[j, k] = 1.0
    return values


PHASE_INITIAL_CONDITIONS: Dict[str, Callable[[PhaseGrid, Mapping[str, Any]], np.ndarray]] = {
    "bump": _bump,
    "point_mass": _point_mass,
}


def build_phase_density(
    name: str, pg: PhaseGrid, params: Mapping[str, Any] | None = None
) -> PhaseDensity:
    builder = PHASE_INITIAL_CONDITIONS.get(name)
    if builder is None:
        raise ConfigError(
            f"unknown phase initial condition '{name}'; expected one of "
            f"{sorted(PHASE_INITIAL_CONDITIONS)}"
        )
    mu = PhaseDensity(grid=pg, values=builder(pg, params or {}))
    mass = phase_mass(mu)
    if mass <= 0.0:
        raise ConfigError(f"phase initial condition '{name}' has no mass on the grid")
    # C_N is fixed numerically so the discrete mass is exactly one
    return mu.with_values(mu.values / mass)
