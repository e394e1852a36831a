import json
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pytest

from core import liouville
from core.config import RunConfig
from core.grids import PhaseGrid, XGrid, make_phasegrid, make_xgrid
from core.initial import build_phase_density, build_wave
from core.models import PhaseDensity, WaveField
from core.potential import CouplingPotential, build_potential

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(autouse=True)
def fresh_cfl_warnings(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(liouville, "_cfl_warned", set())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240613)


@pytest.fixture
def xgrid() -> XGrid:
    return make_xgrid(-math.pi, math.pi, 256)


@pytest.fixture
def phasegrid() -> PhaseGrid:
    return make_phasegrid(-2 * math.pi, 2 * math.pi, 32, -2 * math.pi, 2 * math.pi, 32)


@pytest.fixture
def example1_phasegrid() -> PhaseGrid:
    return make_phasegrid(-2 * math.pi, 2 * math.pi, 128, -2 * math.pi, 2 * math.pi, 128)


@pytest.fixture
def quadratic(xgrid: XGrid, phasegrid: PhaseGrid) -> CouplingPotential:
    return build_potential("quadratic_coupling", xgrid, phasegrid)


@pytest.fixture
def wave(xgrid: XGrid) -> WaveField:
    return build_wave("wkb_cosh", xgrid, 1.0 / 16)


@pytest.fixture
def bump(phasegrid: PhaseGrid) -> PhaseDensity:
    return build_phase_density("bump", phasegrid)


@pytest.fixture
def tiny_config() -> Callable[..., RunConfig]:
    """h = 1/16 gives M = 256; a 32x32 phase grid keeps dt = 0.005 well inside the CFL bound."""
    base = RunConfig(h=1.0 / 16, dt=0.005, T=0.05, J=32, K=32, cadence=1, label="tiny")

    def build(**changes: Any) -> RunConfig:
        return replace(base, **changes)

    return build


@pytest.fixture
def tiny_raw() -> dict:
    return {
        "kind": "run",
        "label": "tiny",
        "h": "1/16",
        "dt": 0.005,
        "T": 0.02,
        "x": {"interval": ["-pi", "pi"], "points_per_wavelength": 16},
        "phase": {"y_interval": ["-2pi", "2pi"], "eta_interval": ["-2pi", "2pi"], "J": 32, "K": 32},
        "output": {"cadence": 2, "checkpoints": [0.02]},
    }


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[dict, str], str]:
    def write(raw: dict, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(raw), encoding="utf-8")
        return str(path)

    return write
