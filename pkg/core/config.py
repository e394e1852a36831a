# core/config.py
"""Numbers may be written as fractions or multiples of pi: "1/256", "-2pi", "4pi/128"."""
import json
import math
import os
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Mapping, Tuple

from .errors import ConfigError, GridError
from .grids import PhaseGrid, XGrid, make_phasegrid, make_xgrid
from .initial import PHASE_INITIAL_CONDITIONS, WAVE_INITIAL_CONDITIONS
from .logger import get_logger
from .liouville import cfl_max_dt
from .potential import POTENTIALS, build_potential

logger = get_logger(__name__)

CONFIG_PATH = os.getenv("CONFIG_PATH", "config.json")
OUTPUT_DIR = os.getenv("OUTPUT_DIR", "output")

SPLITTINGS = ("lie", "strang")
EXPERIMENT_KINDS = (
    "single_run",
    "dt_independence",
    "error_vs_h",
    "time_convergence",
    "ap_study",
    "ode_crosscheck",
)
NU_INIT_METHODS = ("wigner", "wkb")

_NUMBER = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<coef>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?\s*\*?\s*(?P<pi>pi)?"
    r"\s*(?:/\s*(?P<den>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?))?\s*$"
)


def parse_number(value: Any, name: str) -> float:
    """Accept a JSON number or a string like '1/256', '-2pi', '4pi/128'."""
    if isinstance(value, bool):
        raise ConfigError(f"field '{name}': expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        result = float(value)
    elif isinstance(value, str):
        m = _NUMBER.match(value)
        if not m or not (m.group("coef") or m.group("pi")):
            raise ConfigError(f"field '{name}': cannot parse number {value!r}")
        result = float(m.group("coef")) if m.group("coef") else 1.0
        if m.group("pi"):
            result *= math.pi
        if m.group("den"):
            den = float(m.group("den"))
            if den == 0.0:
                raise ConfigError(f"field '{name}': division by zero in {value!r}")
            result /= den
        if m.group("sign") == "-":
            result = -result
    else:
        raise ConfigError(f"field '{name}': expected a number, got {value!r}")
    if not math.isfinite(result):
        raise ConfigError(f"field '{name}': value must be finite, got {value!r}")
    return result


@dataclass(frozen=True)
class InitialCondition:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash((self.name, json.dumps(self.params, sort_keys=True)))


@dataclass(frozen=True)
class RunConfig:
    h: float
    dt: float
    T: float
    x_interval: Tuple[float, float] = (-math.pi, math.pi)
    points_per_wavelength: float | None = 16.0
    M: int | None = None
    y_interval: Tuple[float, float] = (-2 * math.pi, 2 * math.pi)
    eta_interval: Tuple[float, float] = (-2 * math.pi, 2 * math.pi)
    J: int = 128
    K: int = 128
    splitting: str = "lie"
    liouville_order: int = 1
    potential: str = "quadratic_coupling"
    psi_init: InitialCondition = InitialCondition("wkb_cosh")
    mu_init: InitialCondition = InitialCondition("bump")
    cadence: int = 10
    checkpoints: Tuple[float, ...] = ()
    wigner_checkpoints: Tuple[float, ...] = ()
    full_state: bool = False
    strict_cfl: bool = False
    strict_monitors: bool = False
    label: str = "run"

    def point_count(self) -> int:
        if self.M is not None:
            return self.M
        a, b = self.x_interval
        assert self.points_per_wavelength is not None
        dx = 2.0 * math.pi * self.h / self.points_per_wavelength
        count = int(round((b - a) / dx))
        if abs(count * dx - (b - a)) > 1e-6 * (b - a):
            raise GridError(
                f"x interval length {b - a:.12g} is not a whole number of cells of size "
                f"2*pi*h/{self.points_per_wavelength:g}"
            )
        return count

    def xgrid(self) -> XGrid:
        return make_xgrid(self.x_interval[0], self.x_interval[1], self.point_count())

    def phasegrid(self) -> PhaseGrid:
        return make_phasegrid(
            self.y_interval[0], self.y_interval[1], self.J,
            self.eta_interval[0], self.eta_interval[1], self.K,
        )

    def step_count(self) -> int:
        if self.T <= 0.0:
            return 0
        return max(1, math.ceil(self.T / self.dt - 1e-9))


@dataclass(frozen=True)
class LimitSettings:
    M: int = 64
    xi_interval: Tuple[float, float] = (-2 * math.pi, 2 * math.pi)
    K: int = 128
    init: str = "wigner"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    base: RunConfig
    h_values: Tuple[float, ...] = ()
    dt_values: Tuple[float, ...] = ()
    test_dt: float = 0.01
    reference_dt: float | None = None
    reference_dt_over_h: float | None = None
    limit: LimitSettings = LimitSettings()
    ode_start: Tuple[float, float] = (0.0, 0.5)
    output_dir: str = OUTPUT_DIR
    full_scale: Dict[str, Any] = field(default_factory=dict)
    substitutions: Tuple[str, ...] = ()

    def __hash__(self) -> int:
        return hash((self.kind, self.base, self.h_values, self.dt_values, self.output_dir))

    def reference_dt_for(self, h: float) -> float:
        if self.reference_dt is not None:
            return self.reference_dt
        if self.reference_dt_over_h is not None:
            return self.reference_dt_over_h * h
        raise ConfigError(f"experiment '{self.kind}': no reference time step configured")


def _require(raw: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in raw:
        raise ConfigError(f"field '{where}{key}': required")
    return raw[key]


def _interval(raw: Any, name: str) -> Tuple[float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigError(f"field '{name}': expected a two-element list")
    lo, hi = parse_number(raw[0], f"{name}[0]"), parse_number(raw[1], f"{name}[1]")
    if hi <= lo:
        raise ConfigError(f"field '{name}': degenerate interval ({lo}, {hi})")
    return lo, hi


def _positive_int(raw: Any, name: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int) or raw <= 0:
        raise ConfigError(f"field '{name}': expected a positive integer, got {raw!r}")
    return raw


def _initial(raw: Any, name: str, registry: Mapping[str, Any]) -> InitialCondition:
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict) or "name" not in raw:
        raise ConfigError(f"field '{name}': expected an object with a 'name'")
    if raw["name"] not in registry:
        raise ConfigError(
            f"field '{name}.name': unknown initial condition '{raw['name']}'; "
            f"expected one of {sorted(registry)}"
        )
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"field '{name}.params': expected an object")
    parsed = {k: parse_number(v, f"{name}.params.{k}") for k, v in params.items()}
    return InitialCondition(name=raw["name"], params=parsed)


def _times(raw: Any, name: str) -> Tuple[float, ...]:
    if not isinstance(raw, list):
        raise ConfigError(f"field '{name}': expected a list of times")
    return tuple(parse_number(v, f"{name}[{i}]") for i, v in enumerate(raw))


def parse_run_config(raw: Mapping[str, Any], where: str = "") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"field '{where or 'run'}': expected an object")

    h = parse_number(_require(raw, "h", where), f"{where}h")
    dt = parse_number(_require(raw, "dt", where), f"{where}dt")
    T = parse_number(_require(raw, "T", where), f"{where}T")

    kwargs: Dict[str, Any] = {"h": h, "dt": dt, "T": T}

    x = raw.get("x", {})
    if not isinstance(x, dict):
        raise ConfigError(f"field '{where}x': expected an object")
    if "interval" in x:
        kwargs["x_interval"] = _interval(x["interval"], f"{where}x.interval")
    if "M" in x:
        kwargs["M"] = _positive_int(x["M"], f"{where}x.M")
        kwargs["points_per_wavelength"] = None
    elif "points_per_wavelength" in x:
        kwargs["points_per_wavelength"] = parse_number(
            x["points_per_wavelength"], f"{where}x.points_per_wavelength"
        )

    phase = raw.get("phase", {})
    if not isinstance(phase, dict):
        raise ConfigError(f"field '{where}phase': expected an object")
    if "y_interval" in phase:
        kwargs["y_interval"] = _interval(phase["y_interval"], f"{where}phase.y_interval")
    if "eta_interval" in phase:
        kwargs["eta_interval"] = _interval(phase["eta_interval"], f"{where}phase.eta_interval")
    for key in ("J", "K"):
        if key in phase:
            kwargs[key] = _positive_int(phase[key], f"{where}phase.{key}")

    if "splitting" in raw:
        kwargs["splitting"] = str(raw["splitting"]).strip().lower()
    if "liouville_order" in raw:
        kwargs["liouville_order"] = _positive_int(raw["liouville_order"], f"{where}liouville_order")
    if "potential" in raw:
        kwargs["potential"] = str(raw["potential"]).strip()
    if "psi_init" in raw:
        kwargs["psi_init"] = _initial(raw["psi_init"], f"{where}psi_init", WAVE_INITIAL_CONDITIONS)
    if "mu_init" in raw:
        kwargs["mu_init"] = _initial(raw["mu_init"], f"{where}mu_init", PHASE_INITIAL_CONDITIONS)

    output = raw.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError(f"field '{where}output': expected an object")
    if "cadence" in output:
        kwargs["cadence"] = _positive_int(output["cadence"], f"{where}output.cadence")
    if "checkpoints" in output:
        kwargs["checkpoints"] = _times(output["checkpoints"], f"{where}output.checkpoints")
    if "wigner_checkpoints" in output:
        kwargs["wigner_checkpoints"] = _times(
            output["wigner_checkpoints"], f"{where}output.wigner_checkpoints"
        )
    if "full_state" in output:
        kwargs["full_state"] = bool(output["full_state"])

    for key in ("strict_cfl", "strict_monitors"):
        if key in raw:
            kwargs[key] = bool(raw[key])
    if "label" in raw:
        kwargs["label"] = str(raw["label"])

    cfg = RunConfig(**kwargs)
    validate_run_config(cfg, where)
    return cfg


def validate_run_config(cfg: RunConfig, where: str = "") -> None:
    if not 0.0 < cfg.h <= 1.0:
        raise ConfigError(f"field '{where}h': must satisfy 0 < h <= 1, got {cfg.h}")
    if cfg.dt <= 0.0:
        raise ConfigError(f"field '{where}dt': must be positive, got {cfg.dt}")
    if cfg.T < 0.0:
        raise ConfigError(f"field '{where}T': must be non-negative, got {cfg.T}")
    if 0.0 < cfg.T < cfg.dt:
        raise ConfigError(f"field '{where}T': must be zero or at least dt ({cfg.dt}), got {cfg.T}")
    if cfg.splitting not in SPLITTINGS:
        raise ConfigError(f"field '{where}splitting': expected one of {SPLITTINGS}, got '{cfg.splitting}'")
    if cfg.liouville_order not in (1, 2):
        raise ConfigError(f"field '{where}liouville_order': expected 1 or 2, got {cfg.liouville_order}")
    if cfg.potential not in POTENTIALS:
        raise ConfigError(
            f"field '{where}potential': unknown potential '{cfg.potential}'; "
            f"expected one of {sorted(POTENTIALS)}"
        )
    if cfg.M is None and (cfg.points_per_wavelength is None or cfg.points_per_wavelength <= 0):
        raise ConfigError(f"field '{where}x': give either M or a positive points_per_wavelength")
    for t in cfg.checkpoints + cfg.wigner_checkpoints:
        if not 0.0 <= t <= cfg.T:
            raise ConfigError(f"field '{where}output': checkpoint {t} outside [0, T={cfg.T}]")
    try:
        cfg.xgrid()
        cfg.phasegrid()
    except GridError as e:
        raise GridError(f"field '{where}x/phase': {e}") from e


def parse_experiment(raw: Mapping[str, Any]) -> ExperimentSpec:
    kind = str(raw.get("kind", "")).strip().lower()
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"field 'kind': expected one of {('run',) + EXPERIMENT_KINDS}, got '{kind}'")
    base = parse_run_config(_require(raw, "base", ""), "base.")

    kwargs: Dict[str, Any] = {"kind": kind, "base": base}
    for key in ("h_values", "dt_values"):
        if key in raw:
            values = raw[key]
            if not isinstance(values, list) or not values:
                raise ConfigError(f"field '{key}': expected a non-empty list")
            kwargs[key] = tuple(parse_number(v, f"{key}[{i}]") for i, v in enumerate(values))
    for key in ("test_dt", "reference_dt", "reference_dt_over_h"):
        if key in raw:
            kwargs[key] = parse_number(raw[key], key)
    if "limit" in raw:
        limit = raw["limit"]
        if not isinstance(limit, dict):
            raise ConfigError("field 'limit': expected an object")
        settings: Dict[str, Any] = {}
        if "M" in limit:
            settings["M"] = _positive_int(limit["M"], "limit.M")
        if "K" in limit:
            settings["K"] = _positive_int(limit["K"], "limit.K")
        if "xi_interval" in limit:
            settings["xi_interval"] = _interval(limit["xi_interval"], "limit.xi_interval")
        if "init" in limit:
            settings["init"] = str(limit["init"]).strip().lower()
        kwargs["limit"] = LimitSettings(**settings)
    if "ode_start" in raw:
        start = raw["ode_start"]
        if not isinstance(start, dict):
            raise ConfigError("field 'ode_start': expected an object with y0 and eta0")
        kwargs["ode_start"] = (
            parse_number(start.get("y0", 0.0), "ode_start.y0"),
            parse_number(start.get("eta0", 0.0), "ode_start.eta0"),
        )
    if "output_dir" in raw:
        kwargs["output_dir"] = str(raw["output_dir"])
    if "full_scale" in raw:
        if not isinstance(raw["full_scale"], dict):
            raise ConfigError("field 'full_scale': expected an object of overrides")
        kwargs["full_scale"] = dict(raw["full_scale"])
    if "substitutions" in raw:
        kwargs["substitutions"] = tuple(str(s) for s in raw["substitutions"])

    spec = ExperimentSpec(**kwargs)
    validate_experiment(spec)
    return spec


def validate_experiment(spec: ExperimentSpec) -> None:
    needs_h = ("dt_independence", "error_vs_h", "ap_study")
    if spec.kind in needs_h and not spec.h_values:
        raise ConfigError(f"field 'h_values': required for '{spec.kind}'")
    if spec.kind == "time_convergence":
        if not spec.dt_values:
            raise ConfigError("field 'dt_values': required for 'time_convergence'")
        if spec.reference_dt is None and spec.reference_dt_over_h is None:
            raise ConfigError("field 'reference_dt': required for 'time_convergence'")
        ref = spec.reference_dt_for(spec.base.h)
        if ref >= min(spec.dt_values):
            raise ConfigError(
                f"field 'reference_dt': {ref} must be smaller than every tested dt"
            )
    if spec.kind in ("dt_independence", "error_vs_h"):
        if spec.reference_dt is None and spec.reference_dt_over_h is None:
            raise ConfigError(f"field 'reference_dt_over_h': required for '{spec.kind}'")
        for h in spec.h_values:
            if spec.reference_dt_for(h) >= spec.test_dt:
                raise ConfigError(
                    f"field 'reference_dt': reference step for h={h} must be smaller than test_dt"
                )
    for h in spec.h_values:
        validate_run_config(replace(spec.base, h=h), "base.")
    for dt in spec.dt_values:
        if dt <= 0.0:
            raise ConfigError(f"field 'dt_values': time steps must be positive, got {dt}")
    if spec.limit.init not in NU_INIT_METHODS:
        raise ConfigError(f"field 'limit.init': expected one of {NU_INIT_METHODS}")
    if spec.limit.M % 2:
        raise ConfigError(f"field 'limit.M': must be even, got {spec.limit.M}")


def apply_full_scale(spec: ExperimentSpec) -> ExperimentSpec:
    """Swap desk-scale substitutions for the full-scale parameters."""
    if not spec.full_scale:
        logger.info("Experiment '%s' has no full-scale overrides; running as configured.", spec.kind)
        return spec
    merged = dict(spec.full_scale)
    raw: Dict[str, Any] = {"kind": spec.kind, "base": config_to_raw(spec.base)}
    for key in ("h_values", "dt_values"):
        values = getattr(spec, key)
        if values:
            raw[key] = list(values)
    for key in ("test_dt", "reference_dt", "reference_dt_over_h"):
        value = getattr(spec, key)
        if value is not None:
            raw[key] = value
    raw["limit"] = {
        "M": spec.limit.M, "K": spec.limit.K,
        "xi_interval": list(spec.limit.xi_interval), "init": spec.limit.init,
    }
    raw["ode_start"] = {"y0": spec.ode_start[0], "eta0": spec.ode_start[1]}
    raw["output_dir"] = spec.output_dir
    base_overrides = merged.pop("base", {})
    raw["base"].update(base_overrides)
    if "reference_dt" in merged:
        raw.pop("reference_dt_over_h", None)
    raw.update(merged)
    return parse_experiment(raw)


def config_to_raw(cfg: RunConfig) -> Dict[str, Any]:
    """Inverse of parse_run_config, used for overrides and echoing."""
    x: Dict[str, Any] = {"interval": list(cfg.x_interval)}
    if cfg.M is not None:
        x["M"] = cfg.M
    else:
        x["points_per_wavelength"] = cfg.points_per_wavelength
    return {
        "h": cfg.h,
        "dt": cfg.dt,
        "T": cfg.T,
        "x": x,
        "phase": {
            "y_interval": list(cfg.y_interval),
            "eta_interval": list(cfg.eta_interval),
            "J": cfg.J,
            "K": cfg.K,
        },
        "splitting": cfg.splitting,
        "liouville_order": cfg.liouville_order,
        "potential": cfg.potential,
        "psi_init": {"name": cfg.psi_init.name, "params": dict(cfg.psi_init.params)},
        "mu_init": {"name": cfg.mu_init.name, "params": dict(cfg.mu_init.params)},
        "output": {
            "cadence": cfg.cadence,
            "checkpoints": list(cfg.checkpoints),
            "wigner_checkpoints": list(cfg.wigner_checkpoints),
            "full_state": cfg.full_state,
        },
        "strict_cfl": cfg.strict_cfl,
        "strict_monitors": cfg.strict_monitors,
        "label": cfg.label,
    }


def resolve_config(cfg: RunConfig) -> Dict[str, Any]:
    """All settings with defaults made explicit, plus derived grid quantities."""
    xg = cfg.xgrid()
    pg = cfg.phasegrid()
    resolved = config_to_raw(cfg)
    resolved["derived"] = {
        "M": xg.M,
        "dx": xg.dx,
        "dx_formula": (
            f"2*pi*h/{cfg.points_per_wavelength:g}" if cfg.M is None else "(b-a)/M"
        ),
        "dy": pg.dy,
        "deta": pg.deta,
        "steps": cfg.step_count(),
        "max_abs_eta": float(max(abs(pg.alpha), abs(pg.eta[-1]))),
        "cfl_max_dt": cfl_max_dt(pg, build_potential(cfg.potential, xg, pg).sup_dv_dy),
    }
    return resolved


def resolve_experiment(spec: ExperimentSpec) -> Dict[str, Any]:
    data = asdict(spec)
    data["base"] = resolve_config(spec.base)
    return data


def load_config(path: str = CONFIG_PATH) -> RunConfig | ExperimentSpec:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found at {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")

    kind = str(raw.get("kind", "run")).strip().lower()
    if kind == "run":
        cfg: RunConfig | ExperimentSpec = parse_run_config(raw)
    else:
        cfg = parse_experiment(raw)
    logger.debug("Loaded %s config from %s", kind, path)
    return cfg


def h_label(h: float) -> str:
    """'1/256' style label for reciprocal-integer h, else the repr."""
    inverse = 1.0 / h
    if abs(inverse - round(inverse)) < 1e-9:
        return f"1/{int(round(inverse))}"
    return repr(h)


def sweep_values(spec: ExperimentSpec) -> List[float]:
    return list(spec.h_values or spec.dt_values)
