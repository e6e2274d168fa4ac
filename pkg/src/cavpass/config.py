"""Plain-text run configuration.

The format is an INI-style key-value tree (sections in brackets), chosen
because it is human-editable and diff-friendly.  All quantities are
dimensionless in the package units: rates in units of the peak coupling
g_max, lengths in cavity waists w0, times in 1/g_max.  Unknown sections
or keys are rejected.

Example (three-atom scheme):

    [scenario]
    name = three-atom

    [physics]
    kappa = 0.02
    gamma = 0.05
    delta = 20.0

    [motion]
    v = 0.002

    [integrator]
    dt = 0.005
    tolerance = 1e-6

    [output]
    summary = out/summary.csv
    timeseries = out/timeseries.csv
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .dynamics import IntegratorSettings
from .experiments import DIRECT_SETTINGS, LAMBDA_SETTINGS, SCENARIOS, ScenarioSpec
from .model import LaserSchedule


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_SCHEMA = {
    "scenario": {"name"},
    "physics": {"kappa", "gamma", "delta", "scheme"},
    "motion": {"v", "v_max", "x1_start", "separation", "pair_start", "third_offset"},
    "laser": {"schedule", "t_off"},
    "integrator": {"dt", "tolerance", "stride", "max_halvings"},
    "output": {"summary", "timeseries", "timeseries_stride"},
}

_MOTION_KEYS = {
    "two-atom-direct": {"required": {"v_max"}, "optional": set()},
    "two-atom-lambda": {"required": {"v"}, "optional": {"x1_start", "separation"}},
    "three-atom": {"required": {"v"}, "optional": {"pair_start", "third_offset"}},
}

_SCHEMES = {
    "two-atom-direct": {"two-level-direct"},
    "two-atom-lambda": {"lambda", "effective-two-level"},
    "three-atom": {"lambda"},
}


@dataclass
class RunRequest:
    spec: ScenarioSpec
    summary_path: str
    timeseries_path: str | None
    timeseries_stride: int


def _float(section, key, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None


def parse_config(path: str) -> RunRequest:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    if "scenario" not in parser or "name" not in parser["scenario"]:
        raise ConfigError("missing [scenario] name")
    scenario = parser["scenario"]["name"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; known: {sorted(SCENARIOS)}")

    physics = parser["physics"] if "physics" in parser else {}
    params: dict[str, float] = {}
    kappa = _float("physics", "kappa", physics.get("kappa", "0"))
    gamma = _float("physics", "gamma", physics.get("gamma", "0"))
    if kappa < 0 or gamma < 0:
        raise ConfigError("kappa and gamma must be >= 0")
    params["kappa"] = kappa

    scheme = physics.get("scheme")
    if scheme is not None and scheme not in _SCHEMES[scenario]:
        raise ConfigError(f"scheme {scheme!r} is not valid for scenario {scenario!r}")
    if scheme == "two-level-direct":
        scheme = None

    if scenario in ("two-atom-lambda", "three-atom"):
        params["gamma"] = gamma
        if "delta" not in physics:
            raise ConfigError(f"scenario {scenario!r} requires [physics] delta")
        params["delta"] = _float("physics", "delta", physics["delta"])
        if params["delta"] == 0:
            raise ConfigError("delta must be nonzero")
    elif gamma != 0:
        raise ConfigError("two-atom-direct has no atomic decay channel; set gamma = 0")

    motion = parser["motion"] if "motion" in parser else {}
    rules = _MOTION_KEYS[scenario]
    for key in rules["required"]:
        if key not in motion:
            raise ConfigError(f"scenario {scenario!r} requires [motion] {key}")
    for key in motion:
        if key not in rules["required"] | rules["optional"]:
            raise ConfigError(f"[motion] {key} does not apply to scenario {scenario!r}")
        params[key] = _float("motion", key, motion[key])
    speed_key = "v_max" if scenario == "two-atom-direct" else "v"
    if params[speed_key] <= 0:
        raise ConfigError(f"[motion] {speed_key} must be positive")

    if "laser" in parser:
        laser = parser["laser"]
        mode = laser.get("schedule", "never")
        allowed = {"two-atom-direct": {"never"},
                   "two-atom-lambda": {"never", "at-symmetric-point", "at-time"},
                   "three-atom": {"never"}}[scenario]
        if mode not in allowed:
            raise ConfigError(f"laser schedule {mode!r} not valid for {scenario!r}")
        if mode == "at-time":
            if "t_off" not in laser:
                raise ConfigError("at-time schedule requires [laser] t_off")
            t_off = _float("laser", "t_off", laser["t_off"])
            if t_off < 0:
                raise ConfigError("t_off must be >= 0")
            params["schedule"] = LaserSchedule("at-time", t_off)
        elif scenario == "two-atom-lambda":
            params["schedule"] = LaserSchedule(mode)

    defaults = DIRECT_SETTINGS if scenario == "two-atom-direct" else LAMBDA_SETTINGS
    integ = parser["integrator"] if "integrator" in parser else {}
    try:
        settings = IntegratorSettings(
            dt=_float("integrator", "dt", integ.get("dt", str(defaults.dt))),
            tolerance=_float("integrator", "tolerance",
                             integ.get("tolerance", str(defaults.tolerance))),
            snapshot_stride=int(integ.get("stride", str(defaults.snapshot_stride))),
            max_halvings=int(integ.get("max_halvings", str(defaults.max_halvings))),
        )
    except ValueError as exc:
        raise ConfigError(f"bad [integrator] settings: {exc}") from None
    if settings.max_halvings < 0:
        raise ConfigError("max_halvings must be >= 0")

    output = parser["output"] if "output" in parser else {}
    stride = int(output.get("timeseries_stride", "1"))
    if stride < 1:
        raise ConfigError("timeseries_stride must be >= 1")

    return RunRequest(
        spec=ScenarioSpec(scenario, params, settings, scheme),
        summary_path=output.get("summary", "summary.csv"),
        timeseries_path=output.get("timeseries"),
        timeseries_stride=stride,
    )
