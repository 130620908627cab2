"""Scenario configuration files.

INI-style text with one level of sections::

    [grid]          nx, np, x_half, p_half
    [pump]          k_cal, and either `powers` (comma list, mW) or `step_mw` + `steps`;
                    optional `start_mw`, `theta` (pump phase, radians)
    [environment]   gamma, n_bar
    [mixture]       policy = open-system | fixed; weights = s1, c1, d1 (fixed only)
    [noise]         eta, theta_rms
    [reconstruction] init_modes = zero, fitted; method = revised | dense
    [topology]      origin_radius, samples, floor_frac

Unknown sections or keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .currents import EnvParams
from .evolution import PumpSchedule, Scenario
from .gaussian import NoiseModel
from .grid import make_grid
from .reconstruction import InitMode

BUNDLED = ("weak", "strong")

_SCHEMA: dict[str, dict[str, bool]] = {
    "grid": {"nx": True, "np": True, "x_half": True, "p_half": True},
    "pump": {"k_cal": True, "powers": False, "step_mw": False, "steps": False, "start_mw": False, "theta": False},
    "environment": {"gamma": True, "n_bar": True},
    "mixture": {"policy": False, "weights": False},
    "noise": {"eta": False, "theta_rms": False},
    "reconstruction": {"init_modes": False, "method": False},
    "topology": {"origin_radius": False, "samples": False, "floor_frac": False},
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class TopologySettings:
    origin_radius: float
    samples: int = 64
    floor_frac: float = 1e-3


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    noise: NoiseModel
    init_modes: tuple[InitMode, ...]
    method: str
    topology: TopologySettings


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("wigner_current") / "scenarios" / f"{name}.cfg"))


def resolve_config_path(name: str | Path) -> Path:
    """A file path, or the name of a bundled scenario (``weak``, ``strong``)."""
    p = Path(name)
    if p.exists():
        return p
    stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
    if stem in BUNDLED and p.parent == Path("."):
        return bundled_path(stem)
    raise ConfigError(str(name), "configuration file not found")


def _number(parser, section, key, kind=float, default=None):
    path = f"{section}.{key}"
    if not parser.has_option(section, key):
        if _SCHEMA[section][key]:
            raise ConfigError(path, "required key is missing")
        return default
    raw = parser.get(section, key)
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(path, f"expected {kind.__name__}, got {raw!r}") from None


def _floats(parser, section, key) -> tuple[float, ...] | None:
    if not parser.has_option(section, key):
        return None
    raw = parser.get(section, key)
    try:
        return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"expected a comma-separated list of numbers, got {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(source, f"unparseable configuration ({exc})") from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    for section, keys in _SCHEMA.items():
        if any(keys.values()) and not parser.has_section(section):
            raise ConfigError(section, "required section is missing")
        if not parser.has_section(section):
            parser.add_section(section)

    def guarded(key, build):
        try:
            return build()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None

    grid = guarded("grid", lambda: make_grid(
        _number(parser, "grid", "nx", int),
        _number(parser, "grid", "np", int),
        _number(parser, "grid", "x_half"),
        _number(parser, "grid", "p_half"),
    ))

    k_cal = _number(parser, "pump", "k_cal")
    powers = _floats(parser, "pump", "powers")
    step = _number(parser, "pump", "step_mw")
    steps = _number(parser, "pump", "steps", int)
    if powers is None:
        if step is None or steps is None:
            raise ConfigError("pump.powers", "give either `powers` or both `step_mw` and `steps`")
        schedule = guarded("pump", lambda: PumpSchedule.uniform(step, steps, k_cal, _number(parser, "pump", "start_mw")))
    else:
        schedule = guarded("pump.powers", lambda: PumpSchedule(powers, k_cal))
    theta = _number(parser, "pump", "theta", default=math.pi / 2)

    env = guarded("environment", lambda: EnvParams(
        _number(parser, "environment", "gamma"), _number(parser, "environment", "n_bar")
    ))

    policy = parser.get("mixture", "policy", fallback="open-system").strip()
    weights = _floats(parser, "mixture", "weights")
    if policy == "fixed":
        if weights is None:
            raise ConfigError("mixture.weights", "required when policy = fixed")
    elif policy == "open-system":
        if weights is not None:
            raise ConfigError("mixture.weights", "only allowed when policy = fixed")
    else:
        raise ConfigError("mixture.policy", f"expected 'open-system' or 'fixed', got {policy!r}")
    scenario = guarded("mixture.weights", lambda: Scenario(schedule, env, grid, theta, weights))

    noise = guarded("noise", lambda: NoiseModel(
        _number(parser, "noise", "eta", default=1.0), _number(parser, "noise", "theta_rms", default=0.0)
    ))

    modes_raw = parser.get("reconstruction", "init_modes", fallback="zero, fitted")
    try:
        modes = tuple(InitMode(m.strip()) for m in modes_raw.split(",") if m.strip())
    except ValueError:
        raise ConfigError("reconstruction.init_modes", f"expected values from 'zero', 'fitted', got {modes_raw!r}") from None
    if not modes:
        raise ConfigError("reconstruction.init_modes", "at least one mode is required")
    method = parser.get("reconstruction", "method", fallback="revised").strip()
    if method not in ("revised", "dense"):
        raise ConfigError("reconstruction.method", f"expected 'revised' or 'dense', got {method!r}")

    default_radius = 3 * max(grid.hx, grid.hp)
    topo = guarded("topology", lambda: TopologySettings(
        _number(parser, "topology", "origin_radius", default=default_radius),
        _number(parser, "topology", "samples", int, default=64),
        _number(parser, "topology", "floor_frac", default=1e-3),
    ))
    if topo.origin_radius <= 0 or topo.samples < 8 or not 0 < topo.floor_frac < 1:
        raise ConfigError("topology", "need origin_radius > 0, samples >= 8 and 0 < floor_frac < 1")
    return RunConfig(scenario, noise, modes, method, topo)


def load_config(path: str | Path) -> RunConfig:
    p = resolve_config_path(path)
    return parse_config(p.read_text(encoding="utf-8"), source=str(p))
