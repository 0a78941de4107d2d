"""Run configuration: INI files with sections, or resolved-parameter JSON.

INI layout::

    [params]
    units = Hz          ; Hz (multiplied by 2 pi) or rad/s
    nu = 1e6
    delta = -20e6
    omega = 2e6
    g1 = 1e4
    ...

    [figure2]
    r_list = 1.8, 1.5, 1.3, 1.1, 1.05

Every section other than ``params`` and ``cavity`` holds knobs for the
subcommand of the same name. JSON configs use the same layout with all
frequencies already in rad/s (``"units": "rad/s"``).
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .model import SystemParams
from .regimes import Cavity

FREQUENCY_KEYS = {"nu", "delta", "omega", "g1", "g2", "delta1", "delta2", "gamma", "kappa1", "kappa2", "fsr"}
PARAM_KEYS = {"nu", "delta", "omega", "g1", "g2", "delta1", "delta2", "phi1", "phi2", "theta_c",
              "theta_l", "eta", "gamma", "kappa1", "kappa2"}
CAVITY_KEYS = {"sigma_tilde", "fsr", "finesse"}
UNITS = {"hz": 2 * math.pi, "rad/s": 1.0}


class ConfigError(ValueError):
    """The configuration file cannot be parsed or is incomplete."""


@dataclass
class RunConfig:
    params: SystemParams | None = None
    cavity: Cavity | None = None
    sections: dict[str, dict[str, str]] = field(default_factory=dict)
    scheme1_preset: bool = True

    def section(self, name: str) -> dict[str, str]:
        return self.sections.get(name, {})

    def resolved(self) -> dict:
        """Everything needed to rerun, with frequencies in rad/s."""
        out = {"units": "rad/s", "sections": self.sections}
        if self.params is not None:
            out["params"] = self.params.to_dict()
        if self.cavity is not None:
            out["cavity"] = {"sigma_tilde": self.cavity.sigma_tilde, "fsr": self.cavity.fsr,
                             "finesse": self.cavity.finesse}
        return out


def _number(text: str, key: str):
    text = str(text).strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number") from None


def _scale(units: str) -> float:
    try:
        return UNITS[units.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown units {units!r}; use Hz or rad/s") from None


def _build(raw_params: dict, raw_cavity: dict, units: str, sections: dict) -> RunConfig:
    scale = _scale(units)
    params = None
    if raw_params:
        unknown = set(raw_params) - PARAM_KEYS
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        values = {}
        for key, text in raw_params.items():
            if isinstance(text, list):
                value = complex(text[0], text[1])
            elif isinstance(text, (int, float, complex)):
                value = text
            else:
                value = _number(text, key)
            values[key] = value * scale if key in FREQUENCY_KEYS else value
        for key in ("nu", "delta", "omega", "g1"):
            if key not in values:
                raise ConfigError(f"missing parameter {key!r}")
        params = SystemParams(**values)
    cavity = None
    if raw_cavity:
        unknown = set(raw_cavity) - CAVITY_KEYS
        if unknown:
            raise ConfigError(f"unknown cavity key(s): {', '.join(sorted(unknown))}")
        missing = CAVITY_KEYS - set(raw_cavity)
        if missing:
            raise ConfigError(f"missing cavity key(s): {', '.join(sorted(missing))}")
        vals = {k: float(_number(v, k)) if not isinstance(v, (int, float)) else float(v)
                for k, v in raw_cavity.items()}
        vals["fsr"] *= scale
        cavity = Cavity(**vals)
    return RunConfig(params, cavity, sections)


def load_ini(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    raw_params = dict(parser["params"]) if parser.has_section("params") else {}
    raw_cavity = dict(parser["cavity"]) if parser.has_section("cavity") else {}
    units = raw_params.pop("units", None) or raw_cavity.pop("units", None) or "Hz"
    raw_cavity.pop("units", None)
    sections = {name: dict(parser[name]) for name in parser.sections() if name not in ("params", "cavity")}
    return _build(raw_params, raw_cavity, units, sections)


def load_json(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("JSON config must be an object")
    # metadata sidecars nest the resolved config
    data = data.get("config", data)
    sections = {k: {kk: str(vv) for kk, vv in v.items()} for k, v in data.get("sections", {}).items()}
    return _build(data.get("params", {}), data.get("cavity", {}), data.get("units", "rad/s"), sections)


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return load_json(text)
    return load_ini(text)


def parse_list(text: str, key: str) -> list[float]:
    items = [s for s in str(text).replace(";", ",").split(",") if s.strip()]
    try:
        return [float(s) for s in items]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {text!r}") from None


def get_float(section: dict, key: str, default: float | None = None) -> float:
    if key not in section:
        if default is None:
            raise ConfigError(f"missing setting {key!r}")
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {section[key]!r} as a number") from None


def get_int(section: dict, key: str, default: int) -> int:
    value = get_float(section, key, float(default))
    if value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {section[key]!r}")
    return int(value)
