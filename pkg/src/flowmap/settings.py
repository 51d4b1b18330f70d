"""Settings: one scalar failure rate fanned out to every location type.

All built-in settings are linear, gamma_loc = m_loc * gamma, which keeps
them monotone and zero at the origin.  Arbitrary multiplier tables can be
loaded from a JSON file for anything else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import SettingError
from .poly import FailureVector


@dataclass(frozen=True)
class NamedSetting:
    """Per-location multipliers applied to a single scalar rate."""

    name: str
    multipliers: Mapping[str, float]

    def __post_init__(self):
        if any(m < 0 for m in self.multipliers.values()):
            raise SettingError(f"setting {self.name!r} has a negative multiplier")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self.multipliers)

    def apply(self, gamma: float) -> FailureVector:
        return FailureVector({name: m * gamma for name, m in self.multipliers.items()})

    def __call__(self, gamma: float) -> FailureVector:
        return self.apply(gamma)


def diagonal(variables: Iterable[str]) -> NamedSetting:
    """Every location gets the same rate."""
    return NamedSetting("diagonal", {v: 1.0 for v in variables})


def steane(variables: Iterable[str]) -> NamedSetting:
    """Every location gets the full rate except the wait, which gets a tenth."""
    variables = tuple(variables)
    if "w" not in variables:
        raise SettingError("the steane setting needs a wait location named 'w'")
    return NamedSetting("steane", {v: (0.1 if v == "w" else 1.0) for v in variables})


def axis(variables: Iterable[str], location: str) -> NamedSetting:
    """Only the named location fails; every other rate is zero."""
    variables = tuple(variables)
    if location not in variables:
        raise SettingError(f"axis location {location!r} is not one of {variables}")
    return NamedSetting(f"axis:{location}", {v: (1.0 if v == location else 0.0) for v in variables})


def from_multipliers(name: str, multipliers: Mapping[str, float]) -> NamedSetting:
    return NamedSetting(name, dict(multipliers))


def load_setting(path) -> NamedSetting:
    """Read a ``{"name": ..., "multipliers": {...}}`` JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "multipliers" not in doc:
        raise SettingError(f"{path}: setting file needs a 'multipliers' object")
    mult = doc["multipliers"]
    if not isinstance(mult, dict) or not all(isinstance(v, (int, float)) for v in mult.values()):
        raise SettingError(f"{path}: multipliers must map location names to numbers")
    return NamedSetting(str(doc.get("name", "custom")), {k: float(v) for k, v in mult.items()})


def save_setting(setting: NamedSetting, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"name": setting.name, "multipliers": dict(setting.multipliers)}, fh, indent=2)
        fh.write("\n")


def resolve(spec: str, variables: Iterable[str]) -> NamedSetting:
    """Build a setting from a CLI-style spec: a builtin name, ``axis:<loc>``,
    or ``file:<path>``."""
    variables = tuple(variables)
    if spec == "diagonal":
        return diagonal(variables)
    if spec == "steane":
        return steane(variables)
    if spec.startswith("axis:"):
        return axis(variables, spec.split(":", 1)[1])
    if spec.startswith("file:"):
        setting = load_setting(spec.split(":", 1)[1])
        missing = set(variables) - set(setting.multipliers)
        if missing:
            raise SettingError(f"setting {setting.name!r} lacks multipliers for {sorted(missing)}")
        return NamedSetting(setting.name, {v: setting.multipliers[v] for v in variables})
    raise SettingError(f"unknown setting {spec!r} (use diagonal, steane, axis:<loc>, file:<path>)")
