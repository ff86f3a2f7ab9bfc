"""INI configuration: vehicle constants, normalization ranges, training,
analysis and synthetic-scenario settings in one human-editable file.

Example::

    [vehicle]
    fuel = diesel
    engine_disp = 1600

    [features]
    mean_speed = 0, 160

    [scenario]
    jitter.aggressive = 1.1
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .features import FEATURE_NAMES, FEATURE_SETS, NormalizationRanges
from .fuel import Fuel, VehicleProfile
from .mlp import TrainConfig
from .synth import ScenarioConfig
from .trace import ANALYSIS_WINDOW_S, TRAINING_WINDOW_S


@dataclass(frozen=True)
class AnalysisConfig:
    window_s: float = ANALYSIS_WINDOW_S
    # windows slower than this on average are idling and get no style label
    min_speed_kmh: float = 3.0


@dataclass(frozen=True)
class Config:
    vehicle: VehicleProfile = field(default_factory=VehicleProfile)
    ranges: NormalizationRanges = field(default_factory=NormalizationRanges)
    feature_set: str = "full"
    train: TrainConfig = field(default_factory=TrainConfig)
    train_window_s: float = TRAINING_WINDOW_S
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.replace("(", "").replace(")", "").split(","))


def _coerce(current, text: str):
    if isinstance(current, bool):
        low = text.strip().lower()
        if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("true", "yes", "1", "on")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if isinstance(current, tuple):
        return _floats(text)
    if isinstance(current, Fuel):
        return Fuel(text.strip().lower())
    return text.strip()


def _apply(obj, section, *, skip=()):
    """Return a copy of dataclass ``obj`` with options from ``section``."""
    names = {f.name for f in fields(obj)}
    changes, nested = {}, {}
    for key, text in section.items():
        if key in skip:
            continue
        base, _, sub = key.partition(".")
        if base not in names:
            raise KeyError(f"unknown option {key!r} in [{section.name}]")
        current = getattr(obj, base)
        if sub:
            if not isinstance(current, dict) or sub not in current:
                raise KeyError(f"unknown option {key!r} in [{section.name}]")
            nested.setdefault(base, dict(current))[sub] = _coerce(current[sub], text)
        else:
            changes[base] = _coerce(current, text)
    return dataclasses.replace(obj, **changes, **nested)


def parse_config(text: str, base: Optional[Config] = None) -> Config:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    cfg = base or Config()
    changes = {}
    if cp.has_section("vehicle"):
        sec = cp["vehicle"]
        fuel = Fuel(sec["fuel"].strip().lower()) if "fuel" in sec else cfg.vehicle.fuel
        start = VehicleProfile.for_fuel(fuel) if "fuel" in sec else cfg.vehicle
        changes["vehicle"] = _apply(start, sec, skip=("fuel",))
    if cp.has_section("features"):
        sec = cp["features"]
        if "feature_set" in sec:
            fs = sec["feature_set"].strip()
            if fs not in FEATURE_SETS:
                raise KeyError(f"unknown feature_set {fs!r}")
            changes["feature_set"] = fs
        changes["ranges"] = _apply(cfg.ranges, sec, skip=("feature_set",))
    if cp.has_section("training"):
        sec = cp["training"]
        if "window_s" in sec:
            changes["train_window_s"] = float(sec["window_s"])
        changes["train"] = _apply(cfg.train, sec, skip=("window_s",))
    if cp.has_section("analysis"):
        changes["analysis"] = _apply(cfg.analysis, cp["analysis"])
    if cp.has_section("scenario"):
        changes["scenario"] = _apply(cfg.scenario, cp["scenario"])
    return dataclasses.replace(cfg, **changes)


def load_config(path, base: Optional[Config] = None) -> Config:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def load_profile(path) -> VehicleProfile:
    """Vehicle constants from the ``[vehicle]`` section of an INI file."""
    return load_config(path).vehicle


def _fmt(v) -> str:
    if isinstance(v, Fuel):
        return v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: Config = Config()) -> str:
    """Render every setting, so the output doubles as a commented template."""
    lines = ["[vehicle]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.vehicle, f.name))}" for f in fields(cfg.vehicle)]
    lines += ["", "[features]", f"feature_set = {cfg.feature_set}"]
    lines += [f"{n} = {_fmt(getattr(cfg.ranges, n))}" for n in FEATURE_NAMES]
    lines += ["", "[training]", f"window_s = {_fmt(float(cfg.train_window_s))}"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.train, f.name))}" for f in fields(cfg.train)]
    lines += ["", "[analysis]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.analysis, f.name))}" for f in fields(cfg.analysis)]
    lines += ["", "[scenario]"]
    for f in fields(cfg.scenario):
        v = getattr(cfg.scenario, f.name)
        if isinstance(v, dict):
            lines += [f"{f.name}.{k} = {_fmt(x)}" for k, x in v.items()]
        else:
            lines.append(f"{f.name} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
