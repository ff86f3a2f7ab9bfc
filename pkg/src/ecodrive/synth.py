"""Seeded generator of labelled synthetic trips.

Each trip is driven by a (route, style) pair. Route sets the speed band and
how often the car stops; style sets how hard it accelerates and brakes,
how long it holds a cruising speed, how restless the throttle is while
cruising and how high it revs. Engine channels come from a longitudinal
power model, and MAF, absolute load and manifold pressure are all solved
from the same air flow so every fuel path gives the same answer.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import BadSpec
from .fuel import VehicleProfile, maf_from_map
from .mlp import ROUTE_LABELS, STYLE_LABELS
from .trace import Sample, Trip, windows, write_trip

KMH = 3.6
G = 9.81


@dataclass(frozen=True)
class ScenarioConfig:
    # (lo, hi) speed envelope in km/h, and the narrower range cruise targets are drawn from
    speed_band: dict = field(default_factory=lambda: {
        "urban": (0.0, 60.0), "suburban": (50.0, 90.0), "highway": (90.0, 130.0)})
    target_range: dict = field(default_factory=lambda: {
        "urban": (18.0, 48.0), "suburban": (60.0, 84.0), "highway": (98.0, 124.0)})
    stop_prob: dict = field(default_factory=lambda: {
        "urban": 0.35, "suburban": 0.0, "highway": 0.0})
    stop_s: tuple = (5, 15)
    # per-style acceleration magnitude for speed changes, m/s^2
    accel: dict = field(default_factory=lambda: {
        "quiet": (0.6, 1.5), "normal": (1.6, 3.0), "aggressive": (3.2, 6.0)})
    hold_s: dict = field(default_factory=lambda: {
        "quiet": (15, 35), "normal": (8, 18), "aggressive": (3, 8)})
    # std of cruise acceleration jitter, m/s^2
    jitter: dict = field(default_factory=lambda: {
        "quiet": 0.1, "normal": 0.55, "aggressive": 1.3})
    rev_offset: dict = field(default_factory=lambda: {
        "quiet": 0.0, "normal": 350.0, "aggressive": 900.0})
    # gear n is used from upshift[n] km/h; ratio in rpm per km/h
    upshift_kmh: tuple = (0.0, 20.0, 35.0, 50.0, 70.0, 90.0)
    gear_ratio: tuple = (100.0, 60.0, 42.0, 32.0, 26.0, 21.0)
    idle_rpm: float = 800.0
    # vehicle body and engine, for the fuel model
    mass_kg: float = 1300.0
    rolling_coeff: float = 0.012
    drag_area: float = 0.65       # Cd * A, m^2
    air_density_kgm3: float = 1.2
    drivetrain_eff: float = 0.9
    engine_eff: float = 0.33
    heating_value: float = 43000.0  # J/g
    max_power_w: float = 80000.0
    # wide-open-throttle manifold pressure; caps air flow at each rpm
    max_map_kpa: float = 100.0
    fmep_kpa: tuple = (100.0, 0.04)  # friction mean effective pressure: a + b * rpm
    iat_c: tuple = (20.0, 35.0)
    # relative std of the speed and rpm noise at noise_level = 1
    noise_scale: float = 0.05


DEFAULT_SCENARIO = ScenarioConfig()


@dataclass(frozen=True)
class ScenarioSpec:
    route: str
    style: str
    duration_s: int = 300
    seed: int = 0
    noise_level: float = 0.1
    with_fuel_rate: bool = False

    def __post_init__(self):
        if self.route not in ROUTE_LABELS:
            raise BadSpec(f"route must be one of {ROUTE_LABELS}, got {self.route!r}")
        if self.style not in STYLE_LABELS:
            raise BadSpec(f"style must be one of {STYLE_LABELS}, got {self.style!r}")
        if self.duration_s < 30:
            raise BadSpec(f"duration must be at least 30 s, got {self.duration_s}")
        if not 0.0 <= self.noise_level <= 0.5:
            raise BadSpec(f"noise_level must lie in [0, 0.5], got {self.noise_level}")


def _speed_profile(spec: ScenarioSpec, cfg: ScenarioConfig, rng) -> np.ndarray:
    lo, hi = cfg.speed_band[spec.route]
    t_lo, t_hi = cfg.target_range[spec.route]
    a_lo, a_hi = cfg.accel[spec.style]
    h_lo, h_hi = (int(x) for x in cfg.hold_s[spec.style])
    stop_lo, stop_hi = (int(x) for x in cfg.stop_s)
    sigma = cfg.jitter[spec.style]
    cap = a_hi

    def next_target():
        if rng.random() < cfg.stop_prob[spec.route]:
            return 0.0
        return rng.uniform(t_lo, t_hi)

    if cfg.stop_prob[spec.route] > 0:
        v, target, moving, hold = 0.0, 0.0, False, int(rng.integers(2, 6))
    else:
        v = target = rng.uniform(t_lo, t_hi)
        moving, hold = False, int(rng.integers(h_lo, h_hi + 1))
    a_mag = rng.uniform(a_lo, a_hi)

    out = np.empty(spec.duration_s)
    for i in range(spec.duration_s):
        out[i] = v
        if moving:
            step = a_mag * KMH
            if abs(target - v) <= step:
                v, moving = target, False
                if target == 0.0:
                    hold = int(rng.integers(stop_lo, stop_hi + 1))
                else:
                    hold = int(rng.integers(h_lo, h_hi + 1))
            else:
                v += math.copysign(step, target - v)
        else:
            if target > 0.0:
                a = rng.normal(0.0, sigma) + 0.3 * (target - v) / KMH
                a = min(max(a, -cap), cap)
                v = min(max(v + a * KMH, max(lo, 1.0)), hi)
            hold -= 1
            if hold <= 0:
                target = next_target()
                a_mag = rng.uniform(a_lo, a_hi)
                moving = True
    return out


def rpm_from_speed(speed_kmh, style: str, cfg: ScenarioConfig = DEFAULT_SCENARIO):
    """Engine speed from road speed through the gear map plus the style's rev offset."""
    speed = np.asarray(speed_kmh, dtype=float)
    gear = np.searchsorted(cfg.upshift_kmh, speed, side="right") - 1
    gear = np.clip(gear, 0, len(cfg.gear_ratio) - 1)
    ratio = np.asarray(cfg.gear_ratio)[gear]
    moving = speed > 0.5
    rpm = np.where(moving, np.maximum(speed * ratio, cfg.idle_rpm) + cfg.rev_offset[style],
                   cfg.idle_rpm)
    return rpm


def fuel_mass_rate(speed_kmh, accel, rpm, profile: VehicleProfile,
                   cfg: ScenarioConfig = DEFAULT_SCENARIO) -> np.ndarray:
    """Fuel burnt in g/s: positive wheel power plus engine friction,
    divided by engine efficiency and heating value."""
    v = np.asarray(speed_kmh, dtype=float) / KMH
    force = (cfg.mass_kg * np.asarray(accel)
             + np.where(v > 0, cfg.mass_kg * G * cfg.rolling_coeff, 0.0)
             + 0.5 * cfg.air_density_kgm3 * cfg.drag_area * v ** 2)
    wheel = np.clip(force * v, 0.0, cfg.max_power_w)
    fmep_pa = (cfg.fmep_kpa[0] + cfg.fmep_kpa[1] * rpm) * 1000.0
    friction = fmep_pa * (profile.engine_disp * 1e-6) * rpm / 120.0
    return (wheel / cfg.drivetrain_eff + friction) / (cfg.engine_eff * cfg.heating_value)


def generate(spec: ScenarioSpec, profile: Optional[VehicleProfile] = None,
             cfg: ScenarioConfig = DEFAULT_SCENARIO) -> Trip:
    profile = profile or VehicleProfile()
    rng = np.random.default_rng(spec.seed)
    base = _speed_profile(spec, cfg, rng)
    n = len(base)
    rel = spec.noise_level * cfg.noise_scale
    speed = np.clip(base * (1.0 + rel * rng.standard_normal(n)), 0.0, 255.0)
    rpm = rpm_from_speed(speed, spec.style, cfg)
    rpm = np.clip(rpm * (1.0 + rel * rng.standard_normal(n)), 0.0, 16383.75)

    accel = np.zeros(n)
    accel[1:] = np.diff(speed) / KMH
    iat = float(rng.uniform(*cfg.iat_c))
    maf = fuel_mass_rate(speed, accel, rpm, profile, cfg) * profile.afr
    maf = np.minimum(maf, maf_from_map(cfg.max_map_kpa, rpm, iat, profile))
    # invert the load and speed-density relations for the same air flow
    abs_load = maf * 120.0 * 100.0 / (profile.air_density * profile.disp_l * rpm)
    temp_k = iat + 273.15
    map_kpa = (maf * 120.0 * temp_k * profile.gas_constant
               / (rpm * profile.volumetric_eff * profile.disp_l * profile.air_molar_mass))
    fuel_rate = maf * 3600.0 / (profile.afr * profile.fuel_density)

    samples = tuple(
        Sample(t=i * 1000, speed=float(speed[i]), rpm=float(rpm[i]), maf=float(maf[i]),
               map=float(map_kpa[i]), iat=iat, abs_load=float(abs_load[i]),
               fuel_rate=float(fuel_rate[i]) if spec.with_fuel_rate else None)
        for i in range(n))
    return Trip(samples, vehicle=profile)


CLASSES = tuple((r, s) for r in ROUTE_LABELS for s in STYLE_LABELS)


@dataclass
class Corpus:
    trips: list
    routes: list
    styles: list
    seeds: list

    def __len__(self):
        return len(self.trips)

    def trip_ids(self) -> list[str]:
        return [f"trip_{i:04d}" for i in range(len(self.trips))]

    def write(self, directory, window_s: float) -> Path:
        """Write one trace CSV per trip plus ``labels.csv``, one label row
        per window of ``window_s`` seconds."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "labels.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trip_id", "window_index", "route_label", "style_label"])
            for tid, trip, r, s in zip(self.trip_ids(), self.trips, self.routes, self.styles):
                write_trip(trip, directory / f"{tid}.csv")
                for k in range(len(windows(trip, window_s))):
                    w.writerow([tid, k, r, s])
        return directory


def trip_seed(seed: int, route: str, style: str, rep: int) -> int:
    ss = np.random.SeedSequence([seed, ROUTE_LABELS.index(route),
                                 STYLE_LABELS.index(style), rep])
    return int(ss.generate_state(1)[0])


def generate_corpus(n_per_class: int, seed: int, duration_s: int = 300,
                    noise_level: float = 0.1, profile: Optional[VehicleProfile] = None,
                    cfg: ScenarioConfig = DEFAULT_SCENARIO) -> Corpus:
    """Balanced corpus: ``n_per_class`` trips for each of the nine
    (route, style) classes, ordered class by class."""
    if n_per_class < 1:
        raise BadSpec("n_per_class must be >= 1")
    corpus = Corpus([], [], [], [])
    for route, style in CLASSES:
        for rep in range(n_per_class):
            s = trip_seed(seed, route, style, rep)
            spec = ScenarioSpec(route, style, duration_s, s, noise_level)
            corpus.trips.append(generate(spec, profile, cfg))
            corpus.routes.append(route)
            corpus.styles.append(style)
            corpus.seeds.append(s)
    return corpus
