"""Fuel flow, consumption and CO2 estimates from engine channels.

Fuel flow is taken from the first usable source, in this order:

1. engine fuel rate (PID 5E), used directly;
2. mass air flow (PID 10);
3. air flow inferred from absolute load and rpm;
4. air flow inferred from manifold pressure, rpm and intake temperature
   (speed-density).

Air flow is turned into fuel flow through the air-to-fuel ratio and the
fuel density.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidTemperature, NoUsableChannels
from .trace import Sample, Trip

ABSOLUTE_ZERO_C = -273.15
CO2_PER_CARBON = 3.67  # 44/12, kg CO2 per kg carbon


class Fuel(enum.Enum):
    GASOLINE = "gasoline"
    DIESEL = "diesel"


_FUEL_DEFAULTS = {
    Fuel.GASOLINE: dict(afr=14.7, fuel_density=820.0,
                        carbon_fraction=0.866, co2_fuel_density=0.74),
    Fuel.DIESEL: dict(afr=14.5, fuel_density=720.0,
                      carbon_fraction=0.857, co2_fuel_density=0.84),
}


@dataclass(frozen=True)
class VehicleProfile:
    """Static vehicle constants.

    ``fuel_density`` (g/l) converts air flow to fuel volume.
    ``co2_fuel_density`` (kg/l) converts fuel volume to mass for the CO2
    balance. The two are kept apart on purpose: the diesel figures used for
    each step differ (720 g/l and 0.84 kg/l). The gasoline carbon fraction and
    CO2 density are generic textbook values, override them when known.
    """
    fuel: Fuel = Fuel.GASOLINE
    afr: float = 14.7
    fuel_density: float = 820.0
    carbon_fraction: float = 0.866
    co2_fuel_density: float = 0.74
    engine_disp: float = 2000.0
    volumetric_eff: float = 0.85
    air_density: float = 1.184        # g/l
    air_molar_mass: float = 28.97     # g/mol
    gas_constant: float = 8.314       # J/(mol K)

    def __post_init__(self):
        if self.engine_disp <= 0:
            raise ValueError("engine_disp must be positive")
        if not 0 < self.volumetric_eff <= 1:
            raise ValueError("volumetric_eff must lie in (0, 1]")
        if not 0 <= self.carbon_fraction <= 1:
            raise ValueError("carbon_fraction must lie in [0, 1]")
        if self.afr <= 0 or self.fuel_density <= 0:
            raise ValueError("afr and fuel_density must be positive")

    @classmethod
    def for_fuel(cls, fuel: Fuel | str, **overrides) -> "VehicleProfile":
        fuel = Fuel(fuel)
        return cls(fuel=fuel, **{**_FUEL_DEFAULTS[fuel], **overrides})

    @classmethod
    def gasoline(cls, **overrides) -> "VehicleProfile":
        return cls.for_fuel(Fuel.GASOLINE, **overrides)

    @classmethod
    def diesel(cls, **overrides) -> "VehicleProfile":
        return cls.for_fuel(Fuel.DIESEL, **overrides)

    @property
    def disp_l(self) -> float:
        return self.engine_disp / 1000.0


class Method(enum.Enum):
    DIRECT_PID = "DirectPid"
    FROM_MAF = "FromMaf"
    MAF_FROM_LOAD = "MafFromLoad"
    MAF_FROM_MAP = "MafFromMap"


@dataclass(frozen=True)
class FuelEstimate:
    fuel_flow: float                 # l/h
    method: Method
    consumption: Optional[float]     # l/100km, None while stationary

    @property
    def defined(self) -> bool:
        return self.consumption is not None


def fuel_flow_from_maf(maf, profile: VehicleProfile):
    """Fuel flow in l/h for an air flow in g/s."""
    return maf * 3600.0 / (profile.afr * profile.fuel_density)


def maf_from_load(abs_load, rpm, profile: VehicleProfile):
    """Air flow in g/s from absolute load (%) and rpm.

    100 % load means one displacement of air at standard density per intake
    stroke; a four-stroke engine does rpm/120 intake cycles per second.
    """
    return (abs_load / 100.0) * profile.air_density * profile.disp_l * rpm / 120.0


def maf_from_map(map_kpa, rpm, iat, profile: VehicleProfile):
    """Speed-density air flow in g/s (ideal gas, kPa * l = J)."""
    iat = np.asarray(iat, dtype=float)
    if np.any(iat <= ABSOLUTE_ZERO_C):
        raise InvalidTemperature(f"intake temperature {iat} at or below absolute zero")
    temp_k = iat + 273.15
    out = ((rpm * map_kpa / temp_k) / 120.0 * profile.volumetric_eff
           * profile.disp_l * profile.air_molar_mass / profile.gas_constant)
    return float(out) if np.ndim(out) == 0 else out


def consumption_l_per_100km(fuel_flow: float, speed_kmh: float) -> Optional[float]:
    if speed_kmh <= 0:
        return None
    return fuel_flow / speed_kmh * 100.0


def fuel_flow(sample: Sample, profile: VehicleProfile) -> tuple[float, Method]:
    if sample.fuel_rate is not None:
        return sample.fuel_rate, Method.DIRECT_PID
    if sample.maf is not None:
        return fuel_flow_from_maf(sample.maf, profile), Method.FROM_MAF
    if sample.abs_load is not None:
        maf = maf_from_load(sample.abs_load, sample.rpm, profile)
        return fuel_flow_from_maf(maf, profile), Method.MAF_FROM_LOAD
    if sample.map is not None and sample.iat is not None:
        maf = maf_from_map(sample.map, sample.rpm, sample.iat, profile)
        return fuel_flow_from_maf(maf, profile), Method.MAF_FROM_MAP
    raise NoUsableChannels(
        f"sample at t={sample.t} ms has no fuel rate, MAF, load or MAP+IAT")


def estimate(sample: Sample, profile: VehicleProfile) -> FuelEstimate:
    flow, method = fuel_flow(sample, profile)
    return FuelEstimate(flow, method, consumption_l_per_100km(flow, sample.speed))


def co2_per_kg(profile: VehicleProfile) -> float:
    """kg CO2 per kg of fuel burnt."""
    return CO2_PER_CARBON * profile.carbon_fraction


def co2_per_liter(profile: VehicleProfile) -> float:
    """kg CO2 per litre of fuel burnt."""
    return co2_per_kg(profile) * profile.co2_fuel_density


@dataclass(frozen=True)
class Totals:
    liters: float
    km: float
    l_per_100km: Optional[float]
    kg_co2: float
    kg_co2_per_100km: Optional[float]
    n_samples: int
    n_unusable: int = 0
    covered_km: float = 0.0


def sample_flows(samples: Sequence[Sample], profile: VehicleProfile
                 ) -> tuple[np.ndarray, list[Optional[Method]]]:
    """Fuel flow per sample (NaN where no fuel path exists) and its method."""
    flows = np.full(len(samples), np.nan)
    methods: list[Optional[Method]] = []
    for i, s in enumerate(samples):
        try:
            flows[i], m = fuel_flow(s, profile)
        except NoUsableChannels:
            m = None
        methods.append(m)
    return flows, methods


def totals(samples: Sequence[Sample], dt_s, profile: VehicleProfile) -> Totals:
    """Integrate fuel and distance with the left-rectangle rule.

    Each sample's flow and speed hold for ``dt_s`` seconds. Stationary
    samples still burn fuel but add no distance. Samples with no fuel path
    are skipped for fuel. The per-100 km rates use only the distance they
    cover, so gaps in fuel data do not dilute them.
    """
    if len(samples) == 0:
        raise NoUsableChannels("no samples")
    dt_h = np.asarray(dt_s, dtype=float) / 3600.0
    flows, _ = sample_flows(samples, profile)
    usable = ~np.isnan(flows)
    if not usable.any():
        raise NoUsableChannels("no sample has a usable fuel path")
    speed = np.array([s.speed for s in samples], dtype=float)
    liters = float(np.sum(flows[usable] * dt_h[usable]))
    km = float(np.sum(speed * dt_h))
    covered = float(np.sum(speed[usable] * dt_h[usable]))
    kg = liters * co2_per_liter(profile)
    if covered > 0:
        lpk, cpk = liters / covered * 100.0, kg / covered * 100.0
    else:
        lpk = cpk = None
    return Totals(liters, km, lpk, kg, cpk, len(samples),
                  int((~usable).sum()), covered)


def trip_totals(trip: Trip, profile: Optional[VehicleProfile] = None) -> Totals:
    profile = profile or trip.vehicle or VehicleProfile()
    return totals(trip.samples, trip.intervals_s(), profile)
