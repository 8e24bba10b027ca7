import logging
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from pydantic import model_validator

from src.types import ConfigurationError, StrictModel

logger = logging.getLogger("physics.dtr")

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class WeatherSample:
    cell_id: str
    timestamp: object
    latitude: float
    longitude: float
    ambient_temp: float
    wind_speed: float
    wind_direction: float
    direct_flux: float
    diffuse_flux: float

    def __post_init__(self):
        if self.wind_speed < 0:
            raise ConfigurationError(f"cell {self.cell_id}: negative wind speed {self.wind_speed}")
        if self.direct_flux < 0 or self.diffuse_flux < 0:
            raise ConfigurationError(f"cell {self.cell_id}: negative irradiance")


class ConductorSpec(StrictModel):
    """Bare overhead conductor; the defaults describe a Drake-class ACSR."""
    diameter: float = 0.02814
    resistance_at_ref: float = 7.284e-5
    reference_temp: float = 25.0
    temp_coefficient: float = 0.003855
    emissivity: float = 0.5
    absorptivity: float = 0.5
    max_conductor_temp: float = 100.0
    nominal_voltage: float = 240.0
    line_azimuth: float = 90.0

    @model_validator(mode="after")
    def _check(self):
        if not (0.0 <= self.emissivity <= 1.0 and 0.0 <= self.absorptivity <= 1.0):
            raise ValueError("emissivity and absorptivity must lie in [0, 1]")
        if self.max_conductor_temp <= 60.0:
            raise ValueError("max_conductor_temp must exceed plausible ambient temperatures")
        if self.diameter <= 0 or self.resistance_at_ref <= 0 or self.nominal_voltage <= 0:
            raise ValueError("diameter, resistance and voltage must be positive")
        return self

    def resistance(self, temp: float) -> float:
        return self.resistance_at_ref * (1.0 + self.temp_coefficient * (temp - self.reference_temp))


@dataclass(frozen=True)
class DtrRating:
    power: float
    current: float
    imaginary: bool = False


def attack_angle(wind_direction: float, line_azimuth: float) -> float:
    """Angle in degrees between the wind and the conductor axis, folded into [0, 90]."""
    phi = abs(wind_direction - line_azimuth) % 180.0
    return 180.0 - phi if phi > 90.0 else phi


def air_properties(film_temp: float, elevation: float = 0.0) -> Tuple[float, float, float]:
    """Dynamic viscosity, density and thermal conductivity of air at the film temperature."""
    mu = 1.458e-6 * (film_temp + 273.0) ** 1.5 / (film_temp + 383.4)
    rho = (1.293 - 1.525e-4 * elevation + 6.379e-9 * elevation ** 2) / (1.0 + 0.00367 * film_temp)
    k = 2.424e-2 + 7.477e-5 * film_temp - 4.407e-9 * film_temp ** 2
    return mu, rho, k


def convective_heat_loss(conductor_temp: float, ambient_temp: float, wind_speed: float,
                         angle: float, diameter: float) -> float:
    """W/m; the larger of the two forced correlations and natural convection."""
    delta = conductor_temp - ambient_temp
    if delta <= 0:
        return 0.0
    film = 0.5 * (conductor_temp + ambient_temp)
    mu, rho, k = air_properties(film)
    reynolds = diameter * rho * wind_speed / mu
    phi = math.radians(angle)
    k_angle = 1.194 - math.cos(phi) + 0.194 * math.cos(2 * phi) + 0.368 * math.sin(2 * phi)
    qc1 = k_angle * (1.01 + 1.35 * reynolds ** 0.52) * k * delta
    qc2 = k_angle * 0.754 * reynolds ** 0.6 * k * delta
    qcn = 3.645 * rho ** 0.5 * diameter ** 0.75 * delta ** 1.25
    return max(qc1, qc2, qcn)


def radiative_heat_loss(conductor_temp: float, ambient_temp: float, diameter: float, emissivity: float) -> float:
    return 17.8 * diameter * emissivity * (
        ((conductor_temp + 273.0) / 100.0) ** 4 - ((ambient_temp + 273.0) / 100.0) ** 4
    )


def solar_heat_gain(direct_flux: float, diffuse_flux: float, diameter: float, absorptivity: float) -> float:
    return absorptivity * (direct_flux + diffuse_flux) * diameter


def compute_dtr(sample: WeatherSample, spec: ConductorSpec, base_mva: float = 100.0) -> DtrRating:
    """Steady-state ampacity at the maximum conductor temperature, as p.u. power."""
    tc = spec.max_conductor_temp
    angle = attack_angle(sample.wind_direction, spec.line_azimuth)
    qc = convective_heat_loss(tc, sample.ambient_temp, sample.wind_speed, angle, spec.diameter)
    qr = radiative_heat_loss(tc, sample.ambient_temp, spec.diameter, spec.emissivity)
    qs = solar_heat_gain(sample.direct_flux, sample.diffuse_flux, spec.diameter, spec.absorptivity)
    radicand = (qc + qr - qs) / spec.resistance(tc)
    if radicand <= 0:
        logger.debug(f"cell {sample.cell_id} at {sample.timestamp}: heat gain exceeds dissipation")
        return DtrRating(0.0, 0.0, imaginary=True)
    current = math.sqrt(radicand)
    power = SQRT3 * spec.nominal_voltage * current / 1000.0 / base_mva
    return DtrRating(power, current)


def dtr_series(samples: Iterable[WeatherSample], spec: ConductorSpec, base_mva: float = 100.0) -> np.ndarray:
    ratings = [compute_dtr(s, spec, base_mva) for s in samples]
    flagged = sum(r.imaginary for r in ratings)
    if flagged:
        logger.warning(f"⚠️ {flagged} of {len(ratings)} hours have no thermal headroom; rating set to 0")
    return np.array([r.power for r in ratings])
