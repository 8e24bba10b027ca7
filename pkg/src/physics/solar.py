import math
from datetime import datetime

from src.physics.dtr import WeatherSample

MIN_INCIDENCE_COS = math.cos(math.radians(89.0))
RATED_INSOLATION = 1000.0
DEFAULT_EFFICIENCY = 0.22


def solar_declination(day_of_year: int) -> float:
    """Declination in radians (Spencer series)."""
    g = 2.0 * math.pi * (day_of_year - 1) / 365.0
    return (0.006918 - 0.399912 * math.cos(g) + 0.070257 * math.sin(g)
            - 0.006758 * math.cos(2 * g) + 0.000907 * math.sin(2 * g)
            - 0.002697 * math.cos(3 * g) + 0.00148 * math.sin(3 * g))


def sun_elevation(latitude: float, timestamp: datetime) -> float:
    """Sun elevation in degrees; the timestamp is read as local solar time."""
    delta = solar_declination(timestamp.timetuple().tm_yday)
    hours = timestamp.hour + timestamp.minute / 60.0 + timestamp.second / 3600.0
    omega = math.radians(15.0 * (hours - 12.0))
    phi = math.radians(latitude)
    sin_alt = math.sin(phi) * math.sin(delta) + math.cos(phi) * math.cos(delta) * math.cos(omega)
    return math.degrees(math.asin(max(-1.0, min(1.0, sin_alt))))


def plane_of_array_irradiance(direct_flux: float, diffuse_flux: float, elevation: float) -> float:
    if elevation <= 0:
        return 0.0
    incidence = max(math.cos(math.radians(abs(90.0 - elevation))), MIN_INCIDENCE_COS)
    return (direct_flux + diffuse_flux) / incidence


def compute_solar_cf(sample: WeatherSample, elevation: float, efficiency: float = DEFAULT_EFFICIENCY,
                     rated_insolation: float = RATED_INSOLATION) -> float:
    poa = plane_of_array_irradiance(sample.direct_flux, sample.diffuse_flux, elevation)
    output = poa * efficiency
    return min(1.0, max(0.0, output / (rated_insolation * efficiency)))
