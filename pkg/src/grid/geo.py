from typing import Optional, Sequence

import numpy as np

from src.types import Bus, Network

EARTH_RADIUS_KM = 6371.0088


def great_circle_km(lat1, lon1, lat2, lon2):
    """Haversine distance in km; broadcasts over numpy arrays."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def bus_id_key(bus_id: str):
    # numeric ids compare as numbers so that "2" < "10"
    return (0, int(bus_id), "") if bus_id.isdigit() else (1, 0, bus_id)


def located_buses(buses: Sequence[Bus]) -> list:
    return [b for b in buses if b.latitude is not None and b.longitude is not None]


def nearest_bus(net: Network, latitude: float, longitude: float) -> Optional[str]:
    """Id of the geodesically nearest bus; ties go to the lower id."""
    buses = located_buses(net.buses)
    if not buses:
        return None
    lats = np.array([b.latitude for b in buses])
    lons = np.array([b.longitude for b in buses])
    dist = great_circle_km(latitude, longitude, lats, lons)
    closest = dist.min()
    tied = [b.id for b, d in zip(buses, dist) if d - closest <= 1e-9]
    return min(tied, key=bus_id_key)
