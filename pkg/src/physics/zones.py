import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.grid.geo import nearest_bus
from src.scenarios.clustering import pam
from src.scenarios.dtw import pairwise_dtw
from src.types import Network, VresZone

logger = logging.getLogger("physics.zones")

CELL_AREA_KM2 = 2.5
PROTECTION_FACTOR = 10.0


def reduce_zones(cell_profiles: Dict[str, np.ndarray], k: int, protection_factor: float = PROTECTION_FACTOR,
                 kind: str = "solar", cell_area: float = CELL_AREA_KM2,
                 coordinates: Optional[Dict[str, Tuple[float, float]]] = None,
                 network: Optional[Network] = None, seed: int = 0,
                 window: Optional[int] = None) -> List[VresZone]:
    """Cluster per-cell yearly output series into k medoid zones.

    Each zone takes its medoid's coordinates and an area of cell_area times the
    cluster size divided by protection_factor. With a network, zones are attached
    to the nearest bus.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    cells = sorted(cell_profiles)
    if k > len(cells):
        raise ValueError(f"k={k} exceeds the number of cells ({len(cells)})")
    lengths = {len(cell_profiles[c]) for c in cells}
    if len(lengths) > 1:
        raise ValueError("cell profiles have different lengths")

    dist = pairwise_dtw([cell_profiles[c] for c in cells], window)
    result = pam(dist, k, seed)
    counts = np.bincount(result.labels, minlength=k)

    zones = []
    for position, medoid in enumerate(result.medoids):
        cell = cells[medoid]
        lat, lon = (coordinates or {}).get(cell, (None, None))
        bus = nearest_bus(network, lat, lon) if network is not None and lat is not None else None
        zones.append(VresZone(
            id=f"{kind}-{cell}",
            kind=kind,
            bus=bus,
            area_available=cell_area * int(counts[position]) / protection_factor,
            latitude=lat,
            longitude=lon,
        ))
    logger.info(f"✅ Reduced {len(cells)} {kind} cells to {k} zones")
    return zones
