import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd

from src.physics.dtr import WeatherSample
from src.types import ConfigurationError

logger = logging.getLogger("physics.weather_io")

WEATHER_COLUMNS = (
    "cell_id", "timestamp", "latitude", "longitude", "ambient_temp",
    "wind_speed", "wind_direction", "direct_flux", "diffuse_flux",
)


def read_weather_grid(path: Union[str, Path]) -> pd.DataFrame:
    """One row per (cell, hour); timestamps are parsed and rows sorted per cell."""
    frame = pd.read_csv(path, dtype={"cell_id": str})
    missing = [c for c in WEATHER_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path}: missing weather columns {missing}")
    frame["timestamp"] = pd.to_datetime(frame["timestamp"])
    if (frame["wind_speed"] < 0).any() or (frame[["direct_flux", "diffuse_flux"]] < 0).any().any():
        raise ConfigurationError(f"{path}: negative wind speed or irradiance")
    if frame[list(WEATHER_COLUMNS)].isna().any().any():
        raise ConfigurationError(f"{path}: missing values")
    frame = frame.sort_values(["cell_id", "timestamp"]).reset_index(drop=True)
    logger.info(f"✅ Read {len(frame)} weather rows for {frame['cell_id'].nunique()} cells")
    return frame


def samples_by_cell(frame: pd.DataFrame) -> Dict[str, List[WeatherSample]]:
    out: Dict[str, List[WeatherSample]] = {}
    for row in frame[list(WEATHER_COLUMNS)].itertuples(index=False):
        out.setdefault(str(row.cell_id), []).append(WeatherSample(*row))
    return out


def cell_series(frame: pd.DataFrame, column: str) -> Dict[str, np.ndarray]:
    return {str(cell): group[column].to_numpy(dtype=float) for cell, group in frame.groupby("cell_id", sort=True)}


def cell_coordinates(frame: pd.DataFrame) -> Dict[str, tuple]:
    first = frame.groupby("cell_id", sort=True).first()
    return {str(cell): (float(r.latitude), float(r.longitude)) for cell, r in first.iterrows()}
