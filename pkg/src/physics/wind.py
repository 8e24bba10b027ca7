import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from src.types import ConfigurationError

logger = logging.getLogger("physics.wind")


@dataclass(frozen=True)
class PowerCurve:
    """Turbine curve as (speed m/s, normalized power) points."""
    speeds: np.ndarray
    powers: np.ndarray
    cut_in: float
    rated: float
    cut_out: float

    def __post_init__(self):
        if not self.cut_in < self.rated < self.cut_out:
            raise ConfigurationError(
                f"power curve needs cut_in < rated < cut_out, got {self.cut_in}, {self.rated}, {self.cut_out}"
            )
        if np.any(np.diff(self.speeds) <= 0):
            raise ConfigurationError("power curve speeds must be strictly increasing")
        below = self.powers[self.speeds <= self.rated]
        if np.any(np.diff(below) < 0):
            raise ConfigurationError("power curve decreases below rated speed")

    @classmethod
    def from_points(cls, speeds: Sequence[float], powers: Sequence[float]) -> "PowerCurve":
        """Derive cut-in, rated and cut-out speeds from raw points.

        Cut-in is the last zero-power speed before output starts, rated is the
        first speed at maximum output and cut-out is the last listed speed.
        """
        speeds = np.asarray(speeds, dtype=float)
        powers = np.asarray(powers, dtype=float)
        if speeds.size < 3 or speeds.shape != powers.shape:
            raise ConfigurationError("power curve needs at least three (speed, power) points")
        peak = powers.max()
        if peak <= 0:
            raise ConfigurationError("power curve never produces power")
        normalized = powers / peak
        first_positive = int(np.argmax(normalized > 0))
        cut_in = speeds[first_positive - 1] if first_positive > 0 else speeds[0]
        rated = speeds[int(np.argmax(normalized >= 1.0))]
        return cls(speeds, normalized, float(cut_in), float(rated), float(speeds[-1]))


def compute_wind_cf(speed: float, curve: PowerCurve) -> float:
    if speed < curve.cut_in or speed > curve.cut_out:
        return 0.0
    if speed >= curve.rated:
        return 1.0
    return float(np.clip(np.interp(speed, curve.speeds, curve.powers), 0.0, 1.0))


def load_power_curve(path: Union[str, Path]) -> PowerCurve:
    """CSV with `speed` and `power` columns."""
    try:
        frame = pd.read_csv(path)
        curve = PowerCurve.from_points(frame["speed"].to_numpy(), frame["power"].to_numpy())
    except (KeyError, ValueError, OSError) as e:
        raise ConfigurationError(f"{path}: cannot read power curve ({e})") from e
    logger.debug(f"Power curve {path}: cut-in {curve.cut_in}, rated {curve.rated}, cut-out {curve.cut_out}")
    return curve
