import logging

from src.types import TECHNOLOGIES, ConfigurationError

logger = logging.getLogger("helpers")

H_BAR_WIDTH = 68


def print_h_bar(width: int = H_BAR_WIDTH) -> None:
    logger.info("-" * width)


def parse_factor_flags(flags) -> dict:
    """Turn ["B=off", "L=on"] into {"B": False, "L": True}."""
    factors = {}
    for flag in flags or []:
        tech, sep, value = flag.partition("=")
        tech, value = tech.strip().upper(), value.strip().lower()
        if not sep or value not in ("on", "off"):
            raise ConfigurationError(f"factor flag '{flag}' must look like X=on or X=off")
        if tech not in TECHNOLOGIES:
            raise ConfigurationError(f"unknown planning factor '{tech}', expected one of {''.join(TECHNOLOGIES)}")
        factors[tech] = value == "on"
    return factors
