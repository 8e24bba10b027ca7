from src.grid.geo import great_circle_km, nearest_bus
from src.grid.loader import (
    NetworkFileError,
    NetworkParseError,
    NetworkValidationError,
    load_catalog,
    load_horizon,
    load_model,
    load_network,
    save_network,
)
from src.grid.validation import ValidationReport, validate_catalog, validate_horizon, validate_network
