import json
import logging
from json.decoder import scanstring
from pathlib import Path
from typing import Dict, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from src.grid.geo import nearest_bus
from src.grid.validation import validate_network
from src.types import Network, PlanningHorizon, TechnologyCatalog

logger = logging.getLogger("grid.loader")

ModelT = TypeVar("ModelT", bound=BaseModel)
PathLike = Union[str, Path]


class NetworkFileError(Exception):
    """Base exception for input-file problems"""
    pass


class NetworkParseError(NetworkFileError):
    """Raised when a file does not match its schema"""

    def __init__(self, path: str, field: str, line: int, message: str):
        self.path = path
        self.field = field
        self.line = line
        super().__init__(f"{path}:{line}: {field}: {message}")


class NetworkValidationError(NetworkFileError):
    """Raised when loaded records reference unknown ids or are structurally empty"""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


_decoder = json.JSONDecoder()


def _value_lines(text: str) -> Dict[Tuple, int]:
    """Map every JSON value path to the line on which the value starts."""
    lines: Dict[Tuple, int] = {}

    def skip(i: int) -> int:
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def value(i: int, path: Tuple) -> int:
        i = skip(i)
        lines[path] = text.count("\n", 0, i) + 1
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = scanstring(text, skip(i) + 1)
                i = skip(i) + 1  # ':'
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            index = 0
            while True:
                i = skip(value(i, path + (index,)))
                index += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        if ch == '"':
            return scanstring(text, i + 1)[1]
        return _decoder.raw_decode(text, i)[1]

    value(0, ())
    return lines


def _locate(lines: Dict[Tuple, int], loc: Tuple) -> int:
    loc = tuple(loc)
    while loc not in lines and loc:
        loc = loc[:-1]
    return lines.get(loc, 1)


def load_model(path: PathLike, model: Type[ModelT]) -> ModelT:
    """Parse a JSON file strictly into a pydantic model."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise NetworkParseError(str(path), "<file>", 0, str(e)) from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetworkParseError(str(path), "<document>", e.lineno, e.msg) from e
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "<root>"
        line = _locate(_value_lines(text), first["loc"])
        logger.error(f"❌ {path}:{line}: {field}: {first['msg']}")
        raise NetworkParseError(str(path), field, line, first["msg"]) from e


def resolve_zone_buses(net: Network) -> Network:
    """Attach zones without a bus to the nearest bus."""
    zones = []
    changed = False
    for zone in net.zones:
        if zone.bus is None and zone.latitude is not None and zone.longitude is not None:
            bus = nearest_bus(net, zone.latitude, zone.longitude)
            if bus is not None:
                zone = zone.model_copy(update={"bus": bus})
                changed = True
        zones.append(zone)
    return net.model_copy(update={"zones": zones}) if changed else net


def load_network(path: PathLike) -> Network:
    net = resolve_zone_buses(load_model(path, Network))
    report = validate_network(net)
    structural = report.structural()
    if structural:
        logger.error(f"❌ {path}: {len(structural)} structural problems")
        raise NetworkValidationError(structural)
    for warning in report.warnings:
        logger.warning(f"⚠️ {warning}")
    logger.debug(f"Loaded network '{net.name}' with {len(net.buses)} buses and {len(net.rights_of_way)} rights-of-way")
    return net


def save_network(net: Network, path: PathLike) -> None:
    Path(path).write_text(json.dumps(net.model_dump(mode="json", exclude_none=True), indent=2))


def load_catalog(path: PathLike) -> TechnologyCatalog:
    return load_model(path, TechnologyCatalog)


def load_horizon(path: PathLike) -> PlanningHorizon:
    return load_model(path, PlanningHorizon)
