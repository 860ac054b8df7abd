"""Read and write fan descriptions (JSON or TOML, 1-based indices)."""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import FanParseError
from .lattice import StackyFanData, check_fan

REQUIRED = ("points", "max_cones", "psi")


def builtin_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("toricbranes.fans").iterdir() if p.name.endswith(".json"))


def fan_from_dict(doc: dict, name: str = "", validate: bool = True) -> StackyFanData:
    for key in REQUIRED:
        if key not in doc:
            raise FanParseError(f"missing field '{key}'")
    points = doc["points"]
    if not points:
        raise FanParseError("field 'points' is empty")
    rank = doc.get("rank", len(points[0]))
    if any(len(p) != rank for p in points):
        raise FanParseError(f"field 'points': every point needs {rank} coordinates")
    try:
        cones = [[int(i) - 1 for i in c] for c in doc["max_cones"]]
        psi = [Fraction(str(x)) for x in doc["psi"]]
    except (TypeError, ValueError) as exc:
        raise FanParseError(f"bad value: {exc}") from exc
    if len(psi) != len(points):
        raise FanParseError(f"field 'psi' has {len(psi)} entries for {len(points)} points")
    if any(i < 0 or i >= len(points) for c in cones for i in c):
        raise FanParseError("field 'max_cones' refers to a point that does not exist")
    fan = StackyFanData.build(points, cones, psi, doc.get("name", name))
    return check_fan(fan) if validate else fan


def fan_to_dict(fan: StackyFanData) -> dict:
    return {
        "name": fan.name,
        "rank": fan.rank,
        "points": [list(p) for p in fan.points],
        "max_cones": [sorted(i + 1 for i in c) for c in fan.max_cones],
        "psi": [str(x) for x in fan.psi],
    }


def load_fan(source: str | Path, validate: bool = True) -> StackyFanData:
    """Load a fan from a file path or the name of a built-in fan."""
    path = Path(source)
    if not path.exists():
        if str(source) in builtin_names():
            text = resources.files("toricbranes.fans").joinpath(f"{source}.json").read_text()
            return fan_from_dict(json.loads(text), str(source), validate)
        raise FanParseError(f"no such fan file or built-in fan: {source}")
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ImportError:  # Python 3.10
            import tomli as tomllib

        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise FanParseError(f"{path}: {exc}") from exc
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FanParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FanParseError(f"{path}: top level must be an object")
    return fan_from_dict(doc, path.stem, validate)
