"""Parsing power-network polyline documents into validated line records."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from fireline.errors import DegenerateLine, MalformedDocument, UnsupportedGeometry
from fireline.rasters import RasterGrid

CRS_MODES = ("planar", "geographic")

DEFAULT_VOLTAGE_KEY = "kV"


@dataclass(frozen=True)
class PowerLine:
    """One overhead power line as an ordered polyline with an optional voltage."""

    line_id: str
    vertices: tuple[tuple[float, float], ...]
    voltage_kv: float | None
    crs_mode: str

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise DegenerateLine(f"line {self.line_id!r} has < 2 distinct vertices")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a == b:
                raise ValueError(f"line {self.line_id!r} repeats vertex {a}")
        if self.voltage_kv is not None and not 0 < self.voltage_kv <= 1000:
            raise ValueError(
                f"line {self.line_id!r} voltage {self.voltage_kv} kV outside (0, 1000]"
            )
        if self.crs_mode not in CRS_MODES:
            raise ValueError(f"unknown crs_mode {self.crs_mode!r}")


@dataclass(frozen=True)
class ValidationReport:
    """Line ids flagged by validate_network; empty tuples mean a clean network."""

    out_of_extent: tuple[str, ...]
    missing_voltage: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.out_of_extent and not self.missing_voltage


def parse_network(
    text: str,
    voltage_key: str = DEFAULT_VOLTAGE_KEY,
    crs_mode: str = "planar",
) -> list[PowerLine]:
    """Parse a feature-collection document into PowerLine records.

    Output order equals feature order. Multi-part line features are split
    into one PowerLine per part with "#0", "#1", ... id suffixes. Features
    without an "id" property get a synthesized id "L<index>".
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("features"), list):
        raise MalformedDocument('document must be an object with a "features" list')

    lines: list[PowerLine] = []
    for index, feature in enumerate(doc["features"]):
        if not isinstance(feature, dict) or not isinstance(feature.get("geometry"), dict):
            raise MalformedDocument(f"feature {index} has no geometry object")
        geometry = feature["geometry"]
        props = feature.get("properties") or {}
        if not isinstance(props, dict):
            raise MalformedDocument(f"feature {index} properties must be an object")

        line_id = props.get("id")
        if line_id is None:
            line_id = f"L{index}"
        elif not isinstance(line_id, str):
            raise MalformedDocument(f"feature {index} id must be a string")
        voltage = _parse_voltage(props.get(voltage_key), line_id)

        gtype = geometry.get("type")
        coords = geometry.get("coordinates")
        if gtype == "LineString":
            parts = [coords]
            ids = [line_id]
        elif gtype == "MultiLineString":
            if not isinstance(coords, list):
                raise MalformedDocument(f"feature {line_id!r} has bad coordinates")
            parts = coords
            ids = [f"{line_id}#{k}" for k in range(len(coords))]
        else:
            raise UnsupportedGeometry(
                f"feature {line_id!r} geometry {gtype!r} is not a line"
            )

        for part_id, part in zip(ids, parts):
            lines.append(
                PowerLine(
                    line_id=part_id,
                    vertices=_parse_coords(part, part_id),
                    voltage_kv=voltage,
                    crs_mode=crs_mode,
                )
            )
    return lines


def _parse_voltage(raw, line_id: str) -> float | None:
    if raw is None:
        return None
    try:
        voltage = float(raw)
    except (TypeError, ValueError):
        raise MalformedDocument(
            f"feature {line_id!r} voltage {raw!r} is not numeric"
        ) from None
    if not 0 < voltage <= 1000:
        raise MalformedDocument(
            f"feature {line_id!r} voltage {voltage} kV outside (0, 1000]"
        )
    return voltage


def _parse_coords(raw, line_id: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(raw, list):
        raise MalformedDocument(f"feature {line_id!r} has bad coordinates")
    vertices: list[tuple[float, float]] = []
    for point in raw:
        if not isinstance(point, (list, tuple)) or len(point) < 2:
            raise MalformedDocument(f"feature {line_id!r} has a bad coordinate {point!r}")
        try:
            xy = (float(point[0]), float(point[1]))
        except (TypeError, ValueError):
            raise MalformedDocument(
                f"feature {line_id!r} has a non-numeric coordinate {point!r}"
            ) from None
        # collapse consecutive duplicates rather than rejecting the feature
        if not vertices or vertices[-1] != xy:
            vertices.append(xy)
    if len(vertices) < 2:
        raise DegenerateLine(f"feature {line_id!r} has < 2 distinct vertices")
    return tuple(vertices)


def validate_network(lines: Sequence[PowerLine], grid: RasterGrid) -> ValidationReport:
    """Report lines with vertices outside the grid extent or without a voltage."""
    out_of_extent = []
    missing_voltage = []
    for line in lines:
        if any(
            x < grid.x_origin or x > grid.x_max or y < grid.y_origin or y > grid.y_max
            for x, y in line.vertices
        ):
            out_of_extent.append(line.line_id)
        if line.voltage_kv is None:
            missing_voltage.append(line.line_id)
    return ValidationReport(
        out_of_extent=tuple(out_of_extent),
        missing_voltage=tuple(missing_voltage),
    )
