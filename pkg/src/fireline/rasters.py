"""Reading, remapping, and stacking fire-potential ASCII rasters.

The daily fire-potential maps are regular integer grids: burnable land
carries an index from 0 to 150 (higher = more dangerous), and a block of
special indices from 248 to 254 marks non-burnable classes (cloud, water,
barren, ...). Ingestion parses the ASCII-grid format, zeroes the special
indices, and stacks per-day grids into an aligned scenario set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from fireline.errors import (
    CellCountMismatch,
    GridMisalignment,
    MalformedHeader,
    NonIntegerValue,
    ValueOutOfDomain,
)

FUEL_INDEX_MAX = 150
SPECIAL_INDEX_MIN = 248
SPECIAL_INDEX_MAX = 254

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """One scenario's fire-potential map.

    ``values`` is an integer array of shape (nrows, ncols) with row 0 the
    northernmost row; (x_origin, y_origin) is the lower-left corner of the
    grid in map units.
    """

    ncols: int
    nrows: int
    x_origin: float
    y_origin: float
    cell_size: float
    nodata_value: int
    values: np.ndarray

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise ValueError("grid dimensions must be positive")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        if self.values.shape != (self.nrows, self.ncols):
            raise ValueError(
                f"values shape {self.values.shape} != (nrows, ncols) = "
                f"({self.nrows}, {self.ncols})"
            )

    @property
    def georeference(self) -> tuple:
        return (self.ncols, self.nrows, self.x_origin, self.y_origin, self.cell_size)

    @property
    def x_max(self) -> float:
        return self.x_origin + self.ncols * self.cell_size

    @property
    def y_max(self) -> float:
        return self.y_origin + self.nrows * self.cell_size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterGrid):
            return NotImplemented
        return (
            self.georeference == other.georeference
            and self.nodata_value == other.nodata_value
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class ScenarioSet:
    """An ordered stack of mutually aligned rasters, one per scenario."""

    scenarios: tuple[tuple[str, RasterGrid], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.scenarios]
        if len(set(labels)) != len(labels):
            raise ValueError("scenario labels must be unique")
        if self.scenarios:
            ref = self.scenarios[0][1].georeference
            for label, grid in self.scenarios[1:]:
                if grid.georeference != ref:
                    raise GridMisalignment(
                        f"scenario {label!r} georeference {grid.georeference} "
                        f"differs from {ref}"
                    )

    def __len__(self) -> int:
        return len(self.scenarios)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.scenarios)

    @property
    def grids(self) -> tuple[RasterGrid, ...]:
        return tuple(grid for _, grid in self.scenarios)


def parse_ascii_grid(text: str) -> RasterGrid:
    """Parse an ASCII-grid document into a RasterGrid.

    The format is six ``key value`` header lines (ncols, nrows, xllcorner,
    yllcorner, cellsize, NODATA_value; keys case-insensitive) followed by
    nrows rows of ncols whitespace-separated integers, top row first.
    """
    lines = text.splitlines()
    if len(lines) < 6:
        raise MalformedHeader("expected 6 header lines")

    header: dict[str, str] = {}
    for line in lines[:6]:
        parts = line.split()
        if len(parts) != 2:
            raise MalformedHeader(f"bad header line: {line!r}")
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            raise MalformedHeader(f"unknown header key: {parts[0]!r}")
        if key in header:
            raise MalformedHeader(f"duplicate header key: {parts[0]!r}")
        header[key] = parts[1]
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise MalformedHeader(f"missing header keys: {missing}")

    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
        x_origin = float(header["xllcorner"])
        y_origin = float(header["yllcorner"])
        cell_size = float(header["cellsize"])
        nodata = int(header["nodata_value"])
    except ValueError as exc:
        raise MalformedHeader(str(exc)) from None

    tokens = "\n".join(lines[6:]).split()
    if len(tokens) != ncols * nrows:
        raise CellCountMismatch(
            f"expected {ncols * nrows} values ({ncols} x {nrows}), got {len(tokens)}"
        )
    try:
        values = np.array(tokens, dtype=np.int64)
    except (ValueError, OverflowError):
        bad = next(t for t in tokens if not _is_int_token(t))
        raise NonIntegerValue(f"not an integer cell value: {bad!r}") from None

    try:
        return RasterGrid(
            ncols=ncols,
            nrows=nrows,
            x_origin=x_origin,
            y_origin=y_origin,
            cell_size=cell_size,
            nodata_value=nodata,
            values=values.reshape(nrows, ncols),
        )
    except ValueError as exc:
        raise MalformedHeader(str(exc)) from None


def _is_int_token(token: str) -> bool:
    try:
        v = int(token)
    except ValueError:
        return False
    return np.iinfo(np.int64).min <= v <= np.iinfo(np.int64).max


def serialize_ascii_grid(grid: RasterGrid) -> str:
    """Render a RasterGrid back to its ASCII-grid document form."""
    out = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {grid.x_origin!r}",
        f"yllcorner {grid.y_origin!r}",
        f"cellsize {grid.cell_size!r}",
        f"NODATA_value {grid.nodata_value}",
    ]
    for row in grid.values:
        out.append(" ".join(str(int(v)) for v in row))
    return "\n".join(out) + "\n"


def remap_special_indices(grid: RasterGrid) -> RasterGrid:
    """Zero out non-burnable special indices and nodata cells.

    Values in [248, 254] and cells equal to the nodata sentinel become 0;
    values already in [0, 150] pass through. Anything else is not a defined
    land class and indicates corrupted input.
    """
    v = grid.values
    in_range = (v >= 0) & (v <= FUEL_INDEX_MAX)
    special = (v >= SPECIAL_INDEX_MIN) & (v <= SPECIAL_INDEX_MAX)
    nodata = v == grid.nodata_value
    invalid = ~(in_range | special | nodata)
    if invalid.any():
        bad = int(v[invalid].flat[0])
        raise ValueOutOfDomain(f"value {bad} outside the fire-potential index domain")
    out = np.where(special | nodata, 0, v).astype(np.int16)
    return replace(grid, values=out)


def load_scenario_set(paths: Sequence, labels: Sequence[str]) -> ScenarioSet:
    """Parse and remap one raster per path into an aligned ScenarioSet."""
    if len(paths) != len(labels):
        raise ValueError(f"{len(paths)} paths but {len(labels)} labels")
    if not paths:
        raise ValueError("at least one raster is required")

    scenarios = []
    ref = None
    for path, label in zip(paths, labels):
        with open(path, "r") as fh:
            grid = remap_special_indices(parse_ascii_grid(fh.read()))
        if ref is None:
            ref = grid.georeference
        elif grid.georeference != ref:
            raise GridMisalignment(
                f"raster {path} georeference {grid.georeference} differs from {ref}"
            )
        scenarios.append((label, grid))
    return ScenarioSet(scenarios=tuple(scenarios))
