"""Polyline lengths, fixed-interval segmentation, and raster cell traversal.

Coordinates are either planar (map units interpreted as kilometers) or
geographic (degrees lon/lat, lengths by great-circle haversine). Cell
traversal walks each vertex-pair edge through the grid in raster coordinate
space and measures every single-cell sub-chord with the same length rule as
the segment itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from fireline.network import PowerLine
from fireline.rasters import RasterGrid

EARTH_RADIUS_KM = 6371.0088

# final pieces shorter than 1 m merge into the previous segment
MERGE_REMAINDER_KM = 1e-3

Point = tuple[float, float]


@dataclass(frozen=True)
class LineSegment:
    """A piece of a power line; the atomic unit of risk and upgrade choice."""

    segment_id: str
    parent_line_id: str
    vertices: tuple[Point, ...]
    length_km: float
    voltage_kv: float | None
    crs_mode: str

    def __post_init__(self):
        recomputed = polyline_length(self.vertices, self.crs_mode)
        if abs(recomputed - self.length_km) > 1e-9 * max(recomputed, 1e-300):
            raise ValueError(
                f"segment {self.segment_id!r} length {self.length_km} does not "
                f"match its vertices ({recomputed})"
            )


@dataclass(frozen=True)
class CellIntersection:
    """Length of the portion of a segment lying in one raster cell."""

    row: int
    col: int
    length_km: float


def _haversine_km(a: Point, b: Point) -> float:
    lon1, lat1 = math.radians(a[0]), math.radians(a[1])
    lon2, lat2 = math.radians(b[0]), math.radians(b[1])
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def point_distance_km(a: Point, b: Point, crs_mode: str) -> float:
    if crs_mode == "planar":
        return math.hypot(b[0] - a[0], b[1] - a[1])
    return _haversine_km(a, b)


def polyline_length(vertices, crs_mode: str) -> float:
    """Length of a vertex chain in km (Euclidean or great-circle per mode)."""
    if len(vertices) < 2:
        raise ValueError("polyline needs at least 2 vertices")
    return sum(
        point_distance_km(a, b, crs_mode) for a, b in zip(vertices, vertices[1:])
    )


def _lerp(a: Point, b: Point, t: float) -> Point:
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def _cut_point(a: Point, b: Point, dist_km: float, edge_km: float, crs_mode: str) -> Point:
    """Point on edge a->b at arc distance dist_km from a."""
    if crs_mode == "planar":
        return _lerp(a, b, dist_km / edge_km)
    # lon/lat interpolation is not arc-length linear; bisect on the haversine
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _haversine_km(a, _lerp(a, b, mid)) < dist_km:
            lo = mid
        else:
            hi = mid
    return _lerp(a, b, 0.5 * (lo + hi))


def _split_at_multiples(vertices, interval_km: float, crs_mode: str):
    """Cut a vertex chain every interval_km of walked arc length.

    Returns the list of vertex chains. Cut points interior to an edge are
    introduced by linear interpolation in coordinate space.
    """
    pieces = []
    piece: list[Point] = [vertices[0]]
    walked = 0.0  # arc length of the current piece so far
    for edge_end in vertices[1:]:
        start = piece[-1]
        edge_km = point_distance_km(start, edge_end, crs_mode)
        while True:
            to_cut = interval_km - walked
            snap = 1e-9 * max(edge_km, 1.0)
            if to_cut > edge_km + snap:
                break
            if to_cut >= edge_km - snap:
                cut = edge_end
            else:
                cut = _cut_point(start, edge_end, to_cut, edge_km, crs_mode)
            if cut != piece[-1]:
                piece.append(cut)
            pieces.append(piece)
            piece = [cut]
            walked = 0.0
            start = cut
            edge_km = point_distance_km(start, edge_end, crs_mode)
            if edge_km <= 0.0:
                break
        if edge_end != piece[-1]:
            piece.append(edge_end)
            walked += edge_km
    if len(piece) >= 2:
        pieces.append(piece)
    elif not pieces:
        raise ValueError("cannot split a degenerate vertex chain")

    if len(pieces) >= 2:
        tail = pieces[-1]
        if polyline_length(tail, crs_mode) < MERGE_REMAINDER_KM:
            pieces[-2] = pieces[-2] + tail[1:]
            pieces.pop()
    return pieces


def segment_line(line: PowerLine, interval_km: float) -> list[LineSegment]:
    """Split a line at arc-length multiples of interval_km.

    Every segment except possibly the last has length interval_km; the last
    holds the remainder (merged into its predecessor when shorter than 1 m).
    A line shorter than interval_km comes back whole as a single segment.
    """
    if interval_km <= 0:
        raise ValueError("interval_km must be > 0")
    pieces = _split_at_multiples(line.vertices, interval_km, line.crs_mode)
    return [
        LineSegment(
            segment_id=f"{line.line_id}/{k}",
            parent_line_id=line.line_id,
            vertices=tuple(piece),
            length_km=polyline_length(piece, line.crs_mode),
            voltage_kv=line.voltage_kv,
            crs_mode=line.crs_mode,
        )
        for k, piece in enumerate(pieces)
    ]


def whole_line_segment(line: PowerLine) -> LineSegment:
    """Wrap an entire line as its own single segment (no segmentation)."""
    return LineSegment(
        segment_id=f"{line.line_id}/0",
        parent_line_id=line.line_id,
        vertices=line.vertices,
        length_km=polyline_length(line.vertices, line.crs_mode),
        voltage_kv=line.voltage_kv,
        crs_mode=line.crs_mode,
    )


def overlay_lengths(
    segment: LineSegment, grid: RasterGrid
) -> tuple[list[CellIntersection], float]:
    """Per-cell intersection lengths plus the length falling outside the grid.

    Each vertex-pair edge is walked through the cell boundaries it crosses;
    sub-chords are measured with point_distance_km and summed per (row, col)
    in first-encounter order.
    """
    cells: dict[tuple[int, int], float] = {}
    out_km = 0.0
    for a, b in zip(segment.vertices, segment.vertices[1:]):
        out_km += _walk_edge(a, b, grid, segment.crs_mode, cells)
    intersections = [
        CellIntersection(row=r, col=c, length_km=length)
        for (r, c), length in cells.items()
    ]
    return intersections, out_km


def traverse_cells(segment: LineSegment, grid: RasterGrid) -> list[CellIntersection]:
    """Cell intersections of a segment; out-of-grid portions contribute nothing."""
    return overlay_lengths(segment, grid)[0]


def _walk_edge(a: Point, b: Point, grid: RasterGrid, crs_mode: str, cells) -> float:
    """Accumulate one edge's per-cell lengths into cells; return out-of-grid km."""
    cs = grid.cell_size
    ua, va = (a[0] - grid.x_origin) / cs, (a[1] - grid.y_origin) / cs
    ub, vb = (b[0] - grid.x_origin) / cs, (b[1] - grid.y_origin) / cs
    du, dv = ub - ua, vb - va

    t_in, t_out = 0.0, 1.0
    for origin, delta, limit in ((ua, du, grid.ncols), (va, dv, grid.nrows)):
        if delta == 0.0:
            if origin < 0.0 or origin > limit:
                return point_distance_km(a, b, crs_mode)
        else:
            lo, hi = sorted(((0.0 - origin) / delta, (limit - origin) / delta))
            t_in, t_out = max(t_in, lo), min(t_out, hi)
    if t_in >= t_out:
        return point_distance_km(a, b, crs_mode)

    boundaries = [t_in, t_out]
    for origin, delta in ((ua, du), (va, dv)):
        if delta != 0.0:
            lo = origin + t_in * delta
            hi = origin + t_out * delta
            if lo > hi:
                lo, hi = hi, lo
            k = math.floor(lo) + 1
            while k < hi:
                boundaries.append((k - origin) / delta)
                k += 1
    boundaries.sort()

    out_km = 0.0
    if t_in > 0.0:
        out_km += point_distance_km(a, _lerp(a, b, t_in), crs_mode)
    if t_out < 1.0:
        out_km += point_distance_km(_lerp(a, b, t_out), b, crs_mode)

    for t1, t2 in zip(boundaries, boundaries[1:]):
        if t2 <= t1:
            continue
        tm = 0.5 * (t1 + t2)
        # floor puts an exactly-on-boundary chord in the larger column; the
        # ceil-1 form does the same for the larger (more southern) row
        col = math.floor(ua + tm * du)
        row = grid.nrows - 1 - (math.ceil(va + tm * dv) - 1)
        length = point_distance_km(_lerp(a, b, t1), _lerp(a, b, t2), crs_mode)
        if 0 <= col < grid.ncols and 0 <= row < grid.nrows:
            key = (row, col)
            cells[key] = cells.get(key, 0.0) + length
        else:
            out_km += length
    return out_km
