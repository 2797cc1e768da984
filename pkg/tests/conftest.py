"""Shared builders for grids, networks, and segments used across the suite."""

import json

import numpy as np

from fireline.geometry import LineSegment, polyline_length
from fireline.rasters import RasterGrid


def make_grid(values, x0=0.0, y0=0.0, cell_size=1.0, nodata=-9999):
    values = np.asarray(values)
    nrows, ncols = values.shape
    return RasterGrid(
        ncols=ncols,
        nrows=nrows,
        x_origin=float(x0),
        y_origin=float(y0),
        cell_size=float(cell_size),
        nodata_value=nodata,
        values=values,
    )


def grid_text(values, x0=0.0, y0=0.0, cell_size=1.0, nodata=-9999):
    values = np.asarray(values)
    lines = [
        f"ncols {values.shape[1]}",
        f"nrows {values.shape[0]}",
        f"xllcorner {x0}",
        f"yllcorner {y0}",
        f"cellsize {cell_size}",
        f"NODATA_value {nodata}",
    ]
    for row in values:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def make_segment(vertices, crs_mode="planar", segment_id="s/0", voltage=None):
    vertices = tuple((float(x), float(y)) for x, y in vertices)
    return LineSegment(
        segment_id=segment_id,
        parent_line_id=segment_id.rsplit("/", 1)[0],
        vertices=vertices,
        length_km=polyline_length(vertices, crs_mode),
        voltage_kv=voltage,
        crs_mode=crs_mode,
    )


def feature_collection(*features):
    return json.dumps({"type": "FeatureCollection", "features": list(features)})


def line_feature(coords, line_id=None, voltage=None, voltage_key="kV", multi=False):
    props = {}
    if line_id is not None:
        props["id"] = line_id
    if voltage is not None:
        props[voltage_key] = voltage
    geometry = {
        "type": "MultiLineString" if multi else "LineString",
        "coordinates": coords,
    }
    return {"type": "Feature", "geometry": geometry, "properties": props}
