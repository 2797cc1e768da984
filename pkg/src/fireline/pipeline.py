"""Orchestration helpers shared by the CLI subcommands.

Stages communicate through flat files: a segments CSV (geometry + voltage),
risk table / risk vector CSVs, plan CSV + feature collection, sweep CSV.
Every run also writes a manifest echoing the configuration and digests of
the input files, so a run can be reproduced exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Sequence

from fireline.errors import SegmentUniverseMismatch
from fireline.geometry import LineSegment, segment_line, whole_line_segment
from fireline.network import PowerLine, parse_network
from fireline.rasters import ScenarioSet, load_scenario_set
from fireline.risk import (
    RiskTable,
    RiskVector,
    ThresholdSpec,
    aggregate_scenarios,
    apply_voltage_weight,
    build_risk_table,
    compute_threshold,
    threshold_counts,
)


def resolve_raster_paths(raster_args: Sequence[str]) -> tuple[list[str], list[str]]:
    """Expand raster arguments into (paths, scenario labels).

    A single directory argument expands to its *.asc files sorted by stem
    (date-stamped names sort chronologically); explicit file lists keep
    their order. Labels are file stems.
    """
    if len(raster_args) == 1 and os.path.isdir(raster_args[0]):
        names = sorted(
            n for n in os.listdir(raster_args[0]) if n.lower().endswith(".asc")
        )
        if not names:
            raise FileNotFoundError(f"no .asc rasters in {raster_args[0]}")
        paths = [os.path.join(raster_args[0], n) for n in names]
    else:
        paths = list(raster_args)
    labels = [os.path.splitext(os.path.basename(p))[0] for p in paths]
    return paths, labels


def load_network_file(path, voltage_key: str, crs_mode: str) -> list[PowerLine]:
    with open(path, "r") as fh:
        return parse_network(fh.read(), voltage_key=voltage_key, crs_mode=crs_mode)


def segmentize(lines: Sequence[PowerLine], interval_km: float) -> list[LineSegment]:
    """Split every line at interval_km; 0 means one segment per whole line."""
    if interval_km < 0:
        raise ValueError("interval_km must be >= 0")
    segments: list[LineSegment] = []
    for line in lines:
        if interval_km == 0:
            segments.append(whole_line_segment(line))
        else:
            segments.extend(segment_line(line, interval_km))
    return segments


def compute_risk_vector(
    segments: Sequence[LineSegment],
    scenario_set: ScenarioSet,
    metric: str,
    *,
    threshold_base: str = "cumulative",
    percentile: float = 75.0,
    population: str = "global_pooled",
    strict: bool = False,
    kv_weighting: bool = False,
    kv_threshold: float = 69.0,
    kv_factor: float = 3.0,
) -> tuple[RiskTable, RiskVector]:
    """Risk table plus aggregated vector for one metric configuration.

    metric "maximum" / "cumulative" aggregates by scenario sum; "threshold"
    counts scenarios at or above the percentile threshold of the base
    metric's table. Voltage weighting applies on top when enabled.
    """
    if metric == "threshold":
        table = build_risk_table(segments, scenario_set, threshold_base)
        spec = compute_threshold(
            table,
            ThresholdSpec(
                base_metric=threshold_base,
                percentile=percentile,
                population=population,
                strict=strict,
            ),
        )
        vector = threshold_counts(table, spec)
    else:
        table = build_risk_table(segments, scenario_set, metric)
        vector = aggregate_scenarios(table)
    if kv_weighting:
        vector = apply_voltage_weight(
            vector, segments, kv_threshold=kv_threshold, factor=kv_factor
        )
    return table, vector


def write_segments_csv(segments: Sequence[LineSegment], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("segment_id,parent_line_id,length_km,voltage_kv,crs_mode,vertices\n")
        for seg in segments:
            voltage = "" if seg.voltage_kv is None else repr(seg.voltage_kv)
            verts = ";".join(f"{x!r} {y!r}" for x, y in seg.vertices)
            fh.write(
                f"{seg.segment_id},{seg.parent_line_id},{seg.length_km!r},"
                f"{voltage},{seg.crs_mode},{verts}\n"
            )


def read_segments_csv(path) -> list[LineSegment]:
    segments = []
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != "segment_id,parent_line_id,length_km,voltage_kv,crs_mode,vertices":
            raise ValueError(f"{path}: not a segments file (header {header!r})")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            seg_id, parent, length, voltage, crs_mode, verts = line.split(",", 5)
            vertices = tuple(
                (float(pair.split()[0]), float(pair.split()[1]))
                for pair in verts.split(";")
            )
            segments.append(
                LineSegment(
                    segment_id=seg_id,
                    parent_line_id=parent,
                    vertices=vertices,
                    length_km=float(length),
                    voltage_kv=float(voltage) if voltage else None,
                    crs_mode=crs_mode,
                )
            )
    return segments


def vector_in_segment_order(
    vector: RiskVector, segments: Sequence[LineSegment]
) -> RiskVector:
    """Reorder a risk vector to match a segment sequence, id for id."""
    import numpy as np

    by_id = {sid: float(r) for sid, r in zip(vector.segment_ids, vector.R)}
    seg_ids = [seg.segment_id for seg in segments]
    if set(by_id) != set(seg_ids) or len(by_id) != len(seg_ids):
        raise SegmentUniverseMismatch(
            "risk vector and segments file cover different segment sets"
        )
    return RiskVector(
        segment_ids=tuple(seg_ids),
        R=np.array([by_id[sid] for sid in seg_ids], dtype=np.float64),
        provenance=vector.provenance,
    )


def plan_feature_collection(
    plan,
    segments: Sequence[LineSegment],
    vector: RiskVector,
    costs: Sequence[float],
    include_unselected: bool = False,
) -> dict:
    """Feature collection of the plan's segments for external map tooling."""
    features = []
    for seg, r, cost in zip(segments, vector.R, costs):
        selected = seg.segment_id in plan.selected
        if not selected and not include_unselected:
            continue
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[x, y] for x, y in seg.vertices],
                },
                "properties": {
                    "id": seg.segment_id,
                    "selected": selected,
                    "R": float(r),
                    "cost_usd": float(cost),
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return f"sha256:{digest.hexdigest()}"


def write_manifest(
    manifest_path,
    command: str,
    config: dict,
    inputs: Sequence[str],
    outputs: Sequence[str],
) -> None:
    """Record what a run did: config echo plus input digests. No timestamps,
    so reruns on identical inputs produce identical manifests."""
    body = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    with open(manifest_path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
