"""Serialization of run results: CSV tables and GeoJSON map layers.

All writers are deterministic: rows are emitted in a defined order and
floats use repr, so identical runs produce byte-identical files.
"""
from __future__ import annotations

import json
from typing import IO, Iterable, Sequence

from .geometrics import SafetyReport, Stretch
from .pipeline import CityRunResult, Irregularity, SequenceResult


def write_report_csv(report: SafetyReport, out: IO[str]) -> None:
    out.write(",".join(SafetyReport.FIELDS) + "\n")
    row = []
    for name in SafetyReport.FIELDS:
        value = getattr(report, name)
        row.append("" if value is None else repr(value))
    out.write(",".join(row) + "\n")


def write_stretch_csv(stretches: Sequence[Stretch], out: IO[str]) -> None:
    """Rows of `sequence start_m end_m score_or_count class`."""
    out.write("sequence,start_m,end_m,score_or_count,class\n")
    for s in stretches:
        value = s.score if s.score is not None else s.count
        value_s = "" if value is None else repr(value)
        label = s.label if s.label is not None else "unclassified"
        out.write(f"{s.sequence_id},{s.start_m!r},{s.end_m!r},{value_s},{label}\n")


def irregularities_geojson(items: Iterable[Irregularity]) -> dict:
    features = []
    for item in items:
        lat, lon = item.position
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [lon, lat]},
                "properties": {
                    "id": item.id,
                    "type": item.type,
                    "sequence_id": item.sequence_id,
                    "anchor_frame": item.anchor_frame,
                    "severity": item.severity,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def stretches_geojson(results: Sequence[SequenceResult], kind: str) -> dict:
    """LineString per stretch, traced through the frames inside it."""
    features = []
    for result in results:
        stretches = (
            result.lane_stretch_list if kind == "lane" else result.pothole_stretch_list
        )
        frames = sorted(result.offsets)
        for s in stretches:
            coords = [
                [result.positions[f][1], result.positions[f][0]]
                for f in frames
                if s.start_m <= result.offsets[f] <= s.end_m
            ]
            if len(coords) < 2:
                continue
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "LineString", "coordinates": coords},
                    "properties": {
                        "sequence_id": s.sequence_id,
                        "kind": s.kind,
                        "start_m": s.start_m,
                        "end_m": s.end_m,
                        "score": s.score,
                        "count": s.count,
                        "class": s.label,
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}


def write_geojson(payload: dict, out: IO[str]) -> None:
    json.dump(payload, out, sort_keys=True, separators=(",", ":"))
    out.write("\n")


def write_violations(result: CityRunResult, out: IO[str]) -> None:
    for v in result.violations:
        out.write(v.format_line() + "\n")
