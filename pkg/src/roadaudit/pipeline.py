"""End-to-end orchestration: logs in, tracks/irregularities/report out.

One SequenceInput carries the file contents (or paths) for a single
video sequence; run_sequence pushes it through parsing, tracking,
temporal fusion, and geometry; run_city aggregates sequences into the
city-level report and the irregularity list the service persists.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import PipelineConfig
from .fusion import (
    FusedTrack,
    RiderGroup,
    ViolationRecord,
    associate_riders,
    filter_short_tracks,
    fuse_tracks,
    violation_records,
)
from .geometrics import (
    GeoTaggedObject,
    SafetyReport,
    SequenceMetrics,
    Stretch,
    build_report,
    geotag,
    lane_stretches,
    pothole_stretches,
    route_length,
    route_offsets,
    streetlight_spacing,
    visibility_range,
)
from .ingest import (
    ParsedDetections,
    frame_positions,
    labels_by_second,
    parse_condition_log,
    parse_detection_log,
    parse_gps_log,
    Source,
)
from .model import ConditionLabel, DetectionClass, VideoMeta
from .tracking import Track, Tracker


@dataclass
class SequenceInput:
    meta: VideoMeta
    detections: Source
    gps: Source
    conditions: Optional[Source] = None


@dataclass
class SequenceResult:
    sequence_id: str
    parsed: ParsedDetections
    tracks: list[Track]
    reported_tracks: list[Track]  # confirmed and long enough to trust
    fused: list[FusedTrack]
    rider_groups: list[RiderGroup]
    violations: list[ViolationRecord]
    geotagged: list[GeoTaggedObject]
    offsets: dict[int, float]
    positions: dict[int, tuple[float, float]]
    metrics: SequenceMetrics
    labels: dict[int, ConditionLabel] = field(default_factory=dict)

    @property
    def lane_stretch_list(self) -> list[Stretch]:
        return self.metrics.lane_stretch_list

    @property
    def pothole_stretch_list(self) -> list[Stretch]:
        return self.metrics.pothole_stretch_list


def run_sequence(inp: SequenceInput, config: PipelineConfig | None = None) -> SequenceResult:
    config = config or PipelineConfig()
    meta = inp.meta

    parsed = parse_detection_log(inp.detections, meta)
    trace = parse_gps_log(inp.gps, max_gap_s=config.metrics.gps_gap_s)
    labels = (
        labels_by_second(parse_condition_log(inp.conditions)) if inp.conditions is not None else {}
    )

    by_frame: dict[int, list] = {}
    for rec in parsed.records:
        by_frame.setdefault(rec.frame, []).append(rec)

    tracker = Tracker(config.tracker)
    last_frame = max(by_frame) if by_frame else -1
    for frame in range(last_frame + 1):
        tracker.step(frame, by_frame.get(frame, ()))
    tracks = tracker.tracks

    reported = filter_short_tracks(
        [t for t in tracks if t.was_confirmed], config.fusion.min_track_frames
    )
    fused = fuse_tracks(reported)

    positions = frame_positions(trace, meta.fps, meta.frame_count)
    offsets = route_offsets(positions)

    riders = [f for f in fused if f.cls is DetectionClass.RIDER]
    motorcycles = [f for f in fused if f.cls is DetectionClass.MOTORCYCLE]
    groups = associate_riders(riders, motorcycles, config.fusion)
    violations = violation_records(groups, meta.sequence_id)

    geotagged = []
    for f in fused:
        tagged = geotag(f, positions, offsets, meta.sequence_id)
        if tagged is not None:
            geotagged.append(tagged)

    sign_tracks = [f for f in fused if f.cls is DetectionClass.TRAFFIC_SIGN]
    sign_vis = [v for v in (visibility_range(f, offsets) for f in sign_tracks) if v is not None]
    sign_states = [f.fused_attr for f in sign_tracks]

    lights = sorted(
        (g for g in geotagged if g.object_type == DetectionClass.STREET_LIGHT.value),
        key=lambda g: g.route_offset_m,
    )
    light_gap = streetlight_spacing(lights)

    lane_fraction_by_frame: dict[int, float] = {}
    for rec in parsed.records:
        if rec.lane_fraction is not None and rec.frame not in lane_fraction_by_frame:
            lane_fraction_by_frame[rec.frame] = rec.lane_fraction

    lanes = lane_stretches(lane_fraction_by_frame, offsets, meta.sequence_id, config.metrics)
    holes = [g for g in geotagged if g.object_type == DetectionClass.POTHOLE.value]
    hole_stretches, _ = pothole_stretches(holes, offsets, meta.sequence_id, config.metrics)

    metrics = SequenceMetrics(
        sequence_id=meta.sequence_id,
        route_length_m=route_length(offsets),
        sign_visibilities=sign_vis,
        sign_states=sign_states,
        light_gap_mean_m=light_gap,
        lane_stretch_list=lanes,
        pothole_stretch_list=hole_stretches,
        rider_groups=groups,
    )
    return SequenceResult(
        sequence_id=meta.sequence_id,
        parsed=parsed,
        tracks=tracks,
        reported_tracks=reported,
        fused=fused,
        rider_groups=groups,
        violations=violations,
        geotagged=geotagged,
        offsets=offsets,
        positions=positions,
        metrics=metrics,
        labels=labels,
    )


@dataclass(frozen=True)
class Irregularity:
    """A geotagged, evidence-linked finding ready for review."""

    id: str
    type: str
    position: tuple[float, float]
    sequence_id: str
    anchor_frame: int
    severity: Optional[str]
    evidence: tuple[int, ...]


IRREGULARITY_TYPES = (
    "pothole",
    "defective_sign",
    "missing_street_light",
    "helmet_violation",
    "lane_marking_absent",
)


def extract_irregularities(result: SequenceResult, config: PipelineConfig | None = None) -> list[Irregularity]:
    """Materialize the reviewable findings of one sequence."""
    config = config or PipelineConfig()
    seq = result.sequence_id
    out: list[Irregularity] = []

    def add(kind: str, position, anchor: int, severity: Optional[str], evidence) -> None:
        out.append(
            Irregularity(
                id=f"{seq}/{kind}/{len(out)}",
                type=kind,
                position=position,
                sequence_id=seq,
                anchor_frame=anchor,
                severity=severity,
                evidence=tuple(evidence),
            )
        )

    for g in result.geotagged:
        if g.object_type == DetectionClass.POTHOLE.value:
            add("pothole", g.position, g.anchor_frame, None, g.evidence)
        elif g.object_type == DetectionClass.TRAFFIC_SIGN.value and g.fused_attr == "defective":
            add("defective_sign", g.position, g.anchor_frame, "defective", g.evidence)

    lights = sorted(
        (g for g in result.geotagged if g.object_type == DetectionClass.STREET_LIGHT.value),
        key=lambda g: g.route_offset_m,
    )
    for a, b in zip(lights, lights[1:]):
        gap = b.route_offset_m - a.route_offset_m
        if gap > config.metrics.missing_light_gap_m:
            midpoint = _position_at_offset(result, (a.route_offset_m + b.route_offset_m) / 2.0)
            if midpoint is not None:
                frame, pos = midpoint
                add("missing_street_light", pos, frame, f"gap_{gap:.0f}m",
                    (a.anchor_frame, b.anchor_frame))

    for violation in result.violations:
        anchor = violation.evidence_frames[len(violation.evidence_frames) // 2]
        pos = result.positions.get(anchor)
        if pos is None:
            continue
        add("helmet_violation", pos, anchor,
            f"{violation.n_no_helmet}_of_{violation.n_riders}", violation.evidence_frames)

    for stretch in result.lane_stretch_list:
        if stretch.label == "absent":
            midpoint = _position_at_offset(result, (stretch.start_m + stretch.end_m) / 2.0)
            if midpoint is not None:
                frame, pos = midpoint
                add("lane_marking_absent", pos, frame, "absent", (frame,))
    return out


def _position_at_offset(result: SequenceResult, offset: float) -> Optional[tuple[int, tuple[float, float]]]:
    """Positioned frame nearest to a route offset."""
    best = None
    best_d = None
    for frame, off in result.offsets.items():
        d = abs(off - offset)
        if best_d is None or d < best_d:
            best_d = d
            best = frame
    if best is None:
        return None
    return best, result.positions[best]


@dataclass
class CityRunResult:
    sequences: list[SequenceResult]
    report: SafetyReport
    irregularities: list[Irregularity]

    @property
    def violations(self) -> list[ViolationRecord]:
        return [v for s in self.sequences for v in s.violations]

    @property
    def stretches(self) -> list[Stretch]:
        return [
            st
            for s in self.sequences
            for st in (s.lane_stretch_list + s.pothole_stretch_list)
        ]


def run_city(inputs: Sequence[SequenceInput], config: PipelineConfig | None = None) -> CityRunResult:
    config = config or PipelineConfig()
    results = [run_sequence(inp, config) for inp in inputs]
    report = build_report([r.metrics for r in results])
    irregularities = [i for r in results for i in extract_irregularities(r, config)]
    return CityRunResult(sequences=results, report=report, irregularities=irregularities)
