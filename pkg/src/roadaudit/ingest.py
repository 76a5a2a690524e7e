"""Parsers for detection, GPS, and condition logs plus frame geolocation.

Log formats (UTF-8, one record per line, `#` starts a comment):

  detections:  frame class x y w h confidence [key=value ...]
  gps:         t lat lon
  conditions:  second lanes vehicles potholes bridge hour
"""
from __future__ import annotations

import io
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Union

from .model import (
    BoundingBox,
    ConditionAnnotation,
    ConditionLabel,
    DamageLevel,
    DetectionClass,
    DetectionRecord,
    GeoSample,
    IngestError,
    PositionUnavailable,
    RoadType,
    TimeOfDay,
    TrafficDensity,
    VideoMeta,
)

Source = Union[str, Path, IO[str], IO[bytes], Iterable[str]]

_ATTR_KEYS = ("sign_state", "helmet_state", "plate", "lane_fraction")


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    line: str
    reason: str


@dataclass
class ParsedDetections:
    records: list[DetectionRecord]
    rejected: list[RejectedLine] = field(default_factory=list)

    @property
    def n_malformed(self) -> int:
        return len(self.rejected)


def _iter_lines(source: Source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                yield from fh
        except (OSError, UnicodeDecodeError) as exc:
            raise IngestError(f"cannot read {source}: {exc}") from exc
        return
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        try:
            data = source.read()
        except OSError as exc:
            raise IngestError(f"cannot read stream: {exc}") from exc
        if isinstance(data, bytes):
            try:
                data = data.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise IngestError(f"stream is not valid UTF-8: {exc}") from exc
        yield from io.StringIO(data)
        return
    yield from source


def parse_detection_log(source: Source, meta: VideoMeta) -> ParsedDetections:
    """Parse detector output, keeping valid records bit-exactly.

    Output is stably sorted by frame. Malformed lines (bad syntax, out of
    bounds boxes, frame index past the video) are collected as rejects
    with a diagnostic, never silently dropped.
    """
    records: list[DetectionRecord] = []
    rejected: list[RejectedLine] = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            records.append(_parse_detection_line(line, meta))
        except ValueError as exc:
            rejected.append(RejectedLine(line_no, line, str(exc)))
    records.sort(key=lambda r: r.frame)
    return ParsedDetections(records, rejected)


def _parse_detection_line(line: str, meta: VideoMeta) -> DetectionRecord:
    parts = line.split()
    if len(parts) < 7:
        raise ValueError(f"expected at least 7 fields, got {len(parts)}")
    frame = int(parts[0])
    try:
        cls = DetectionClass(parts[1])
    except ValueError:
        raise ValueError(f"unknown class {parts[1]!r}") from None
    x, y, w, h = (float(p) for p in parts[2:6])
    confidence = float(parts[6])

    if frame >= meta.frame_count:
        raise ValueError(f"frame {frame} outside video of {meta.frame_count} frames")
    box = BoundingBox(x, y, w, h)
    if x < 0 or y < 0 or box.x2 > meta.width or box.y2 > meta.height:
        raise ValueError(f"box {x},{y},{w},{h} outside {meta.width}x{meta.height} frame")

    attrs: dict[str, object] = {}
    for token in parts[7:]:
        key, sep, value = token.partition("=")
        if not sep or key not in _ATTR_KEYS:
            raise ValueError(f"unrecognized attribute token {token!r}")
        if key in attrs:
            raise ValueError(f"duplicate attribute {key!r}")
        attrs[key] = float(value) if key == "lane_fraction" else value

    return DetectionRecord(
        frame=frame,
        cls=cls,
        box=box,
        confidence=confidence,
        sign_state=attrs.get("sign_state"),
        helmet_state=attrs.get("helmet_state"),
        plate_text=attrs.get("plate"),
        lane_fraction=attrs.get("lane_fraction"),
    )


def format_detection_record(rec: DetectionRecord) -> str:
    """Inverse of the detection line parser; floats use repr for lossless round-trips."""
    b = rec.box
    parts = [
        str(rec.frame),
        rec.cls.value,
        repr(b.x),
        repr(b.y),
        repr(b.w),
        repr(b.h),
        repr(rec.confidence),
    ]
    if rec.sign_state is not None:
        parts.append(f"sign_state={rec.sign_state}")
    if rec.helmet_state is not None:
        parts.append(f"helmet_state={rec.helmet_state}")
    if rec.plate_text is not None:
        parts.append(f"plate={rec.plate_text}")
    if rec.lane_fraction is not None:
        parts.append(f"lane_fraction={rec.lane_fraction!r}")
    return " ".join(parts)


@dataclass
class RouteTrace:
    """A 1 Hz GPS trace split into contiguous segments at long dropouts.

    Linear interpolation over a dropout longer than max_gap_s would
    fabricate geometry, so those intervals yield no position at all.
    """

    samples: list[GeoSample]
    max_gap_s: float = 5.0
    segments: list[tuple[int, int]] = field(init=False)
    _times: list[float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        for a, b in zip(self.samples, self.samples[1:]):
            if b.t <= a.t:
                raise ValueError(f"GPS times must be strictly increasing ({a.t} -> {b.t})")
        self.segments = []
        start = 0
        for i in range(1, len(self.samples)):
            if self.samples[i].t - self.samples[i - 1].t > self.max_gap_s:
                self.segments.append((start, i - 1))
                start = i
        if self.samples:
            self.segments.append((start, len(self.samples) - 1))
        self._times = [s.t for s in self.samples]

    @property
    def span(self) -> tuple[float, float]:
        if not self.samples:
            raise PositionUnavailable("trace is empty")
        return self.samples[0].t, self.samples[-1].t

    def locate(self, t: float) -> tuple[float, float]:
        """Piecewise-linear position at time t; exact at sample knots."""
        if len(self.samples) < 2:
            if len(self.samples) == 1 and self.samples[0].t == t:
                return self.samples[0].lat, self.samples[0].lon
            raise PositionUnavailable("trace has fewer than 2 samples")
        t0, t1 = self.span
        if t < t0 or t > t1:
            raise PositionUnavailable(f"t={t} outside trace span [{t0}, {t1}]")
        idx = bisect_right(self._times, t) - 1
        if idx == len(self.samples) - 1:
            last = self.samples[-1]
            return last.lat, last.lon
        a, b = self.samples[idx], self.samples[idx + 1]
        if t == a.t:
            return a.lat, a.lon
        if b.t - a.t > self.max_gap_s:
            raise PositionUnavailable(f"t={t} falls in a GPS dropout of {b.t - a.t:.1f}s")
        frac = (t - a.t) / (b.t - a.t)
        return a.lat + frac * (b.lat - a.lat), a.lon + frac * (b.lon - a.lon)


def parse_gps_log(source: Source, max_gap_s: float = 5.0) -> RouteTrace:
    samples = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise IngestError(f"gps line {line_no}: expected `t lat lon`, got {line!r}")
        try:
            samples.append(GeoSample(float(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise IngestError(f"gps line {line_no}: {exc}") from exc
    return RouteTrace(samples, max_gap_s=max_gap_s)


def interpolate_position(trace: RouteTrace, frame: int, fps: float) -> tuple[float, float]:
    """Ego position at a frame's timestamp; raises PositionUnavailable
    outside the trace span or inside a dropout (no extrapolation)."""
    return trace.locate(frame / fps)


def frame_positions(trace: RouteTrace, fps: float, frame_count: int) -> dict[int, tuple[float, float]]:
    """Positions for every frame that has one; gap/out-of-span frames are absent."""
    out = {}
    for frame in range(frame_count):
        try:
            out[frame] = trace.locate(frame / fps)
        except PositionUnavailable:
            continue
    return out


def parse_condition_log(source: Source) -> list[ConditionAnnotation]:
    annotations = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 6:
            raise IngestError(
                f"condition line {line_no}: expected `second lanes vehicles potholes bridge hour`"
            )
        try:
            annotations.append(
                ConditionAnnotation(
                    second=int(parts[0]),
                    lanes=int(parts[1]),
                    vehicles=int(parts[2]),
                    potholes=int(parts[3]),
                    bridge=_parse_bool(parts[4]),
                    capture_hour=int(parts[5]),
                )
            )
        except ValueError as exc:
            raise IngestError(f"condition line {line_no}: {exc}") from exc
    return annotations


def _parse_bool(token: str) -> bool:
    if token in ("1", "true"):
        return True
    if token in ("0", "false"):
        return False
    raise ValueError(f"expected boolean 0/1, got {token!r}")


def label_condition(a: ConditionAnnotation) -> ConditionLabel:
    """Derive the hierarchical condition label from one annotation.

    The bridge flag dominates lane count for the road type; hour bands
    are half-open so noon boundaries classify deterministically.
    """
    if a.lanes == 0:
        raise ValueError("annotation with zero lanes cannot be classified")

    if a.bridge:
        road = RoadType.BRIDGE
    elif a.lanes == 1:
        road = RoadType.NARROW
    elif a.lanes <= 3:
        road = RoadType.STANDARD
    else:
        road = RoadType.HIGHWAY

    if a.vehicles <= 4:
        traffic = TrafficDensity.SPARSE
    elif a.vehicles <= 8:
        traffic = TrafficDensity.MODERATE
    else:
        traffic = TrafficDensity.DENSE

    if a.potholes <= 2:
        damage = DamageLevel.LOW
    elif a.potholes <= 4:
        damage = DamageLevel.MODERATE
    else:
        damage = DamageLevel.HIGH

    if 7 <= a.capture_hour < 12:
        tod = TimeOfDay.MORNING
    elif 12 <= a.capture_hour < 16:
        tod = TimeOfDay.NOON
    elif 16 <= a.capture_hour < 19:
        tod = TimeOfDay.EVENING
    else:
        tod = TimeOfDay.UNLABELED

    return ConditionLabel(road_type=road, traffic=traffic, damage=damage, time_of_day=tod)


def labels_by_second(annotations: Iterable[ConditionAnnotation]) -> dict[int, ConditionLabel]:
    return {a.second: label_condition(a) for a in annotations}


def frame_label(
    labels: dict[int, ConditionLabel], frame: int, fps: float
) -> ConditionLabel | None:
    return labels.get(int(math.floor(frame / fps)))
