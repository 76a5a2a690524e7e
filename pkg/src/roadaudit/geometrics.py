"""Route geometry and city-level safety metrics.

Confirmed tracks become geotagged objects anchored at their closest
approach; the route is cut into fixed-length stretches that carry lane
and pothole classifications; everything aggregates into a six-column
city report. A metric with no supporting data is reported as absent
(None), never as zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .config import MetricsConfig
from .fusion import FusedTrack, RiderGroup
EARTH_RADIUS_M = 6_371_000.0

LANE_FAIR = "fair"
LANE_FADED = "faded"
LANE_ABSENT = "absent"

POTHOLE_FAIR = "fair"
POTHOLE_AVERAGE = "average"
POTHOLE_POOR = "poor"


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between two (lat, lon) points."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def route_offsets(positions: dict[int, tuple[float, float]]) -> dict[int, float]:
    """Cumulative path length in meters at each positioned frame.

    The first positioned frame sits at offset 0; consecutive positioned
    frames accumulate great-circle hops, so offsets never decrease.
    """
    offsets: dict[int, float] = {}
    total = 0.0
    prev = None
    for frame in sorted(positions):
        if prev is not None:
            total += haversine(positions[prev], positions[frame])
        offsets[frame] = total
        prev = frame
    return offsets


def route_length(offsets: dict[int, float]) -> float:
    return max(offsets.values()) if offsets else 0.0


@dataclass(frozen=True)
class GeoTaggedObject:
    object_type: str
    position: tuple[float, float]
    anchor_frame: int
    sequence_id: str
    route_offset_m: float
    fused_attr: Optional[str] = None
    evidence: tuple[int, ...] = ()


def geotag(
    fused: FusedTrack,
    positions: dict[int, tuple[float, float]],
    offsets: dict[int, float],
    sequence_id: str,
) -> Optional[GeoTaggedObject]:
    """Tag a track at the frame of maximal box area (closest approach).

    Ties go to the earliest frame; frames without a position cannot
    anchor. Returns None when no frame of the track is positioned.
    """
    anchor = None
    best_area = -1.0
    for frame, det in fused.track.history:
        if frame not in positions:
            continue
        if det.box.area > best_area:
            best_area = det.box.area
            anchor = frame
    if anchor is None:
        return None
    return GeoTaggedObject(
        object_type=fused.cls.value,
        position=positions[anchor],
        anchor_frame=anchor,
        sequence_id=sequence_id,
        route_offset_m=offsets[anchor],
        fused_attr=fused.fused_attr,
        evidence=tuple(f for f, _ in fused.track.history),
    )


def visibility_range(fused: FusedTrack, offsets: dict[int, float]) -> Optional[float]:
    """Ego path length between a track's first and last detection frames."""
    first = fused.track.first_frame
    last = fused.track.last_frame
    if first not in offsets or last not in offsets:
        return None
    return offsets[last] - offsets[first]


def streetlight_spacing(lights: Sequence[GeoTaggedObject]) -> Optional[float]:
    """Mean gap between route-consecutive lights; absent below 2 lights."""
    if len(lights) < 2:
        return None
    ordered = sorted(lights, key=lambda g: g.route_offset_m)
    gaps = [b.route_offset_m - a.route_offset_m for a, b in zip(ordered, ordered[1:])]
    return sum(gaps) / len(gaps)


@dataclass(frozen=True)
class Stretch:
    sequence_id: str
    kind: str  # "lane" or "pothole"
    start_m: float
    end_m: float
    score: Optional[float]
    count: Optional[int]
    label: Optional[str]

    @property
    def length_m(self) -> float:
        return self.end_m - self.start_m


def _stretch_grid(total_m: float, stretch_m: float) -> list[tuple[float, float]]:
    if total_m <= 0.0:
        return []
    n = int(math.ceil(total_m / stretch_m))
    return [(i * stretch_m, min((i + 1) * stretch_m, total_m)) for i in range(n)]


def _bin_index(offset: float, stretch_m: float, n: int) -> int:
    return min(int(offset // stretch_m), n - 1)


def lane_stretches(
    lane_fraction_by_frame: dict[int, float],
    offsets: dict[int, float],
    sequence_id: str,
    cfg: MetricsConfig | None = None,
) -> list[Stretch]:
    """Score 50 m stretches by mean lane-marking pixel fraction.

    fair >= fair threshold > faded >= faded threshold > absent; a stretch
    with no scored frames stays unclassified (label None).
    """
    cfg = cfg or MetricsConfig()
    grid = _stretch_grid(route_length(offsets), cfg.lane_stretch_m)
    sums = [0.0] * len(grid)
    counts = [0] * len(grid)
    for frame, fraction in lane_fraction_by_frame.items():
        if frame not in offsets or not grid:
            continue
        k = _bin_index(offsets[frame], cfg.lane_stretch_m, len(grid))
        sums[k] += fraction
        counts[k] += 1

    out = []
    for (start, end), total, n in zip(grid, sums, counts):
        if n == 0:
            out.append(Stretch(sequence_id, "lane", start, end, None, None, None))
            continue
        score = total / n
        if score >= cfg.lane_fair_min:
            label = LANE_FAIR
        elif score >= cfg.lane_faded_min:
            label = LANE_FADED
        else:
            label = LANE_ABSENT
        out.append(Stretch(sequence_id, "lane", start, end, score, None, label))
    return out


def pothole_stretches(
    potholes: Sequence[GeoTaggedObject],
    offsets: dict[int, float],
    sequence_id: str,
    cfg: MetricsConfig | None = None,
) -> tuple[list[Stretch], Optional[float]]:
    """Count potholes per 100 m stretch and classify road-surface quality.

    Returns the stretches plus the percentage of stretches containing at
    least one pothole (None when the route has no stretches).
    """
    cfg = cfg or MetricsConfig()
    grid = _stretch_grid(route_length(offsets), cfg.pothole_stretch_m)
    counts = [0] * len(grid)
    for obj in potholes:
        if not grid:
            break
        counts[_bin_index(obj.route_offset_m, cfg.pothole_stretch_m, len(grid))] += 1

    out = []
    for (start, end), count in zip(grid, counts):
        if count <= cfg.pothole_fair_max:
            label = POTHOLE_FAIR
        elif count <= cfg.pothole_average_max:
            label = POTHOLE_AVERAGE
        else:
            label = POTHOLE_POOR
        out.append(Stretch(sequence_id, "pothole", start, end, None, count, label))
    if not grid:
        return out, None
    pct = 100.0 * sum(1 for c in counts if c >= 1) / len(grid)
    return out, pct


@dataclass(frozen=True)
class SafetyReport:
    """City-level aggregate; absent metrics stay None."""

    sign_visibility_mean_m: Optional[float] = None
    defective_sign_pct: Optional[float] = None
    streetlight_gap_mean_m: Optional[float] = None
    lane_no_marking_pct: Optional[float] = None
    pothole_stretch_pct: Optional[float] = None
    helmet_violation_pct: Optional[float] = None

    FIELDS = (
        "sign_visibility_mean_m",
        "defective_sign_pct",
        "streetlight_gap_mean_m",
        "lane_no_marking_pct",
        "pothole_stretch_pct",
        "helmet_violation_pct",
    )

    def as_dict(self) -> dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in self.FIELDS}


@dataclass
class SequenceMetrics:
    """Per-sequence raw material for the city report."""

    sequence_id: str
    route_length_m: float
    sign_visibilities: list[float]
    sign_states: list[Optional[str]]
    light_gap_mean_m: Optional[float]
    lane_stretch_list: list[Stretch]
    pothole_stretch_list: list[Stretch]
    rider_groups: list[RiderGroup]


def build_report(sequences: Sequence[SequenceMetrics]) -> SafetyReport:
    """Aggregate per-sequence metrics into the city report.

    Percentages pool raw counts across sequences; street-light gaps are
    weighted by route length because longer routes pin down the mean
    better. Metrics without any supporting data come out None.
    """
    visibilities = [v for s in sequences for v in s.sign_visibilities]
    sign_states = [st for s in sequences for st in s.sign_states if st is not None]
    lane_labels = [
        st.label for s in sequences for st in s.lane_stretch_list if st.label is not None
    ]
    pothole_sts = [st for s in sequences for st in s.pothole_stretch_list]
    groups = [g for s in sequences for g in s.rider_groups]

    vis_mean = sum(visibilities) / len(visibilities) if visibilities else None
    defective_pct = (
        100.0 * sum(1 for st in sign_states if st == "defective") / len(sign_states)
        if sign_states
        else None
    )

    weighted = [
        (s.light_gap_mean_m, s.route_length_m)
        for s in sequences
        if s.light_gap_mean_m is not None and s.route_length_m > 0
    ]
    light_mean = (
        sum(g * w for g, w in weighted) / sum(w for _, w in weighted) if weighted else None
    )

    lane_pct = (
        100.0 * sum(1 for lbl in lane_labels if lbl in (LANE_FADED, LANE_ABSENT)) / len(lane_labels)
        if lane_labels
        else None
    )
    pothole_pct = (
        100.0 * sum(1 for st in pothole_sts if (st.count or 0) >= 1) / len(pothole_sts)
        if pothole_sts
        else None
    )

    n_riders = sum(g.n_riders for g in groups)
    n_violating = sum(g.n_no_helmet for g in groups)
    helmet_pct = 100.0 * n_violating / n_riders if n_riders else None

    return SafetyReport(
        sign_visibility_mean_m=vis_mean,
        defective_sign_pct=defective_pct,
        streetlight_gap_mean_m=light_mean,
        lane_no_marking_pct=lane_pct,
        pothole_stretch_pct=pothole_pct,
        helmet_violation_pct=helmet_pct,
    )


def format_report_table(report: SafetyReport) -> str:
    """Human-readable one-line-per-metric table (one decimal place)."""

    def fmt(value: Optional[float], unit: str) -> str:
        if value is None:
            return "absent"
        return f"{value:.1f}{unit}"

    rows = [
        ("Traffic sign visibility range (mean)", fmt(report.sign_visibility_mean_m, "m")),
        ("Defective traffic signs", fmt(report.defective_sign_pct, " %")),
        ("Street light pair distance (mean)", fmt(report.streetlight_gap_mean_m, "m")),
        ("Lane stretches without markings", fmt(report.lane_no_marking_pct, " %")),
        ("Stretches with potholes", fmt(report.pothole_stretch_pct, " %")),
        ("Riders violating helmet rules", fmt(report.helmet_violation_pct, " %")),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
