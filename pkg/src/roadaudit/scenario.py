"""Synthetic road scenarios with exact ground truth.

Two generators live here:

* ``generate(spec)`` builds a full route-world: an ego vehicle drives a
  waypoint route at constant speed while street lights, signs, potholes,
  and oncoming rider/motorcycle groups project into the image through a
  pinhole-style size law (box area strictly grows as distance shrinks).
  It emits the exact detection/GPS/condition log formats the ingest
  module parses, plus a ground-truth bundle.
* ``generate_scene(spec)`` builds bare image-space scenes (linear box
  motion, optional capped dropout) for exercising the tracker against
  known identities.

``oracle_metrics(spec)`` computes the city report straight from the
scenario geometry, bypassing detection and tracking entirely, so a
zero-noise pipeline run can be checked against independent truth.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import MetricsConfig
from .geometrics import EARTH_RADIUS_M, SafetyReport
from .ingest import format_detection_record
from .model import BoundingBox, DetectionClass, DetectionRecord

IMAGE_W = 1920
IMAGE_H = 1080
FOCAL_PX = 700.0
CAMERA_HEIGHT_M = 1.5
HORIZON_Y = IMAGE_H / 2.0

# Per-type world geometry: (width_m, height_m, center_height_m,
# lateral_offset_m, first_visible_m, last_visible_m). Near bounds stay
# generous: inside them the 1/d^2 perspective blow-up outruns what a
# constant-velocity box model can reacquire after a missed frame.
OBJECT_GEOMETRY = {
    DetectionClass.STREET_LIGHT: (0.6, 4.0, 5.0, 4.0, 30.0, 15.0),
    DetectionClass.TRAFFIC_SIGN: (0.8, 0.8, 2.5, 3.5, 40.0, 10.0),
    DetectionClass.POTHOLE: (1.0, 0.4, 0.0, -0.5, 25.0, 10.0),
    DetectionClass.RIDER: (0.6, 1.6, 1.6, -2.5, 30.0, 10.0),
    DetectionClass.MOTORCYCLE: (0.7, 1.2, 0.7, -2.5, 30.0, 10.0),
}

_DEG_PER_M = 180.0 / (math.pi * EARTH_RADIUS_M)


@dataclass(frozen=True)
class NoiseModel:
    miss_rate: float = 0.0
    false_positive_rate: float = 0.0
    box_jitter_px: float = 0.0
    attr_flip_prob: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("miss_rate", "false_positive_rate", "attr_flip_prob"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class SignSpec:
    offset_m: float
    defective: bool = False


@dataclass(frozen=True)
class LaneRegion:
    start_m: float
    end_m: float
    fraction: float


@dataclass(frozen=True)
class RiderGroupSpec:
    """One oncoming rider group: visibility starts when the ego vehicle
    reaches encounter_offset_m; each helmets entry is one rider."""

    encounter_offset_m: float
    helmets: tuple[bool, ...] = (True,)
    plate: Optional[str] = None
    speed_mps: float = 12.5


@dataclass(frozen=True)
class BlipSpec:
    """A planted short-lived false-positive detection."""

    cls: DetectionClass
    start_frame: int
    n_frames: int
    box: BoundingBox


@dataclass(frozen=True)
class ScenarioSpec:
    route: tuple[tuple[float, float], ...] = ((0.0, 0.0), (0.2248, 0.0))  # ~25 km north
    ego_speed_mps: float = 12.5
    fps: float = 15.0
    sequence_id: str = "seq-000"
    light_spacing_m: Optional[float] = None
    light_start_m: float = 600.0
    signs: tuple[SignSpec, ...] = ()
    pothole_offsets: tuple[float, ...] = ()
    rider_groups: tuple[RiderGroupSpec, ...] = ()
    lane_profile: tuple[LaneRegion, ...] = ()
    blips: tuple[BlipSpec, ...] = ()
    noise: NoiseModel = field(default_factory=NoiseModel)
    detection_confidence: float = 0.9
    # Constant per-second condition annotation fields.
    ann_lanes: int = 2
    ann_vehicles: int = 3
    ann_potholes: int = 0
    ann_bridge: bool = False
    ann_hour: int = 10

    def __post_init__(self) -> None:
        if len(self.route) < 2:
            raise ValueError("route needs at least 2 waypoints")
        if self.ego_speed_mps <= 0:
            raise ValueError("ego speed must be positive")
        if self.light_spacing_m is not None and self.light_spacing_m <= 0:
            raise ValueError("light spacing must be positive")


class _Route:
    """Piecewise-linear route over waypoints, parameterized by distance."""

    def __init__(self, waypoints: Sequence[tuple[float, float]]):
        self.points = list(waypoints)
        self.cum = [0.0]
        for a, b in zip(self.points, self.points[1:]):
            self.cum.append(self.cum[-1] + _flat_distance(a, b))
        self.total = self.cum[-1]

    def position(self, d: float) -> tuple[float, float]:
        d = min(max(d, 0.0), self.total)
        for i in range(len(self.points) - 1):
            if d <= self.cum[i + 1] or i == len(self.points) - 2:
                seg = self.cum[i + 1] - self.cum[i]
                frac = 0.0 if seg == 0.0 else (d - self.cum[i]) / seg
                a, b = self.points[i], self.points[i + 1]
                return (a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1]))
        return self.points[-1]


def _flat_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Equirectangular segment length; adequate over city-scale segments."""
    mean_lat = math.radians((a[0] + b[0]) / 2.0)
    dy = (b[0] - a[0]) / _DEG_PER_M
    dx = (b[1] - a[1]) / _DEG_PER_M * math.cos(mean_lat)
    return math.hypot(dx, dy)


def project_box(cls: DetectionClass, distance_m: float, lateral_m: float | None = None) -> BoundingBox:
    """Pinhole projection of an object at a ground distance ahead.

    Width and height scale as 1/distance, so area is strictly monotone
    in distance within the visibility window.
    """
    width_m, height_m, center_h, default_lat, _, _ = OBJECT_GEOMETRY[cls]
    lateral = default_lat if lateral_m is None else lateral_m
    w = FOCAL_PX * width_m / distance_m
    h = FOCAL_PX * height_m / distance_m
    cx = IMAGE_W / 2.0 + FOCAL_PX * lateral / distance_m
    cy = HORIZON_Y + FOCAL_PX * (CAMERA_HEIGHT_M - center_h) / distance_m
    return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h)


@dataclass(frozen=True)
class GTObject:
    object_id: int
    cls: str
    offset_m: float
    lat: float
    lon: float
    defective: Optional[bool] = None
    helmet: Optional[bool] = None
    plate: Optional[str] = None
    group: Optional[int] = None


@dataclass
class GroundTruth:
    sequence_id: str
    fps: float
    ego_speed_mps: float
    traveled_m: float
    frame_count: int
    objects: list[GTObject]
    # Pre-noise truth: (frame, object_id, class, x, y, w, h).
    frame_boxes: list[tuple[int, int, str, float, float, float, float]]
    n_riders: int
    n_violators: int

    def to_json(self) -> str:
        payload = {
            "sequence_id": self.sequence_id,
            "fps": self.fps,
            "ego_speed_mps": self.ego_speed_mps,
            "traveled_m": self.traveled_m,
            "frame_count": self.frame_count,
            "n_riders": self.n_riders,
            "n_violators": self.n_violators,
            "objects": [asdict(o) for o in self.objects],
            "frame_boxes": self.frame_boxes,
        }
        return json.dumps(payload, sort_keys=True)

    def box_identity(self) -> dict[tuple[int, str, float, float, float, float], int]:
        """(frame, class, box) -> object id, valid for zero-jitter runs."""
        return {
            (frame, cls, x, y, w, h): oid
            for frame, oid, cls, x, y, w, h in self.frame_boxes
        }


@dataclass
class ScenarioBundle:
    spec: ScenarioSpec
    detection_log: str
    gps_log: str
    condition_log: str
    ground_truth: GroundTruth

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "detections": out / "detections.log",
            "gps": out / "gps.log",
            "conditions": out / "conditions.log",
            "ground_truth": out / "ground_truth.json",
        }
        paths["detections"].write_text(self.detection_log, encoding="utf-8")
        paths["gps"].write_text(self.gps_log, encoding="utf-8")
        paths["conditions"].write_text(self.condition_log, encoding="utf-8")
        paths["ground_truth"].write_text(self.ground_truth.to_json(), encoding="utf-8")
        return paths


def light_offsets(spec: ScenarioSpec) -> list[float]:
    """Route offsets of every generated street light."""
    if spec.light_spacing_m is None:
        return []
    route = _Route(spec.route)
    n_sec = int(math.floor(route.total / spec.ego_speed_mps))
    traveled = spec.ego_speed_mps * n_sec
    vis_far = OBJECT_GEOMETRY[DetectionClass.STREET_LIGHT][4]
    out = []
    off = spec.light_start_m
    while off <= traveled - vis_far:
        out.append(off)
        off += spec.light_spacing_m
    return out


def lane_fraction_at(profile: Sequence[LaneRegion], offset: float) -> Optional[float]:
    for region in profile:
        if region.start_m <= offset < region.end_m:
            return region.fraction
    return None


def generate(spec: ScenarioSpec) -> ScenarioBundle:
    """Render the scenario into logs plus ground truth, deterministically."""
    route = _Route(spec.route)
    v = spec.ego_speed_mps
    fps = spec.fps
    n_sec = int(math.floor(route.total / v))
    frame_count = int(round(n_sec * fps)) + 1
    traveled = v * n_sec
    meters_per_frame = v / fps
    rng = np.random.default_rng(spec.noise.seed)

    # --- static world objects, in deterministic id order
    objects: list[GTObject] = []
    statics: list[tuple[int, DetectionClass, float, Optional[bool]]] = []

    def add_static(cls: DetectionClass, offset: float, defective: Optional[bool] = None) -> None:
        oid = len(objects)
        lat, lon = route.position(offset)
        objects.append(GTObject(oid, cls.value, offset, lat, lon, defective=defective))
        statics.append((oid, cls, offset, defective))

    for off in light_offsets(spec):
        add_static(DetectionClass.STREET_LIGHT, off)
    for sign in spec.signs:
        add_static(DetectionClass.TRAFFIC_SIGN, sign.offset_m, defective=sign.defective)
    for off in spec.pothole_offsets:
        add_static(DetectionClass.POTHOLE, off)

    # --- rider groups (oncoming traffic, one rider per helmets entry)
    n_riders = 0
    n_violators = 0
    rider_members: list[tuple[int, int, RiderGroupSpec, int, bool]] = []
    moto_members: list[tuple[int, int, RiderGroupSpec]] = []
    for gi, group in enumerate(spec.rider_groups):
        lat, lon = route.position(group.encounter_offset_m)
        for ri, helmet in enumerate(group.helmets):
            oid = len(objects)
            objects.append(
                GTObject(oid, DetectionClass.RIDER.value, group.encounter_offset_m,
                         lat, lon, helmet=helmet, group=gi)
            )
            rider_members.append((oid, gi, group, ri, helmet))
            n_riders += 1
            n_violators += 0 if helmet else 1
        moto_id = len(objects)
        objects.append(
            GTObject(moto_id, DetectionClass.MOTORCYCLE.value, group.encounter_offset_m,
                     lat, lon, plate=group.plate, group=gi)
        )
        moto_members.append((moto_id, gi, group))

    # --- per-frame visibility schedule
    per_frame: dict[int, list[tuple[int, DetectionClass, float, float | None, Optional[bool], Optional[str]]]] = {}

    def schedule(frame: int, entry) -> None:
        per_frame.setdefault(frame, []).append(entry)

    eps = 1e-9
    for oid, cls, offset, defective in statics:
        _, _, _, _, vis_far, vis_near = OBJECT_GEOMETRY[cls]
        f_start = max(0, int(math.ceil((offset - vis_far) / meters_per_frame - eps)))
        f_end = min(frame_count - 1, int(math.floor((offset - vis_near) / meters_per_frame + eps)))
        for f in range(f_start, f_end + 1):
            schedule(f, (oid, cls, offset - f * meters_per_frame, None, defective, None))

    for oid, gi, group, ri, helmet in rider_members:
        _schedule_oncoming(
            schedule, oid, DetectionClass.RIDER, group, v, fps, frame_count,
            lateral=-2.5 + 0.8 * ri, helmet=helmet,
        )
    for oid, gi, group in moto_members:
        width = 0.7 + 0.5 * (len(group.helmets) - 1)
        _schedule_oncoming(
            schedule, oid, DetectionClass.MOTORCYCLE, group, v, fps, frame_count,
            lateral=-2.5 + 0.4 * (len(group.helmets) - 1), plate=group.plate, width_m=width,
        )

    # --- emit logs
    det_lines: list[str] = []
    frame_boxes: list[tuple[int, int, str, float, float, float, float]] = []
    flip = {"normal": "defective", "defective": "normal",
            "helmet": "no_helmet", "no_helmet": "helmet"}

    for frame in range(frame_count):
        ego_off = frame * meters_per_frame
        lane_fraction = lane_fraction_at(spec.lane_profile, ego_off)
        for entry in per_frame.get(frame, ()):  # deterministic object order
            oid, cls, dist, extras, defective, plate = entry
            if extras is None:
                box = project_box(cls, dist)
            else:
                box = project_box(cls, dist, lateral_m=extras[0])
                if extras[1] is not None:
                    box = _override_width(box, extras[1], dist)
            frame_boxes.append((frame, oid, cls.value, box.x, box.y, box.w, box.h))

            if spec.noise.miss_rate > 0 and rng.random() < spec.noise.miss_rate:
                continue
            box = _jitter_box(box, spec.noise.box_jitter_px, rng)

            sign_state = helmet_state = None
            if cls is DetectionClass.TRAFFIC_SIGN:
                sign_state = "defective" if defective else "normal"
            if cls is DetectionClass.RIDER:
                helmet_state = "helmet" if objects[oid].helmet else "no_helmet"
            if spec.noise.attr_flip_prob > 0:
                if sign_state is not None and rng.random() < spec.noise.attr_flip_prob:
                    sign_state = flip[sign_state]
                if helmet_state is not None and rng.random() < spec.noise.attr_flip_prob:
                    helmet_state = flip[helmet_state]

            rec = DetectionRecord(
                frame=frame, cls=cls, box=box, confidence=spec.detection_confidence,
                sign_state=sign_state, helmet_state=helmet_state,
                plate_text=plate, lane_fraction=lane_fraction,
            )
            det_lines.append(format_detection_record(rec))

        for blip in spec.blips:
            if blip.start_frame <= frame < blip.start_frame + blip.n_frames:
                rec = DetectionRecord(frame, blip.cls, blip.box, spec.detection_confidence,
                                      lane_fraction=lane_fraction)
                det_lines.append(format_detection_record(rec))

        if spec.noise.false_positive_rate > 0 and rng.random() < spec.noise.false_positive_rate:
            cls = list(DetectionClass)[int(rng.integers(0, len(DetectionClass)))]
            w = float(rng.uniform(10, 80))
            h = float(rng.uniform(10, 80))
            x = float(rng.uniform(0, IMAGE_W - w))
            y = float(rng.uniform(0, IMAGE_H - h))
            conf = float(rng.uniform(0.5, 0.9))
            rec = DetectionRecord(frame, cls, BoundingBox(x, y, w, h), round(conf, 6),
                                  lane_fraction=lane_fraction)
            det_lines.append(format_detection_record(rec))

    gps_lines = []
    for t in range(n_sec + 1):
        lat, lon = route.position(v * t)
        gps_lines.append(f"{t} {lat!r} {lon!r}")

    cond_lines = [
        f"{s} {spec.ann_lanes} {spec.ann_vehicles} {spec.ann_potholes} "
        f"{1 if spec.ann_bridge else 0} {spec.ann_hour}"
        for s in range(n_sec + 1)
    ]

    ground_truth = GroundTruth(
        sequence_id=spec.sequence_id, fps=fps, ego_speed_mps=v,
        traveled_m=traveled, frame_count=frame_count, objects=objects,
        frame_boxes=frame_boxes, n_riders=n_riders, n_violators=n_violators,
    )
    return ScenarioBundle(
        spec=spec,
        detection_log="\n".join(det_lines) + ("\n" if det_lines else ""),
        gps_log="\n".join(gps_lines) + "\n",
        condition_log="\n".join(cond_lines) + "\n",
        ground_truth=ground_truth,
    )


def _schedule_oncoming(schedule, oid, cls, group, v, fps, frame_count,
                       lateral, helmet=None, plate=None, width_m=None) -> None:
    _, _, _, _, vis_far, vis_near = OBJECT_GEOMETRY[cls]
    closing = v + group.speed_mps
    t_start = group.encounter_offset_m / v
    duration = (vis_far - vis_near) / closing
    eps = 1e-9
    f_start = max(0, int(math.ceil(t_start * fps - eps)))
    f_end = min(frame_count - 1, int(math.floor((t_start + duration) * fps + eps)))
    for f in range(f_start, f_end + 1):
        dist = vis_far - closing * (f / fps - t_start)
        dist = max(dist, vis_near)
        schedule(f, (oid, cls, dist, (lateral, width_m), None, plate))


def _override_width(box: BoundingBox, width_m: float, dist: float) -> BoundingBox:
    w = FOCAL_PX * width_m / dist
    cx = box.x + box.w / 2.0
    return BoundingBox(cx - w / 2.0, box.y, w, box.h)


def _jitter_box(box: BoundingBox, sigma: float, rng: np.random.Generator) -> BoundingBox:
    if sigma <= 0:
        return box
    dx, dy, dw, dh = rng.normal(0.0, sigma, 4)
    w = min(max(2.0, box.w + dw), IMAGE_W)
    h = min(max(2.0, box.h + dh), IMAGE_H)
    x = min(max(0.0, box.x + dx), IMAGE_W - w)
    y = min(max(0.0, box.y + dy), IMAGE_H - h)
    return BoundingBox(x, y, w, h)


def oracle_metrics(spec: ScenarioSpec, cfg: MetricsConfig | None = None) -> SafetyReport:
    """City report computed from scenario geometry alone (no detections)."""
    cfg = cfg or MetricsConfig()
    route = _Route(spec.route)
    v = spec.ego_speed_mps
    n_sec = int(math.floor(route.total / v))
    traveled = v * n_sec

    lights = light_offsets(spec)
    gaps = [b - a for a, b in zip(lights, lights[1:])]
    light_mean = sum(gaps) / len(gaps) if gaps else None

    sign_states = ["defective" if s.defective else "normal" for s in spec.signs]
    defective_pct = (
        100.0 * sign_states.count("defective") / len(sign_states) if sign_states else None
    )

    _, _, _, _, vis_far, vis_near = OBJECT_GEOMETRY[DetectionClass.TRAFFIC_SIGN]
    visibilities = []
    for sign in spec.signs:
        first = max(sign.offset_m - vis_far, 0.0)
        last = min(sign.offset_m - vis_near, traveled)
        if last > first:
            visibilities.append(last - first)
    vis_mean = sum(visibilities) / len(visibilities) if visibilities else None

    n_pothole_stretches = int(math.ceil(traveled / cfg.pothole_stretch_m))
    if n_pothole_stretches > 0:
        hit = set()
        for off in spec.pothole_offsets:
            hit.add(min(int(off // cfg.pothole_stretch_m), n_pothole_stretches - 1))
        pothole_pct = 100.0 * len(hit) / n_pothole_stretches
    else:
        pothole_pct = None

    n_lane = int(math.ceil(traveled / cfg.lane_stretch_m))
    classified = 0
    unmarked = 0
    for k in range(n_lane):
        start = k * cfg.lane_stretch_m
        end = min(start + cfg.lane_stretch_m, traveled)
        fraction = _region_mean(spec.lane_profile, start, end)
        if fraction is None:
            continue
        classified += 1
        if fraction < cfg.lane_fair_min:
            unmarked += 1
    lane_pct = 100.0 * unmarked / classified if classified else None

    riders = sum(len(g.helmets) for g in spec.rider_groups)
    violators = sum(sum(1 for h in g.helmets if not h) for g in spec.rider_groups)
    helmet_pct = 100.0 * violators / riders if riders else None

    return SafetyReport(
        sign_visibility_mean_m=vis_mean,
        defective_sign_pct=defective_pct,
        streetlight_gap_mean_m=light_mean,
        lane_no_marking_pct=lane_pct,
        pothole_stretch_pct=pothole_pct,
        helmet_violation_pct=helmet_pct,
    )


def _region_mean(profile: Sequence[LaneRegion], start: float, end: float) -> Optional[float]:
    total = 0.0
    weight = 0.0
    for region in profile:
        lo = max(start, region.start_m)
        hi = min(end, region.end_m)
        if hi > lo:
            total += region.fraction * (hi - lo)
            weight += hi - lo
    return total / weight if weight > 0 else None


def reference_city_scenario(seed: int = 0, noise: NoiseModel | None = None) -> ScenarioSpec:
    """A ~25 km city run with easily checkable expected report values:
    lights every 165 m, 3 of 8 signs defective (37.5%), potholes in 10 of
    250 stretches (4.0%), and 459 of 1000 riders without helmets (45.9%).
    """
    signs = tuple(SignSpec(700.0 + 3000.0 * k, defective=k % 3 == 0) for k in range(8))
    pothole_offsets = tuple(100.0 * k + 50.0 for k in (20, 45, 70, 95, 120, 145, 170, 195, 220, 245))

    encounters = [15.0 + 24.9 * g for g in range(999)] + [24944.0]
    groups = []
    acc = 0
    for g, off in enumerate(encounters):
        nxt = (g + 1) * 459 // 1000
        violates = nxt > acc
        acc = nxt
        groups.append(
            RiderGroupSpec(off, helmets=(not violates,), plate=f"KA{g:04d}")
        )

    lane_profile = (
        LaneRegion(0.0, 10_000.0, 0.5),
        LaneRegion(10_000.0, 17_500.0, 0.1),
        LaneRegion(17_500.0, 25_000.0, 0.0),
    )

    # Route: 24,963 m due north -> ego travels 24,962.5 m in 1997 s,
    # keeping the endpoint safely off every stretch boundary.
    route = ((0.0, 0.0), (24_963.0 * _DEG_PER_M, 0.0))
    return ScenarioSpec(
        route=route,
        ego_speed_mps=12.5,
        fps=15.0,
        sequence_id="city-ref",
        light_spacing_m=165.0,
        light_start_m=600.0,
        signs=signs,
        pothole_offsets=pothole_offsets,
        rider_groups=tuple(groups),
        lane_profile=lane_profile,
        noise=noise or NoiseModel(seed=seed),
    )


# ---------------------------------------------------------------------------
# Image-space scenes for tracker tests.


@dataclass(frozen=True)
class SceneObject:
    cls: DetectionClass
    x0: float
    y0: float
    vx: float
    vy: float
    w: float = 50.0
    h: float = 50.0
    start_frame: int = 0
    end_frame: Optional[int] = None


@dataclass(frozen=True)
class SceneSpec:
    n_frames: int
    objects: tuple[SceneObject, ...]
    miss_rate: float = 0.0
    max_consecutive_misses: int = 0
    seed: int = 0


def generate_scene(spec: SceneSpec) -> list[tuple[int, list[tuple[int, DetectionRecord]]]]:
    """Per-frame (object_index, record) pairs with capped random dropout."""
    rng = np.random.default_rng(spec.seed)
    run = [0] * len(spec.objects)
    frames = []
    for f in range(spec.n_frames):
        dets = []
        for i, obj in enumerate(spec.objects):
            last = obj.end_frame if obj.end_frame is not None else spec.n_frames - 1
            if not (obj.start_frame <= f <= last):
                continue
            k = f - obj.start_frame
            if spec.miss_rate > 0 and rng.random() < spec.miss_rate and run[i] < spec.max_consecutive_misses:
                run[i] += 1
                continue
            run[i] = 0
            box = BoundingBox(obj.x0 + obj.vx * k, obj.y0 + obj.vy * k, obj.w, obj.h)
            dets.append((i, DetectionRecord(f, obj.cls, box, 0.9)))
        frames.append((f, dets))
    return frames
