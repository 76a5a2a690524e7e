"""Domain types shared across the analytics pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class IngestError(Exception):
    """Raised when an input stream cannot be read at all."""


class PositionUnavailable(Exception):
    """No GPS position can be derived for the requested time."""


class DetectionClass(str, Enum):
    STREET_LIGHT = "street_light"
    TRAFFIC_SIGN = "traffic_sign"
    POTHOLE = "pothole"
    RIDER = "rider"
    MOTORCYCLE = "motorcycle"
    HELMET = "helmet"
    LICENSE_PLATE = "license_plate"


SIGN_STATES = ("normal", "defective")
HELMET_STATES = ("helmet", "no_helmet")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, top-left anchored."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class VideoMeta:
    """Capture parameters of one video sequence."""

    sequence_id: str
    frame_count: int
    fps: float = 15.0
    width: int = 1920
    height: int = 1080
    start_time: float = 0.0

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.frame_count < 0:
            raise ValueError("frame_count must be nonnegative")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")


@dataclass(frozen=True)
class DetectionRecord:
    """One detector output for one frame.

    Optional attributes ride along with the box: the state of a traffic
    sign, whether a rider wears a helmet, a recognized plate string, and
    the fraction of the frame's road pixels that are lane markings.
    """

    frame: int
    cls: DetectionClass
    box: BoundingBox
    confidence: float
    sign_state: Optional[str] = None
    helmet_state: Optional[str] = None
    plate_text: Optional[str] = None
    lane_fraction: Optional[float] = None

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValueError("frame index must be nonnegative")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.sign_state is not None and self.sign_state not in SIGN_STATES:
            raise ValueError(f"unknown sign_state {self.sign_state!r}")
        if self.helmet_state is not None and self.helmet_state not in HELMET_STATES:
            raise ValueError(f"unknown helmet_state {self.helmet_state!r}")
        if self.lane_fraction is not None and not (0.0 <= self.lane_fraction <= 1.0):
            raise ValueError(f"lane_fraction {self.lane_fraction} outside [0, 1]")


@dataclass(frozen=True)
class GeoSample:
    """One GPS reading: seconds since sequence start plus WGS84 degrees."""

    t: float
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")
        if not (math.isfinite(self.t) and math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("GPS sample fields must be finite")


@dataclass(frozen=True)
class ConditionAnnotation:
    """Per-second scene annotation used to derive condition labels."""

    second: int
    lanes: int
    vehicles: int
    potholes: int
    bridge: bool
    capture_hour: int

    def __post_init__(self) -> None:
        if min(self.lanes, self.vehicles, self.potholes) < 0:
            raise ValueError("counts must be nonnegative")
        if not (0 <= self.capture_hour <= 23):
            raise ValueError(f"capture_hour {self.capture_hour} outside [0, 23]")


class RoadType(str, Enum):
    NARROW = "narrow"
    STANDARD = "standard"
    HIGHWAY = "highway"
    BRIDGE = "bridge"


class TrafficDensity(str, Enum):
    SPARSE = "sparse"
    MODERATE = "moderate"
    DENSE = "dense"


class DamageLevel(str, Enum):
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"


class TimeOfDay(str, Enum):
    MORNING = "morning"
    NOON = "noon"
    EVENING = "evening"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class ConditionLabel:
    road_type: RoadType
    traffic: TrafficDensity
    damage: DamageLevel
    time_of_day: TimeOfDay
