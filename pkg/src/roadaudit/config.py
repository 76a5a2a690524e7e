"""Tunable thresholds for tracking, fusion, and metrics, loadable from JSON."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union


@dataclass(frozen=True)
class TrackerConfig:
    iou_threshold: float = 0.3
    min_hits: int = 3
    max_age: int = 5
    process_noise: float = 1.0
    measurement_noise: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.iou_threshold < 1.0):
            raise ValueError("iou_threshold must lie in (0, 1)")
        if self.min_hits < 1:
            raise ValueError("min_hits must be >= 1")
        if self.max_age < 1:
            raise ValueError("max_age must be >= 1")


@dataclass(frozen=True)
class FusionConfig:
    # Tracks spanning fewer frames than this are dropped as blip noise.
    min_track_frames: int = 4
    # Rider-to-motorcycle grouping geometry.
    horizontal_overlap_frac: float = 0.5
    vertical_tolerance_frac: float = 0.3
    min_shared_frames: int = 3
    # A plate string needs at least this many agreeing reads to be trusted.
    plate_min_votes: int = 2


@dataclass(frozen=True)
class MetricsConfig:
    lane_stretch_m: float = 50.0
    pothole_stretch_m: float = 100.0
    lane_fair_min: float = 0.30
    lane_faded_min: float = 0.05
    pothole_fair_max: int = 2
    pothole_average_max: int = 4
    gps_gap_s: float = 5.0
    # Consecutive street lights farther apart than this flag a coverage gap.
    missing_light_gap_m: float = 300.0


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.5
    confidence_threshold: float = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        kwargs = {}
        for name, sub in (
            ("tracker", TrackerConfig),
            ("fusion", FusionConfig),
            ("metrics", MetricsConfig),
            ("eval", EvalConfig),
        ):
            section = raw.get(name, {})
            known = {f.name for f in dataclasses.fields(sub)}
            unknown = set(section) - known
            if unknown:
                raise ValueError(f"unknown {name} config keys: {sorted(unknown)}")
            kwargs[name] = sub(**section)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
