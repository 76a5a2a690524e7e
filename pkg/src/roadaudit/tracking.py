"""Online multi-object tracking over per-frame detections.

One tracker instance handles one video sequence. Detections are
associated to live tracks class by class with Hungarian matching on
1 - IoU cost, gated by an IoU floor; unmatched detections spawn
tentative tracks, and tracks that miss too many consecutive frames die.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Sequence

from .assignment import hungarian
from .config import TrackerConfig
from .kalman import BoxMotionModel, KalmanState
from .model import BoundingBox, DetectionClass, DetectionRecord


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area, in [0, 1].

    Areas are derived from box corners so that identical boxes score
    exactly 1.0 regardless of how x+w rounds.
    """
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    area_a = (a.x2 - a.x) * (a.y2 - a.y)
    area_b = (b.x2 - b.x) * (b.y2 - b.y)
    return min(1.0, inter / (area_a + area_b - inter))


def associate(
    track_boxes: Sequence[BoundingBox],
    det_boxes: Sequence[BoundingBox],
    iou_threshold: float,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Match predicted track boxes to detection boxes of the same class.

    Returns (matches, unmatched_track_indices, unmatched_det_indices).
    Matches below the IoU gate are demoted to unmatched on both sides.
    """
    if not track_boxes or not det_boxes:
        return [], list(range(len(track_boxes))), list(range(len(det_boxes)))

    overlap = [[iou(t, d) for d in det_boxes] for t in track_boxes]
    cost = [[1.0 - o for o in row] for row in overlap]
    matches = []
    matched_t: set[int] = set()
    matched_d: set[int] = set()
    for ti, di in hungarian(cost):
        if overlap[ti][di] >= iou_threshold:
            matches.append((ti, di))
            matched_t.add(ti)
            matched_d.add(di)
    unmatched_t = [i for i in range(len(track_boxes)) if i not in matched_t]
    unmatched_d = [i for i in range(len(det_boxes)) if i not in matched_d]
    return matches, unmatched_t, unmatched_d


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DEAD = "dead"


@dataclass
class Track:
    id: int
    cls: DetectionClass
    state: KalmanState
    first_frame: int
    last_frame: int
    hits: int = 1
    time_since_update: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    confirmed_at: int | None = None
    history: list[tuple[int, DetectionRecord]] = field(default_factory=list)

    @property
    def span(self) -> int:
        """Number of frames covered from first to last detection, inclusive."""
        return self.last_frame - self.first_frame + 1

    @property
    def was_confirmed(self) -> bool:
        return self.confirmed_at is not None

    def frames(self) -> list[int]:
        return [f for f, _ in self.history]


class Tracker:
    """Stateful per-sequence tracker; feed frames in increasing order.

    Every frame of the sequence must be presented exactly once, with an
    empty detection list when the detector saw nothing, so that track
    aging advances at the video frame rate.
    """

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.model = BoxMotionModel(self.config.process_noise, self.config.measurement_noise)
        self._live: list[Track] = []
        self._finished: list[Track] = []
        self._next_id = 1
        self._last_frame: int | None = None

    @property
    def live_tracks(self) -> list[Track]:
        return list(self._live)

    @property
    def tracks(self) -> list[Track]:
        """All tracks ever spawned, live and dead, in id order."""
        return sorted(self._live + self._finished, key=lambda t: t.id)

    def step(self, frame: int, detections: Sequence[DetectionRecord]) -> list[Track]:
        if self._last_frame is not None and frame <= self._last_frame:
            raise ValueError(f"frames must be strictly increasing, got {frame} after {self._last_frame}")
        self._last_frame = frame

        for track in self._live:
            track.state = self.model.predict(track.state)

        matched_ids: set[int] = set()
        for cls in DetectionClass:
            class_tracks = [t for t in self._live if t.cls is cls]
            class_dets = [d for d in detections if d.cls is cls]
            if not class_tracks and not class_dets:
                continue
            predicted = [self.model.predicted_box(t.state) for t in class_tracks]
            matches, _, unmatched_d = associate(
                predicted, [d.box for d in class_dets], self.config.iou_threshold
            )
            for ti, di in matches:
                track = class_tracks[ti]
                det = class_dets[di]
                track.state = self.model.update(track.state, det.box)
                track.hits += 1
                track.time_since_update = 0
                track.last_frame = frame
                track.history.append((frame, det))
                matched_ids.add(track.id)
                if track.status is TrackStatus.TENTATIVE and track.hits >= self.config.min_hits:
                    track.status = TrackStatus.CONFIRMED
                    track.confirmed_at = frame
            for di in unmatched_d:
                det = class_dets[di]
                self._spawn(frame, det)
                matched_ids.add(self._next_id - 1)

        survivors = []
        for track in self._live:
            if track.id in matched_ids:
                survivors.append(track)
                continue
            track.time_since_update += 1
            if track.time_since_update > self.config.max_age:
                track.status = TrackStatus.DEAD
                self._finished.append(track)
            else:
                survivors.append(track)
        self._live = survivors
        return sorted(self._live, key=lambda t: t.id)

    def _spawn(self, frame: int, det: DetectionRecord) -> None:
        track = Track(
            id=self._next_id,
            cls=det.cls,
            state=self.model.init(det.box),
            first_frame=frame,
            last_frame=frame,
            history=[(frame, det)],
        )
        if self.config.min_hits <= 1:
            track.status = TrackStatus.CONFIRMED
            track.confirmed_at = frame
        self._next_id += 1
        self._live.append(track)

    def run(self, frames: Iterable[tuple[int, Sequence[DetectionRecord]]]) -> list[Track]:
        """Process a whole sequence and return all tracks."""
        for frame, dets in frames:
            self.step(frame, dets)
        return self.tracks


def write_track_log(tracks: Iterable[Track], out: IO[str]) -> None:
    """Per-frame rows: `track_id class frame x y w h confidence`."""
    rows = []
    for t in tracks:
        for frame, det in t.history:
            rows.append((t.id, frame, t.cls.value, det))
    rows.sort(key=lambda r: (r[0], r[1]))
    for tid, frame, cls, det in rows:
        b = det.box
        out.write(f"{tid} {cls} {frame} {b.x!r} {b.y!r} {b.w!r} {b.h!r} {det.confidence!r}\n")


def write_track_summary(tracks: Iterable[Track], out: IO[str]) -> None:
    """One row per track: `track_id first_frame last_frame hits status`."""
    for t in sorted(tracks, key=lambda t: t.id):
        out.write(f"{t.id} {t.first_frame} {t.last_frame} {t.hits} {t.status.value}\n")
