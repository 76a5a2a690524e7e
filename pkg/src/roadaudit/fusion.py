"""Temporal fusion of per-frame predictions over completed tracks.

A track sees the same object from many viewpoints; voting across frames
smooths out single-frame mistakes. This module also drops blip tracks
(too few frames to be trusted) and groups rider tracks with the
motorcycle they ride, which is where helmet violations are decided.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .config import FusionConfig
from .model import BoundingBox, DetectionClass
from .tracking import Track

# Labels that win ties: a wrong violation costs more than a missed one.
NON_VIOLATION_LABELS = frozenset({"normal", "helmet"})

_ATTR_BY_CLASS = {
    DetectionClass.TRAFFIC_SIGN: "sign_state",
    DetectionClass.RIDER: "helmet_state",
    DetectionClass.HELMET: "helmet_state",
}


def majority_vote(labels: Iterable[str]) -> str:
    """Label with maximal multiplicity.

    Ties resolve to a non-violation label when one is tied for the lead,
    otherwise to the lexicographically smallest tied label.
    """
    counts = Counter(labels)
    if not counts:
        raise ValueError("cannot vote on an empty label multiset")
    top = max(counts.values())
    tied = sorted(label for label, c in counts.items() if c == top)
    safe = [label for label in tied if label in NON_VIOLATION_LABELS]
    return safe[0] if safe else tied[0]


@dataclass
class FusedTrack:
    track: Track
    fused_attr: Optional[str]
    vote_counts: dict[str, int] = field(default_factory=dict)
    support: int = 0

    @property
    def cls(self) -> DetectionClass:
        return self.track.cls


def fuse_track(track: Track) -> FusedTrack:
    """Vote the track's per-frame attribute predictions into one label."""
    attr = _ATTR_BY_CLASS.get(track.cls)
    if attr is None:
        return FusedTrack(track, None)
    labels = [getattr(det, attr) for _, det in track.history if getattr(det, attr) is not None]
    if not labels:
        return FusedTrack(track, None)
    counts = Counter(labels)
    return FusedTrack(track, majority_vote(labels), dict(counts), sum(counts.values()))


def fuse_tracks(tracks: Iterable[Track]) -> list[FusedTrack]:
    return [fuse_track(t) for t in tracks]


def filter_short_tracks(tracks: Sequence[Track], min_frames: int = 4) -> list[Track]:
    """Keep only tracks spanning at least min_frames frames."""
    return [t for t in tracks if t.span >= min_frames]


def fuse_plate(plate_texts: Iterable[str]) -> Optional[str]:
    """Majority vote over exact plate strings; None without a reread.

    A single read is too noisy to name an owner, so the winner needs
    multiplicity of at least 2.
    """
    counts = Counter(plate_texts)
    if not counts:
        return None
    top = max(counts.values())
    if top < 2:
        return None
    return min(text for text, c in counts.items() if c == top)


@dataclass
class RiderGroup:
    motorcycle_track: Track
    rider_tracks: list[Track]
    rider_helmet_states: dict[int, Optional[str]]
    plate_text: Optional[str]

    @property
    def n_riders(self) -> int:
        return len(self.rider_tracks)

    @property
    def n_no_helmet(self) -> int:
        return sum(1 for s in self.rider_helmet_states.values() if s == "no_helmet")

    @property
    def violation(self) -> bool:
        return self.n_no_helmet > 0

    def shared_frames(self) -> list[int]:
        frames = set(self.motorcycle_track.frames())
        for rider in self.rider_tracks:
            frames &= set(rider.frames())
        return sorted(frames)


def _rides_on(rider_box: BoundingBox, moto_box: BoundingBox, cfg: FusionConfig) -> float:
    """Horizontal overlap in pixels if the rider sits on the motorcycle, else -1.

    The rider's bottom edge must land between slightly above the
    motorcycle's top and its bottom, and the boxes must overlap
    horizontally by at least half the narrower width.
    """
    overlap = min(rider_box.x2, moto_box.x2) - max(rider_box.x, moto_box.x)
    if overlap < cfg.horizontal_overlap_frac * min(rider_box.w, moto_box.w):
        return -1.0
    top_bound = moto_box.y - cfg.vertical_tolerance_frac * moto_box.h
    if not (top_bound <= rider_box.y2 <= moto_box.y2):
        return -1.0
    return overlap


def associate_riders(
    riders: Sequence[FusedTrack],
    motorcycles: Sequence[FusedTrack],
    cfg: FusionConfig | None = None,
) -> list[RiderGroup]:
    """Group rider tracks with motorcycle tracks by per-frame geometry votes.

    Each shared frame in which a rider geometrically sits on a motorcycle
    casts one vote; the rider joins the motorcycle with most votes. A
    motorcycle may carry several riders; a rider joins at most one group.
    """
    cfg = cfg or FusionConfig()
    moto_by_frame: dict[int, list[tuple[FusedTrack, BoundingBox]]] = {}
    for moto in motorcycles:
        for frame, det in moto.track.history:
            moto_by_frame.setdefault(frame, []).append((moto, det.box))

    moto_frames = {m.track.id: set(m.track.frames()) for m in motorcycles}
    winner_by_rider: dict[int, FusedTrack] = {}
    rider_lookup: dict[int, FusedTrack] = {}

    for rider in sorted(riders, key=lambda r: r.track.id):
        votes: Counter[int] = Counter()
        moto_lookup: dict[int, FusedTrack] = {}
        rider_frames = set(rider.track.frames())
        for frame, det in rider.track.history:
            best_id = None
            best_overlap = -1.0
            for moto, moto_box in moto_by_frame.get(frame, ()):
                if len(rider_frames & moto_frames[moto.track.id]) < cfg.min_shared_frames:
                    continue
                overlap = _rides_on(det.box, moto_box, cfg)
                if overlap < 0.0:
                    continue
                if overlap > best_overlap or (
                    overlap == best_overlap and (best_id is None or moto.track.id < best_id)
                ):
                    best_overlap = overlap
                    best_id = moto.track.id
                    moto_lookup[moto.track.id] = moto
            if best_id is not None:
                votes[best_id] += 1
        if not votes:
            continue
        top = max(votes.values())
        winner_id = min(mid for mid, c in votes.items() if c == top)
        winner_by_rider[rider.track.id] = moto_lookup[winner_id]
        rider_lookup[rider.track.id] = rider

    groups: dict[int, list[FusedTrack]] = {}
    moto_objects: dict[int, FusedTrack] = {}
    for rider_id in sorted(winner_by_rider):
        moto = winner_by_rider[rider_id]
        groups.setdefault(moto.track.id, []).append(rider_lookup[rider_id])
        moto_objects[moto.track.id] = moto

    out = []
    for moto_id in sorted(groups):
        moto = moto_objects[moto_id]
        members = groups[moto_id]
        plates = [
            det.plate_text for _, det in moto.track.history if det.plate_text is not None
        ]
        out.append(
            RiderGroup(
                motorcycle_track=moto.track,
                rider_tracks=[r.track for r in members],
                rider_helmet_states={r.track.id: r.fused_attr for r in members},
                plate_text=fuse_plate(plates),
            )
        )
    return out


@dataclass(frozen=True)
class ViolationRecord:
    """Reviewable helmet-violation evidence for one rider group."""

    group_id: str
    sequence_id: str
    frame_range: tuple[int, int]
    plate_text: Optional[str]
    n_riders: int
    n_no_helmet: int
    evidence_frames: tuple[int, ...]

    def format_line(self) -> str:
        first, last = self.frame_range
        plate = self.plate_text if self.plate_text is not None else "NONE"
        frames = ",".join(str(f) for f in self.evidence_frames)
        return (
            f"{self.group_id} {self.sequence_id} {first}-{last} {plate} "
            f"{self.n_riders} {self.n_no_helmet} {frames}"
        )


def violation_records(
    groups: Sequence[RiderGroup], sequence_id: str, max_evidence: int = 5
) -> list[ViolationRecord]:
    """One record per violating group; evidence frames sampled evenly."""
    out = []
    for group in groups:
        if not group.violation:
            continue
        shared = group.shared_frames()
        if not shared:
            shared = group.motorcycle_track.frames()
        if len(shared) > max_evidence:
            step = (len(shared) - 1) / (max_evidence - 1)
            shared = [shared[round(i * step)] for i in range(max_evidence)]
        out.append(
            ViolationRecord(
                group_id=f"{sequence_id}-grp-{group.motorcycle_track.id}",
                sequence_id=sequence_id,
                frame_range=(group.motorcycle_track.first_frame, group.motorcycle_track.last_frame),
                plate_text=group.plate_text,
                n_riders=group.n_riders,
                n_no_helmet=group.n_no_helmet,
                evidence_frames=tuple(shared),
            )
        )
    return out
