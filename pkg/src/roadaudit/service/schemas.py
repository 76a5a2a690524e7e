"""Request/response models for the review service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class IrregularityOut(BaseModel):
    id: str
    type: str
    lat: float
    lon: float
    sequence_id: str
    anchor_frame: int
    severity: Optional[str] = None
    evidence: list[int] = Field(default_factory=list)


class HeatmapCell(BaseModel):
    lat: float
    lon: float
    count: int


class HeatmapOut(BaseModel):
    type: str
    cell_size_m: float
    cells: list[HeatmapCell]
    total: int


class ReportOut(BaseModel):
    sign_visibility_mean_m: Optional[float] = None
    defective_sign_pct: Optional[float] = None
    streetlight_gap_mean_m: Optional[float] = None
    lane_no_marking_pct: Optional[float] = None
    pothole_stretch_pct: Optional[float] = None
    helmet_violation_pct: Optional[float] = None


class StretchOut(BaseModel):
    sequence_id: str
    kind: str
    start_m: float
    end_m: float
    score: Optional[float] = None
    count: Optional[int] = None
    label: Optional[str] = None


class TicketOut(BaseModel):
    id: str
    run_id: str
    group_id: str
    sequence_id: str
    plate_text: Optional[str]
    status: Literal["pending", "issued", "rejected"]
    n_riders: int
    n_no_helmet: int
    first_frame: int
    last_frame: int
    evidence_frames: list[int]
    reviewer_note: Optional[str] = None


class ReviewRequest(BaseModel):
    action: Literal["issue", "reject"]
    note: str = ""


class RuleIn(BaseModel):
    metric: str
    threshold: float
    direction: Literal["above", "below"]
    active: bool = True


class RuleUpdate(BaseModel):
    threshold: Optional[float] = None
    direction: Optional[Literal["above", "below"]] = None
    active: Optional[bool] = None


class RuleOut(BaseModel):
    id: int
    metric: str
    threshold: float
    direction: Literal["above", "below"]
    active: bool


class WarningOut(BaseModel):
    rule_id: int
    metric: str
    threshold: float
    direction: str
    value: float
