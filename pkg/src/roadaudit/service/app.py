"""HTTP surface over the store: map layers, report, tickets, warning rules.

The service is read-mostly; the batch CLI writes runs into the store and
this app serves them to dashboards. Ticket review and warning-rule CRUD
are the only mutations.
"""
from __future__ import annotations

import io
import os
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware

from ..outputs import irregularities_geojson, write_report_csv, write_stretch_csv
from ..store import (
    NotFound,
    Store,
    TicketConflict,
    UnregisteredPlate,
    evaluate_warnings,
)
from .schemas import (
    HeatmapCell,
    HeatmapOut,
    IrregularityOut,
    ReportOut,
    ReviewRequest,
    RuleIn,
    RuleOut,
    RuleUpdate,
    StretchOut,
    TicketOut,
    WarningOut,
)

STORE_ENV_VAR = "ROADAUDIT_STORE"


def create_app(store_path: Optional[str] = None) -> FastAPI:
    path = store_path or os.environ.get(STORE_ENV_VAR)
    if not path:
        raise ValueError(f"store path required (argument or ${STORE_ENV_VAR})")
    store = Store(path)

    app = FastAPI(title="roadaudit", version="0.1.0")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def parse_bbox(bbox: Optional[str]):
        if bbox is None:
            return None
        parts = bbox.split(",")
        if len(parts) != 4:
            raise HTTPException(400, "bbox must be min_lat,min_lon,max_lat,max_lon")
        try:
            values = tuple(float(p) for p in parts)
        except ValueError:
            raise HTTPException(400, "bbox components must be numbers") from None
        return values

    def to_out(item) -> IrregularityOut:
        return IrregularityOut(
            id=item.id, type=item.type, lat=item.position[0], lon=item.position[1],
            sequence_id=item.sequence_id, anchor_frame=item.anchor_frame,
            severity=item.severity, evidence=list(item.evidence),
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "runs": len(store.run_ids())}

    @app.get("/irregularities", response_model=list[IrregularityOut])
    def list_irregularities(
        type: Optional[str] = None,
        bbox: Optional[str] = None,
        severity: Optional[str] = None,
        limit: int = Query(default=1000, ge=1, le=100_000),
        offset: int = Query(default=0, ge=0),
    ):
        try:
            items = store.query_irregularities(
                type=type, bbox=parse_bbox(bbox), severity=severity,
                limit=limit, offset=offset,
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        return [to_out(i) for i in items]

    @app.get("/irregularities.geojson")
    def irregularities_layer(type: Optional[str] = None, bbox: Optional[str] = None):
        items = store.query_irregularities(
            type=type, bbox=parse_bbox(bbox), limit=100_000
        )
        return irregularities_geojson(items)

    @app.get("/irregularities/{item_id:path}", response_model=IrregularityOut)
    def get_irregularity(item_id: str):
        try:
            return to_out(store.get_irregularity(item_id))
        except NotFound as exc:
            raise HTTPException(404, str(exc)) from exc

    @app.get("/heatmap", response_model=HeatmapOut)
    def heatmap(type: str, cell_size_m: float = Query(default=250.0)):
        try:
            cells = store.heatmap(type, cell_size_m)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        return HeatmapOut(
            type=type, cell_size_m=cell_size_m,
            cells=[HeatmapCell(**c) for c in cells],
            total=sum(c["count"] for c in cells),
        )

    @app.get("/heatmap.geojson")
    def heatmap_layer(type: str, cell_size_m: float = Query(default=250.0)):
        try:
            cells = store.heatmap(type, cell_size_m)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        return {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [c["lon"], c["lat"]]},
                    "properties": {"count": c["count"]},
                }
                for c in cells
            ],
        }

    @app.get("/report", response_model=ReportOut)
    def report():
        current = store.latest_report()
        if current is None:
            raise HTTPException(404, "no run persisted yet")
        return ReportOut(**current.as_dict())

    @app.get("/report.csv")
    def report_csv():
        current = store.latest_report()
        if current is None:
            raise HTTPException(404, "no run persisted yet")
        buf = io.StringIO()
        write_report_csv(current, buf)
        return Response(buf.getvalue(), media_type="text/csv")

    @app.get("/stretches", response_model=list[StretchOut])
    def stretches(kind: Optional[str] = None):
        return [
            StretchOut(
                sequence_id=s.sequence_id, kind=s.kind, start_m=s.start_m,
                end_m=s.end_m, score=s.score, count=s.count, label=s.label,
            )
            for s in store.stretches(kind)
        ]

    @app.get("/stretches.csv")
    def stretches_csv(kind: Optional[str] = None):
        buf = io.StringIO()
        write_stretch_csv(store.stretches(kind), buf)
        return Response(buf.getvalue(), media_type="text/csv")

    @app.get("/stretches.geojson")
    def stretches_layer(kind: Optional[str] = None):
        return {"type": "FeatureCollection", "features": store.stretch_features(kind)}

    @app.get("/tickets", response_model=list[TicketOut])
    def tickets(status: Optional[str] = None):
        if status is not None and status not in ("pending", "issued", "rejected"):
            raise HTTPException(400, f"unknown status {status!r}")
        return [_ticket_out(t) for t in store.tickets(status)]

    @app.get("/tickets/{ticket_id:path}", response_model=TicketOut)
    def get_ticket(ticket_id: str):
        try:
            return _ticket_out(store.get_ticket(ticket_id))
        except NotFound as exc:
            raise HTTPException(404, str(exc)) from exc

    @app.post("/tickets/{ticket_id:path}/review", response_model=TicketOut)
    def review_ticket(ticket_id: str, request: ReviewRequest):
        try:
            return _ticket_out(store.review_ticket(ticket_id, request.action, request.note))
        except NotFound as exc:
            raise HTTPException(404, str(exc)) from exc
        except TicketConflict as exc:
            raise HTTPException(409, str(exc)) from exc
        except UnregisteredPlate as exc:
            raise HTTPException(422, str(exc)) from exc

    @app.get("/rules", response_model=list[RuleOut])
    def rules():
        return [RuleOut(**vars(r)) for r in store.rules()]

    @app.post("/rules", response_model=RuleOut, status_code=201)
    def add_rule(rule: RuleIn):
        try:
            created = store.add_rule(rule.metric, rule.threshold, rule.direction, rule.active)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc
        return RuleOut(**vars(created))

    @app.put("/rules/{rule_id}", response_model=RuleOut)
    def update_rule(rule_id: int, patch: RuleUpdate):
        try:
            updated = store.update_rule(
                rule_id, threshold=patch.threshold, direction=patch.direction,
                active=patch.active,
            )
        except NotFound as exc:
            raise HTTPException(404, str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc
        return RuleOut(**vars(updated))

    @app.delete("/rules/{rule_id}", status_code=204)
    def delete_rule(rule_id: int):
        try:
            store.delete_rule(rule_id)
        except NotFound as exc:
            raise HTTPException(404, str(exc)) from exc
        return Response(status_code=204)

    @app.get("/warnings", response_model=list[WarningOut])
    def warnings():
        triggered = evaluate_warnings(store.latest_report(), store.rules())
        return [WarningOut(**vars(w)) for w in triggered]

    return app


def _ticket_out(t) -> TicketOut:
    return TicketOut(
        id=t.id, run_id=t.run_id, group_id=t.group_id, sequence_id=t.sequence_id,
        plate_text=t.plate_text, status=t.status, n_riders=t.n_riders,
        n_no_helmet=t.n_no_helmet, first_frame=t.frame_range[0],
        last_frame=t.frame_range[1], evidence_frames=list(t.evidence_frames),
        reviewer_note=t.reviewer_note,
    )
