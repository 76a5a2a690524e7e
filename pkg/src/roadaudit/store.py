"""Embedded persistent store for pipeline outputs and the review workflow.

SQLite in WAL mode: many concurrent readers, one writer at a time (a
process-level lock serializes mutations). Persisting a run is
idempotent per run id, and ticket status changes are compare-and-set so
two reviewers cannot both act on the same pending ticket.
"""
from __future__ import annotations

import json
import math
import sqlite3
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .geometrics import EARTH_RADIUS_M, SafetyReport, Stretch
from .ingest import _iter_lines, Source
from .pipeline import CityRunResult, Irregularity

_M_PER_DEG = math.pi * EARTH_RADIUS_M / 180.0


class StoreError(Exception):
    pass


class NotFound(StoreError):
    pass


class TicketConflict(StoreError):
    """Ticket is not pending; its status can no longer change."""


class UnregisteredPlate(StoreError):
    """Issue blocked: the plate has no owner in the registry."""


@dataclass(frozen=True)
class Ticket:
    id: str
    run_id: str
    group_id: str
    sequence_id: str
    plate_text: Optional[str]
    status: str  # pending | issued | rejected
    n_riders: int
    n_no_helmet: int
    frame_range: tuple[int, int]
    evidence_frames: tuple[int, ...]
    reviewer_note: Optional[str]
    created_at: float
    updated_at: float


@dataclass(frozen=True)
class WarningRule:
    id: int
    metric: str
    threshold: float
    direction: str  # "above" | "below"
    active: bool


@dataclass(frozen=True)
class Warning:
    rule_id: int
    metric: str
    threshold: float
    direction: str
    value: float


_SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    run_id TEXT PRIMARY KEY,
    created_at REAL NOT NULL,
    report_json TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS irregularities (
    id TEXT NOT NULL,
    run_id TEXT NOT NULL REFERENCES runs(run_id),
    type TEXT NOT NULL,
    lat REAL NOT NULL,
    lon REAL NOT NULL,
    sequence_id TEXT NOT NULL,
    anchor_frame INTEGER NOT NULL,
    severity TEXT,
    evidence_json TEXT NOT NULL,
    PRIMARY KEY (run_id, id)
);
CREATE TABLE IF NOT EXISTS stretches (
    run_id TEXT NOT NULL REFERENCES runs(run_id),
    sequence_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    start_m REAL NOT NULL,
    end_m REAL NOT NULL,
    score REAL,
    count INTEGER,
    label TEXT,
    geometry_json TEXT
);
CREATE TABLE IF NOT EXISTS tickets (
    id TEXT PRIMARY KEY,
    run_id TEXT NOT NULL REFERENCES runs(run_id),
    group_id TEXT NOT NULL,
    sequence_id TEXT NOT NULL,
    plate_text TEXT,
    status TEXT NOT NULL DEFAULT 'pending',
    n_riders INTEGER NOT NULL,
    n_no_helmet INTEGER NOT NULL,
    first_frame INTEGER NOT NULL,
    last_frame INTEGER NOT NULL,
    evidence_json TEXT NOT NULL,
    reviewer_note TEXT,
    created_at REAL NOT NULL,
    updated_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS rules (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    metric TEXT NOT NULL,
    threshold REAL NOT NULL,
    direction TEXT NOT NULL CHECK (direction IN ('above', 'below')),
    active INTEGER NOT NULL DEFAULT 1
);
CREATE TABLE IF NOT EXISTS registry (
    plate TEXT PRIMARY KEY,
    owner TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_irregularities_type ON irregularities(type);
CREATE INDEX IF NOT EXISTS idx_tickets_status ON tickets(status);
"""


class Store:
    def __init__(self, path: str | Path):
        self.path = str(path)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA foreign_keys=ON")
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- persistence -------------------------------------------------------

    def persist_run(self, run_id: str, result: CityRunResult, now: float | None = None) -> bool:
        """Store a completed run; no-op if run_id already exists.

        All rows land in one transaction, so a failure leaves no partial
        run behind. Returns True when data was written.
        """
        now = time.time() if now is None else now
        with self._lock:
            cur = self._conn.execute("SELECT 1 FROM runs WHERE run_id = ?", (run_id,))
            if cur.fetchone() is not None:
                return False
            try:
                with self._conn:
                    self._conn.execute(
                        "INSERT INTO runs (run_id, created_at, report_json) VALUES (?, ?, ?)",
                        (run_id, now, json.dumps(result.report.as_dict(), sort_keys=True)),
                    )
                    self._conn.executemany(
                        "INSERT INTO irregularities "
                        "(id, run_id, type, lat, lon, sequence_id, anchor_frame, severity, evidence_json) "
                        "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                        [
                            (i.id, run_id, i.type, i.position[0], i.position[1],
                             i.sequence_id, i.anchor_frame, i.severity, json.dumps(list(i.evidence)))
                            for i in result.irregularities
                        ],
                    )
                    geometry = _stretch_geometries(result)
                    self._conn.executemany(
                        "INSERT INTO stretches "
                        "(run_id, sequence_id, kind, start_m, end_m, score, count, label, geometry_json) "
                        "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                        [
                            (run_id, s.sequence_id, s.kind, s.start_m, s.end_m,
                             s.score, s.count, s.label,
                             geometry.get((s.sequence_id, s.kind, s.start_m)))
                            for s in result.stretches
                        ],
                    )
                    self._conn.executemany(
                        "INSERT INTO tickets "
                        "(id, run_id, group_id, sequence_id, plate_text, status, n_riders, "
                        " n_no_helmet, first_frame, last_frame, evidence_json, created_at, updated_at) "
                        "VALUES (?, ?, ?, ?, ?, 'pending', ?, ?, ?, ?, ?, ?, ?)",
                        [
                            (f"{run_id}:{v.group_id}", run_id, v.group_id, v.sequence_id,
                             v.plate_text, v.n_riders, v.n_no_helmet,
                             v.frame_range[0], v.frame_range[1],
                             json.dumps(list(v.evidence_frames)), now, now)
                            for v in result.violations
                        ],
                    )
            except sqlite3.Error as exc:
                raise StoreError(f"persist failed, run rolled back: {exc}") from exc
        return True

    def latest_report(self) -> Optional[SafetyReport]:
        cur = self._conn.execute(
            "SELECT report_json FROM runs ORDER BY created_at DESC, run_id DESC LIMIT 1"
        )
        row = cur.fetchone()
        if row is None:
            return None
        return SafetyReport(**json.loads(row["report_json"]))

    def run_ids(self) -> list[str]:
        cur = self._conn.execute("SELECT run_id FROM runs ORDER BY created_at, run_id")
        return [r["run_id"] for r in cur.fetchall()]

    # -- irregularities ----------------------------------------------------

    def query_irregularities(
        self,
        type: Optional[str] = None,
        bbox: Optional[tuple[float, float, float, float]] = None,
        severity: Optional[str] = None,
        limit: int = 1000,
        offset: int = 0,
    ) -> list[Irregularity]:
        """Filtered, paginated findings; bbox is (min_lat, min_lon, max_lat, max_lon)."""
        if limit <= 0 or offset < 0:
            raise ValueError("limit must be positive and offset nonnegative")
        clauses = []
        args: list = []
        if type is not None:
            clauses.append("type = ?")
            args.append(type)
        if severity is not None:
            clauses.append("severity = ?")
            args.append(severity)
        if bbox is not None:
            min_lat, min_lon, max_lat, max_lon = bbox
            if min_lat > max_lat or min_lon > max_lon:
                raise ValueError("bbox minimums must not exceed maximums")
            clauses.append("lat BETWEEN ? AND ? AND lon BETWEEN ? AND ?")
            args += [min_lat, max_lat, min_lon, max_lon]
        where = f"WHERE {' AND '.join(clauses)}" if clauses else ""
        cur = self._conn.execute(
            f"SELECT * FROM irregularities {where} ORDER BY run_id, id LIMIT ? OFFSET ?",
            (*args, limit, offset),
        )
        return [self._row_to_irregularity(r) for r in cur.fetchall()]

    def get_irregularity(self, item_id: str) -> Irregularity:
        cur = self._conn.execute(
            "SELECT * FROM irregularities WHERE id = ? ORDER BY run_id LIMIT 1", (item_id,)
        )
        row = cur.fetchone()
        if row is None:
            raise NotFound(f"irregularity {item_id!r} not found")
        return self._row_to_irregularity(row)

    @staticmethod
    def _row_to_irregularity(row: sqlite3.Row) -> Irregularity:
        return Irregularity(
            id=row["id"],
            type=row["type"],
            position=(row["lat"], row["lon"]),
            sequence_id=row["sequence_id"],
            anchor_frame=row["anchor_frame"],
            severity=row["severity"],
            evidence=tuple(json.loads(row["evidence_json"])),
        )

    def stretches(self, kind: Optional[str] = None) -> list[Stretch]:
        where = "WHERE kind = ?" if kind else ""
        cur = self._conn.execute(
            f"SELECT * FROM stretches {where} ORDER BY run_id, sequence_id, kind, start_m",
            (kind,) if kind else (),
        )
        return [
            Stretch(r["sequence_id"], r["kind"], r["start_m"], r["end_m"],
                    r["score"], r["count"], r["label"])
            for r in cur.fetchall()
        ]

    def stretch_features(self, kind: Optional[str] = None) -> list[dict]:
        """GeoJSON LineString features for stretches that carry geometry."""
        where = "WHERE kind = ?" if kind else ""
        cur = self._conn.execute(
            f"SELECT * FROM stretches {where} ORDER BY run_id, sequence_id, kind, start_m",
            (kind,) if kind else (),
        )
        features = []
        for r in cur.fetchall():
            if r["geometry_json"] is None:
                continue
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "LineString",
                                 "coordinates": json.loads(r["geometry_json"])},
                    "properties": {
                        "sequence_id": r["sequence_id"],
                        "kind": r["kind"],
                        "start_m": r["start_m"],
                        "end_m": r["end_m"],
                        "score": r["score"],
                        "count": r["count"],
                        "class": r["label"],
                    },
                }
            )
        return features

    # -- heatmap -----------------------------------------------------------

    def heatmap(self, type: str, cell_size_m: float) -> list[dict]:
        """Square-cell counts over all findings of one type.

        Cell mass is conserved: the counts sum to the item total.
        """
        if cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        cur = self._conn.execute(
            "SELECT lat, lon FROM irregularities WHERE type = ?", (type,)
        )
        points = [(r["lat"], r["lon"]) for r in cur.fetchall()]
        if not points:
            return []
        lat0 = min(p[0] for p in points)
        lon0 = min(p[1] for p in points)
        scale_x = _M_PER_DEG * math.cos(math.radians(lat0))
        cells: dict[tuple[int, int], int] = {}
        for lat, lon in points:
            iy = int(((lat - lat0) * _M_PER_DEG) // cell_size_m)
            ix = int(((lon - lon0) * scale_x) // cell_size_m)
            cells[(iy, ix)] = cells.get((iy, ix), 0) + 1
        out = []
        for (iy, ix) in sorted(cells):
            center_lat = lat0 + ((iy + 0.5) * cell_size_m) / _M_PER_DEG
            center_lon = lon0 + ((ix + 0.5) * cell_size_m) / scale_x
            out.append({"lat": center_lat, "lon": center_lon, "count": cells[(iy, ix)]})
        return out

    # -- registry ----------------------------------------------------------

    def load_registry(self, source: Source) -> int:
        """Load `plate owner...` lines into the registry table."""
        rows = []
        for raw in _iter_lines(source):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            plate, _, owner = line.partition(" ")
            rows.append((plate, owner.strip() or "unknown"))
        with self._lock, self._conn:
            self._conn.executemany(
                "INSERT OR REPLACE INTO registry (plate, owner) VALUES (?, ?)", rows
            )
        return len(rows)

    def registry_owner(self, plate: str) -> Optional[str]:
        cur = self._conn.execute("SELECT owner FROM registry WHERE plate = ?", (plate,))
        row = cur.fetchone()
        return row["owner"] if row else None

    # -- tickets -----------------------------------------------------------

    def tickets(self, status: Optional[str] = None) -> list[Ticket]:
        where = "WHERE status = ?" if status else ""
        cur = self._conn.execute(
            f"SELECT * FROM tickets {where} ORDER BY created_at, id",
            (status,) if status else (),
        )
        return [self._row_to_ticket(r) for r in cur.fetchall()]

    def get_ticket(self, ticket_id: str) -> Ticket:
        cur = self._conn.execute("SELECT * FROM tickets WHERE id = ?", (ticket_id,))
        row = cur.fetchone()
        if row is None:
            raise NotFound(f"ticket {ticket_id!r} not found")
        return self._row_to_ticket(row)

    @staticmethod
    def _row_to_ticket(row: sqlite3.Row) -> Ticket:
        return Ticket(
            id=row["id"], run_id=row["run_id"], group_id=row["group_id"],
            sequence_id=row["sequence_id"], plate_text=row["plate_text"],
            status=row["status"], n_riders=row["n_riders"], n_no_helmet=row["n_no_helmet"],
            frame_range=(row["first_frame"], row["last_frame"]),
            evidence_frames=tuple(json.loads(row["evidence_json"])),
            reviewer_note=row["reviewer_note"],
            created_at=row["created_at"], updated_at=row["updated_at"],
        )

    def review_ticket(self, ticket_id: str, action: str, note: str = "") -> Ticket:
        """pending -> issued | rejected, with a registry check before issue.

        The status change is compare-and-set on 'pending'; losing a race
        surfaces as TicketConflict rather than a double review.
        """
        if action not in ("issue", "reject"):
            raise ValueError(f"action must be issue or reject, got {action!r}")
        with self._lock:
            ticket = self.get_ticket(ticket_id)
            if ticket.status != "pending":
                raise TicketConflict(f"ticket {ticket_id} already {ticket.status}")
            if action == "issue":
                if not ticket.plate_text:
                    raise UnregisteredPlate("ticket has no plate to issue against")
                if self.registry_owner(ticket.plate_text) is None:
                    raise UnregisteredPlate(f"plate {ticket.plate_text!r} not in registry")
            new_status = "issued" if action == "issue" else "rejected"
            with self._conn:
                cur = self._conn.execute(
                    "UPDATE tickets SET status = ?, reviewer_note = ?, updated_at = ? "
                    "WHERE id = ? AND status = 'pending'",
                    (new_status, note, time.time(), ticket_id),
                )
            if cur.rowcount != 1:
                raise TicketConflict(f"ticket {ticket_id} changed concurrently")
        return self.get_ticket(ticket_id)

    # -- warning rules -----------------------------------------------------

    def add_rule(self, metric: str, threshold: float, direction: str, active: bool = True) -> WarningRule:
        if metric not in SafetyReport.FIELDS:
            raise ValueError(f"unknown metric {metric!r}")
        if direction not in ("above", "below"):
            raise ValueError("direction must be 'above' or 'below'")
        if not math.isfinite(threshold):
            raise ValueError("threshold must be finite")
        with self._lock, self._conn:
            cur = self._conn.execute(
                "INSERT INTO rules (metric, threshold, direction, active) VALUES (?, ?, ?, ?)",
                (metric, threshold, direction, int(active)),
            )
            rule_id = cur.lastrowid
        return self.get_rule(rule_id)

    def get_rule(self, rule_id: int) -> WarningRule:
        cur = self._conn.execute("SELECT * FROM rules WHERE id = ?", (rule_id,))
        row = cur.fetchone()
        if row is None:
            raise NotFound(f"rule {rule_id} not found")
        return WarningRule(row["id"], row["metric"], row["threshold"],
                           row["direction"], bool(row["active"]))

    def rules(self) -> list[WarningRule]:
        cur = self._conn.execute("SELECT * FROM rules ORDER BY id")
        return [
            WarningRule(r["id"], r["metric"], r["threshold"], r["direction"], bool(r["active"]))
            for r in cur.fetchall()
        ]

    def update_rule(self, rule_id: int, threshold: Optional[float] = None,
                    direction: Optional[str] = None, active: Optional[bool] = None) -> WarningRule:
        rule = self.get_rule(rule_id)
        new_threshold = rule.threshold if threshold is None else threshold
        new_direction = rule.direction if direction is None else direction
        new_active = rule.active if active is None else active
        if new_direction not in ("above", "below"):
            raise ValueError("direction must be 'above' or 'below'")
        if not math.isfinite(new_threshold):
            raise ValueError("threshold must be finite")
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE rules SET threshold = ?, direction = ?, active = ? WHERE id = ?",
                (new_threshold, new_direction, int(new_active), rule_id),
            )
        return self.get_rule(rule_id)

    def delete_rule(self, rule_id: int) -> None:
        with self._lock, self._conn:
            cur = self._conn.execute("DELETE FROM rules WHERE id = ?", (rule_id,))
        if cur.rowcount == 0:
            raise NotFound(f"rule {rule_id} not found")


def _stretch_geometries(result: CityRunResult) -> dict[tuple[str, str, float], str]:
    """Per-stretch polyline coordinates ([lon, lat] pairs), JSON-encoded."""
    out: dict[tuple[str, str, float], str] = {}
    for seq in result.sequences:
        frames = sorted(seq.offsets)
        for s in seq.lane_stretch_list + seq.pothole_stretch_list:
            coords = [
                [seq.positions[f][1], seq.positions[f][0]]
                for f in frames
                if s.start_m <= seq.offsets[f] <= s.end_m
            ]
            if len(coords) >= 2:
                out[(s.sequence_id, s.kind, s.start_m)] = json.dumps(coords)
    return out


def evaluate_warnings(report: Optional[SafetyReport], rules: Sequence[WarningRule]) -> list[Warning]:
    """Rules trigger when their metric crosses the threshold in the rule's
    direction; absent metrics (None) never trigger."""
    if report is None:
        return []
    out = []
    for rule in rules:
        if not rule.active:
            continue
        value = getattr(report, rule.metric, None)
        if value is None:
            continue
        crossed = value > rule.threshold if rule.direction == "above" else value < rule.threshold
        if crossed:
            out.append(Warning(rule.id, rule.metric, rule.threshold, rule.direction, value))
    return out
