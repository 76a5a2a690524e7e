"""Detection-quality evaluation and condition-stratified reporting.

Average precision uses all-points interpolation (area under the
monotone precision envelope of the full PR curve); P/R/F1 operate above
a confidence cutoff. Stratification pools frames per condition
sub-category and recomputes each task's AP inside the pool.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

from .ingest import Source, _iter_lines
from .model import (
    BoundingBox,
    ConditionLabel,
    DamageLevel,
    DetectionClass,
    DetectionRecord,
    IngestError,
    RoadType,
    TimeOfDay,
    TrafficDensity,
)
from .tracking import iou


@dataclass(frozen=True)
class GroundTruthBox:
    frame: int
    cls: DetectionClass
    box: BoundingBox


def parse_ground_truth(source: Source) -> list[GroundTruthBox]:
    """Lines of `frame class x y w h`."""
    out = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 6:
            raise IngestError(f"ground-truth line {line_no}: expected `frame class x y w h`")
        try:
            out.append(
                GroundTruthBox(
                    int(parts[0]), DetectionClass(parts[1]),
                    BoundingBox(*(float(p) for p in parts[2:6])),
                )
            )
        except ValueError as exc:
            raise IngestError(f"ground-truth line {line_no}: {exc}") from exc
    return out


def match(
    preds: Sequence[DetectionRecord],
    gts: Sequence[GroundTruthBox],
    iou_thr: float = 0.5,
) -> list[bool]:
    """TP/FP flags aligned with the input predictions (one frame, one class).

    Predictions claim ground truth greedily in descending confidence
    order (stable on ties); each claims the unmatched ground-truth box of
    highest IoU at or above the threshold, every other prediction is FP.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    taken = [False] * len(gts)
    flags = [False] * len(preds)
    for i in order:
        best_j = -1
        best_iou = 0.0
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            v = iou(preds[i].box, gt.box)
            if v >= iou_thr and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            taken[best_j] = True
            flags[i] = True
    return flags


def evaluate_class(
    preds: Sequence[DetectionRecord],
    gts: Sequence[GroundTruthBox],
    iou_thr: float = 0.5,
) -> tuple[list[bool], list[float], int]:
    """Pool per-frame matches of one class across frames.

    Returns (flags, confidences) sorted by descending confidence
    (global input order on ties) plus the ground-truth count.
    """
    frames = sorted({p.frame for p in preds} | {g.frame for g in gts})
    flat: list[tuple[float, int, bool]] = []
    pos = 0
    for frame in frames:
        fp = [p for p in preds if p.frame == frame]
        fg = [g for g in gts if g.frame == frame]
        for p, flag in zip(fp, match(fp, fg, iou_thr)):
            flat.append((p.confidence, pos, flag))
            pos += 1
    flat.sort(key=lambda t: (-t[0], t[1]))
    return [f for _, _, f in flat], [c for c, _, _ in flat], len(gts)


def ap(flags: Sequence[bool], n_gt: int) -> Optional[float]:
    """Area under the PR curve, all-points interpolation.

    flags must be ordered by descending confidence. With no ground truth,
    any prediction is pure false positive (AP 0); with neither ground
    truth nor predictions the value is undefined and reported as None.
    """
    if n_gt < 0:
        raise ValueError("n_gt must be nonnegative")
    if n_gt == 0:
        return 0.0 if flags else None
    if not flags:
        return 0.0
    tp = 0
    points = []  # (recall, precision) after each prediction
    for k, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        points.append((tp / n_gt, tp / k))

    # Monotone envelope from the right, integrated over recall steps.
    area = 0.0
    best = 0.0
    prev_recall = None
    for recall, precision in reversed(points):
        if prev_recall is not None and recall < prev_recall:
            area += (prev_recall - recall) * best
        best = max(best, precision)
        prev_recall = recall
    area += prev_recall * best  # segment from recall 0 to the first point
    # The exact value lies in [0, 1]; summation round-off can spill over.
    return min(1.0, area)


def prf1(
    flags: Sequence[bool],
    confidences: Sequence[float],
    n_gt: int,
    conf_thr: float = 0.5,
) -> tuple[float, float, float]:
    """(precision, recall, f1) over predictions at or above conf_thr.

    Undefined ratios (no predictions, no ground truth) report as 0.
    """
    kept = [f for f, c in zip(flags, confidences) if c >= conf_thr]
    tp = sum(kept)
    precision = tp / len(kept) if kept else 0.0
    recall = tp / n_gt if n_gt else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return precision, recall, f1


def mean_ap(per_class: dict[DetectionClass, Optional[float]]) -> Optional[float]:
    defined = [v for v in per_class.values() if v is not None]
    return sum(defined) / len(defined) if defined else None


# Table columns: (dimension, sub-category) in fixed display order.
STRATA: tuple[tuple[str, str], ...] = (
    ("time_of_day", TimeOfDay.MORNING.value),
    ("time_of_day", TimeOfDay.NOON.value),
    ("time_of_day", TimeOfDay.EVENING.value),
    ("traffic", TrafficDensity.SPARSE.value),
    ("traffic", TrafficDensity.MODERATE.value),
    ("traffic", TrafficDensity.DENSE.value),
    ("road_type", RoadType.BRIDGE.value),
    ("road_type", RoadType.NARROW.value),
    ("road_type", RoadType.STANDARD.value),
    ("road_type", RoadType.HIGHWAY.value),
    ("damage", DamageLevel.LOW.value),
    ("damage", DamageLevel.MODERATE.value),
    ("damage", DamageLevel.HIGH.value),
)


@dataclass
class StratifiedReport:
    classes: list[DetectionClass]
    # cells[class][(dimension, category)] -> AP or None (absent)
    cells: dict[DetectionClass, dict[tuple[str, str], Optional[float]]]
    overall: dict[tuple[str, str], Optional[float]] = field(default_factory=dict)
    pooled_map: Optional[float] = None

    def to_csv(self, out: IO[str]) -> None:
        header = ["task"] + [f"{dim}:{cat}" for dim, cat in STRATA]
        out.write(",".join(header) + "\n")
        for cls in self.classes:
            row = [cls.value]
            for key in STRATA:
                v = self.cells[cls].get(key)
                row.append("" if v is None else repr(v))
            out.write(",".join(row) + "\n")
        row = ["overall"]
        for key in STRATA:
            v = self.overall.get(key)
            row.append("" if v is None else repr(v))
        out.write(",".join(row) + "\n")


def stratify(
    labels_by_frame: dict[int, ConditionLabel],
    preds: Sequence[DetectionRecord],
    gts: Sequence[GroundTruthBox],
    classes: Iterable[DetectionClass] | None = None,
    iou_thr: float = 0.5,
) -> StratifiedReport:
    """AP per (task, condition sub-category), pooling that category's frames.

    Frames without a label (or with an unlabeled time of day for the time
    columns) are excluded from the affected cells; cells whose pool holds
    no ground truth are absent. The overall row is the unweighted mean
    over tasks with a defined value.
    """
    class_list = sorted(
        set(classes) if classes is not None else {g.cls for g in gts} | {p.cls for p in preds},
        key=lambda c: c.value,
    )

    cells: dict[DetectionClass, dict[tuple[str, str], Optional[float]]] = {}
    for cls in class_list:
        cls_preds = [p for p in preds if p.cls is cls]
        cls_gts = [g for g in gts if g.cls is cls]
        row: dict[tuple[str, str], Optional[float]] = {}
        for dim, cat in STRATA:
            frames = {
                f for f, lbl in labels_by_frame.items() if getattr(lbl, dim).value == cat
            }
            pool_preds = [p for p in cls_preds if p.frame in frames]
            pool_gts = [g for g in cls_gts if g.frame in frames]
            if not pool_gts:
                row[(dim, cat)] = None
                continue
            flags, _, n_gt = evaluate_class(pool_preds, pool_gts, iou_thr)
            row[(dim, cat)] = ap(flags, n_gt)
        cells[cls] = row

    overall: dict[tuple[str, str], Optional[float]] = {}
    for key in STRATA:
        vals = [cells[cls][key] for cls in class_list if cells[cls][key] is not None]
        overall[key] = sum(vals) / len(vals) if vals else None

    per_class = {}
    for cls in class_list:
        flags, _, n_gt = evaluate_class(
            [p for p in preds if p.cls is cls], [g for g in gts if g.cls is cls], iou_thr
        )
        per_class[cls] = ap(flags, n_gt)

    return StratifiedReport(
        classes=class_list, cells=cells, overall=overall, pooled_map=mean_ap(per_class)
    )


@dataclass(frozen=True)
class ClassEvaluation:
    cls: DetectionClass
    precision: float
    recall: float
    f1: float
    average_precision: Optional[float]
    n_gt: int
    n_pred: int


def evaluate_detections(
    preds: Sequence[DetectionRecord],
    gts: Sequence[GroundTruthBox],
    iou_thr: float = 0.5,
    conf_thr: float = 0.5,
) -> list[ClassEvaluation]:
    """Per-class precision/recall/F1/AP over all frames."""
    classes = sorted({g.cls for g in gts} | {p.cls for p in preds}, key=lambda c: c.value)
    out = []
    for cls in classes:
        cls_preds = [p for p in preds if p.cls is cls]
        cls_gts = [g for g in gts if g.cls is cls]
        flags, confs, n_gt = evaluate_class(cls_preds, cls_gts, iou_thr)
        p, r, f1 = prf1(flags, confs, n_gt, conf_thr)
        out.append(ClassEvaluation(cls, p, r, f1, ap(flags, n_gt), n_gt, len(cls_preds)))
    return out


def write_evaluation_csv(evaluations: Sequence[ClassEvaluation], out: IO[str]) -> None:
    out.write("task,precision,recall,f1,ap50,n_gt,n_pred\n")
    for e in evaluations:
        ap_s = "" if e.average_precision is None else repr(e.average_precision)
        out.write(
            f"{e.cls.value},{e.precision!r},{e.recall!r},{e.f1!r},{ap_s},{e.n_gt},{e.n_pred}\n"
        )
    defined = [e.average_precision for e in evaluations if e.average_precision is not None]
    if defined:
        out.write(f"mean,,,,{sum(defined) / len(defined)!r},,\n")
