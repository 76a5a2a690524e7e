"""Command-line entry points for the batch pipeline and the service.

Batch stages (ingest, track, fuse, report, eval, simulate) run locally
against log files; `report --store` persists results for the web
service, which `serve` exposes.
"""
from __future__ import annotations

import json
from pathlib import Path

import click

from .config import PipelineConfig
from .evaluation import evaluate_detections, parse_ground_truth, stratify, write_evaluation_csv
from .fusion import associate_riders, filter_short_tracks, fuse_tracks, violation_records
from .geometrics import format_report_table
from .ingest import labels_by_second, parse_condition_log, parse_detection_log, parse_gps_log
from .model import DetectionClass, IngestError, VideoMeta
from .outputs import (
    irregularities_geojson,
    stretches_geojson,
    write_geojson,
    write_report_csv,
    write_stretch_csv,
    write_violations,
)
from .pipeline import SequenceInput, run_city
from .scenario import NoiseModel, generate, oracle_metrics, reference_city_scenario
from .store import Store
from .tracking import Tracker, write_track_log, write_track_summary


def _load_config(path: str | None) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else PipelineConfig()


def _meta(sequence_id: str, frames: int, fps: float, width: int, height: int) -> VideoMeta:
    return VideoMeta(sequence_id=sequence_id, frame_count=frames, fps=fps,
                     width=width, height=height)


@click.group()
def main() -> None:
    """Road-safety analytics over detection and GPS logs."""


meta_options = [
    click.option("--sequence-id", default="seq-000", show_default=True),
    click.option("--frames", type=int, required=True, help="Total video frame count."),
    click.option("--fps", type=float, default=15.0, show_default=True),
    click.option("--width", type=int, default=1920, show_default=True),
    click.option("--height", type=int, default=1080, show_default=True),
]


def with_meta(cmd):
    for opt in reversed(meta_options):
        cmd = opt(cmd)
    return cmd


@main.command()
@click.option("--detections", type=click.Path(exists=True), required=True)
@click.option("--gps", type=click.Path(exists=True))
@click.option("--conditions", type=click.Path(exists=True))
@with_meta
def ingest(detections, gps, conditions, sequence_id, frames, fps, width, height):
    """Validate logs and report parse statistics."""
    meta = _meta(sequence_id, frames, fps, width, height)
    try:
        parsed = parse_detection_log(detections, meta)
    except IngestError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"detections: {len(parsed.records)} valid, {parsed.n_malformed} malformed")
    for reject in parsed.rejected[:10]:
        click.echo(f"  line {reject.line_no}: {reject.reason}")
    if parsed.n_malformed > 10:
        click.echo(f"  ... and {parsed.n_malformed - 10} more")
    if gps:
        trace = parse_gps_log(gps)
        click.echo(f"gps: {len(trace.samples)} samples, {len(trace.segments)} segment(s)")
    if conditions:
        annotations = parse_condition_log(conditions)
        click.echo(f"conditions: {len(annotations)} seconds annotated")


@main.command()
@click.option("--detections", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True, help="Track log output path.")
@click.option("--summary", type=click.Path(), help="Track summary output path.")
@click.option("--config", "config_path", type=click.Path(exists=True))
@with_meta
def track(detections, out, summary, config_path, sequence_id, frames, fps, width, height):
    """Track detections across frames and write the track log."""
    config = _load_config(config_path)
    meta = _meta(sequence_id, frames, fps, width, height)
    parsed = parse_detection_log(detections, meta)
    by_frame: dict[int, list] = {}
    for rec in parsed.records:
        by_frame.setdefault(rec.frame, []).append(rec)
    tracker = Tracker(config.tracker)
    last = max(by_frame) if by_frame else -1
    for frame in range(last + 1):
        tracker.step(frame, by_frame.get(frame, ()))
    tracks = tracker.tracks
    with open(out, "w", encoding="utf-8") as fh:
        write_track_log(tracks, fh)
    if summary:
        with open(summary, "w", encoding="utf-8") as fh:
            write_track_summary(tracks, fh)
    confirmed = sum(1 for t in tracks if t.was_confirmed)
    click.echo(f"{len(tracks)} tracks ({confirmed} confirmed) over {last + 1} frames")


@main.command()
@click.option("--detections", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True, help="Violation records output.")
@click.option("--config", "config_path", type=click.Path(exists=True))
@with_meta
def fuse(detections, out, config_path, sequence_id, frames, fps, width, height):
    """Track, fuse attributes over tracks, and write violation records."""
    config = _load_config(config_path)
    meta = _meta(sequence_id, frames, fps, width, height)
    parsed = parse_detection_log(detections, meta)
    by_frame: dict[int, list] = {}
    for rec in parsed.records:
        by_frame.setdefault(rec.frame, []).append(rec)
    tracker = Tracker(config.tracker)
    last = max(by_frame) if by_frame else -1
    for frame in range(last + 1):
        tracker.step(frame, by_frame.get(frame, ()))
    reported = filter_short_tracks(
        [t for t in tracker.tracks if t.was_confirmed], config.fusion.min_track_frames
    )
    fused = fuse_tracks(reported)
    riders = [f for f in fused if f.cls is DetectionClass.RIDER]
    motos = [f for f in fused if f.cls is DetectionClass.MOTORCYCLE]
    groups = associate_riders(riders, motos, config.fusion)
    records = violation_records(groups, sequence_id)
    with open(out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.format_line() + "\n")
    click.echo(
        f"{len(fused)} fused tracks, {len(groups)} rider groups, {len(records)} violations"
    )


@main.command()
@click.option("--detections", type=click.Path(exists=True))
@click.option("--gps", type=click.Path(exists=True))
@click.option("--conditions", type=click.Path(exists=True))
@click.option("--manifest", type=click.Path(exists=True),
              help="JSON list of sequences for multi-sequence runs.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--store", "store_path", type=click.Path(), help="Persist into this store.")
@click.option("--run-id", default="run-001", show_default=True)
@click.option("--registry", type=click.Path(exists=True), help="Plate registry to load.")
@with_meta
def report(detections, gps, conditions, manifest, out_dir, config_path, store_path,
           run_id, registry, sequence_id, frames, fps, width, height):
    """Run the full pipeline and write the city report plus map layers."""
    config = _load_config(config_path)
    inputs = []
    if manifest:
        for entry in json.loads(Path(manifest).read_text(encoding="utf-8")):
            inputs.append(
                SequenceInput(
                    meta=VideoMeta(
                        sequence_id=entry["sequence_id"],
                        frame_count=entry["frames"],
                        fps=entry.get("fps", 15.0),
                        width=entry.get("width", 1920),
                        height=entry.get("height", 1080),
                    ),
                    detections=entry["detections"],
                    gps=entry["gps"],
                    conditions=entry.get("conditions"),
                )
            )
    else:
        if not detections or not gps:
            raise click.ClickException("--detections and --gps required without --manifest")
        inputs.append(
            SequenceInput(
                meta=_meta(sequence_id, frames, fps, width, height),
                detections=detections, gps=gps, conditions=conditions,
            )
        )

    city = run_city(inputs, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.csv", "w", encoding="utf-8") as fh:
        write_report_csv(city.report, fh)
    lane = [s for s in city.stretches if s.kind == "lane"]
    holes = [s for s in city.stretches if s.kind == "pothole"]
    with open(out / "lane_stretches.csv", "w", encoding="utf-8") as fh:
        write_stretch_csv(lane, fh)
    with open(out / "pothole_stretches.csv", "w", encoding="utf-8") as fh:
        write_stretch_csv(holes, fh)
    with open(out / "irregularities.geojson", "w", encoding="utf-8") as fh:
        write_geojson(irregularities_geojson(city.irregularities), fh)
    with open(out / "lane_stretches.geojson", "w", encoding="utf-8") as fh:
        write_geojson(stretches_geojson(city.sequences, "lane"), fh)
    with open(out / "pothole_stretches.geojson", "w", encoding="utf-8") as fh:
        write_geojson(stretches_geojson(city.sequences, "pothole"), fh)
    with open(out / "violations.txt", "w", encoding="utf-8") as fh:
        write_violations(city, fh)

    if store_path:
        with Store(store_path) as store:
            if registry:
                store.load_registry(registry)
            written = store.persist_run(run_id, city)
            click.echo(f"store: run {run_id} {'persisted' if written else 'already present'}")

    click.echo(format_report_table(city.report))


@main.command("eval")
@click.option("--detections", type=click.Path(exists=True), required=True)
@click.option("--ground-truth", type=click.Path(exists=True), required=True)
@click.option("--conditions", type=click.Path(exists=True),
              help="Enables the condition-stratified table.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@with_meta
def eval_cmd(detections, ground_truth, conditions, out_dir, config_path,
             sequence_id, frames, fps, width, height):
    """Score detections against ground truth (P/R/F1/AP, optional strata)."""
    config = _load_config(config_path)
    meta = _meta(sequence_id, frames, fps, width, height)
    parsed = parse_detection_log(detections, meta)
    gts = parse_ground_truth(ground_truth)
    evaluations = evaluate_detections(
        parsed.records, gts,
        iou_thr=config.eval.iou_threshold, conf_thr=config.eval.confidence_threshold,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "detection_metrics.csv", "w", encoding="utf-8") as fh:
        write_evaluation_csv(evaluations, fh)
    for e in evaluations:
        ap_s = "n/a" if e.average_precision is None else f"{e.average_precision:.3f}"
        click.echo(
            f"{e.cls.value:16s} P={e.precision:.3f} R={e.recall:.3f} "
            f"F1={e.f1:.3f} AP={ap_s}"
        )
    if conditions:
        labels = labels_by_second(parse_condition_log(conditions))
        frame_labels = {}
        for f in range(meta.frame_count):
            lbl = labels.get(int(f // meta.fps))
            if lbl is not None:
                frame_labels[f] = lbl
        strat = stratify(frame_labels, parsed.records, gts,
                         iou_thr=config.eval.iou_threshold)
        with open(out / "stratified_map.csv", "w", encoding="utf-8") as fh:
            strat.to_csv(fh)
        click.echo(f"stratified table written for {len(strat.classes)} tasks")


@main.command()
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--preset", type=click.Choice(["city", "smoke"]), default="city",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--miss-rate", type=float, default=0.0, show_default=True)
@click.option("--fp-rate", type=float, default=0.0, show_default=True)
@click.option("--jitter", type=float, default=0.0, show_default=True)
def simulate(out_dir, preset, seed, miss_rate, fp_rate, jitter):
    """Generate synthetic logs plus ground truth into a directory."""
    noise = NoiseModel(miss_rate=miss_rate, false_positive_rate=fp_rate,
                       box_jitter_px=jitter, seed=seed)
    if preset == "city":
        spec = reference_city_scenario(seed=seed, noise=noise)
    else:
        from .scenario import LaneRegion, RiderGroupSpec, ScenarioSpec, SignSpec
        import math as _math

        deg = 180.0 / (_math.pi * 6_371_000.0)
        spec = ScenarioSpec(
            route=((0.0, 0.0), (2_007.0 * deg, 0.0)),
            sequence_id="smoke",
            light_spacing_m=165.0, light_start_m=200.0,
            signs=(SignSpec(500.0, defective=True), SignSpec(1200.0)),
            pothole_offsets=(350.0, 1150.0),
            rider_groups=(
                RiderGroupSpec(600.0, helmets=(False,), plate="MH12AB"),
                RiderGroupSpec(900.0, helmets=(True,), plate="MH12CD"),
            ),
            lane_profile=(LaneRegion(0.0, 1_000.0, 0.5), LaneRegion(1_000.0, 2_010.0, 0.02)),
            noise=noise,
        )
    bundle = generate(spec)
    paths = bundle.write(out_dir)
    oracle = oracle_metrics(spec)
    manifest = [{
        "sequence_id": spec.sequence_id,
        "detections": str(paths["detections"]),
        "gps": str(paths["gps"]),
        "conditions": str(paths["conditions"]),
        "frames": bundle.ground_truth.frame_count,
        "fps": spec.fps,
    }]
    manifest_path = Path(out_dir) / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    click.echo(f"wrote {', '.join(str(p) for p in paths.values())}")
    click.echo(f"manifest: {manifest_path}")
    click.echo(f"frames: {bundle.ground_truth.frame_count}  "
               f"objects: {len(bundle.ground_truth.objects)}")
    click.echo("expected report (geometry oracle; lane % assumes every stretch "
               "carries detections, which only the city preset guarantees):")
    click.echo(format_report_table(oracle))


@main.command()
@click.option("--store", "store_path", type=click.Path(), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(store_path, host, port):
    """Serve the review API over the given store."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store_path), host=host, port=port)


if __name__ == "__main__":
    main()
