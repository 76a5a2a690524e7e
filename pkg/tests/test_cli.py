import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from roadaudit.cli import main
from roadaudit.store import Store


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    runner = CliRunner()
    result = runner.invoke(main, ["simulate", "--out", str(out), "--preset", "smoke"])
    assert result.exit_code == 0, result.output
    return out


def manifest_entry(sim_dir):
    return json.loads((sim_dir / "manifest.json").read_text())[0]


class TestSimulate:
    def test_files_written(self, sim_dir):
        for name in ("detections.log", "gps.log", "conditions.log", "ground_truth.json",
                     "manifest.json"):
            assert (sim_dir / name).exists()

    def test_expected_report_printed(self, sim_dir):
        runner = CliRunner()
        result = runner.invoke(
            main, ["simulate", "--out", str(sim_dir / "again"), "--preset", "smoke"]
        )
        assert "expected report" in result.output
        assert "Riders violating helmet rules" in result.output


class TestIngest:
    def test_stats_reported(self, sim_dir):
        entry = manifest_entry(sim_dir)
        runner = CliRunner()
        result = runner.invoke(main, [
            "ingest",
            "--detections", entry["detections"],
            "--gps", entry["gps"],
            "--conditions", entry["conditions"],
            "--frames", str(entry["frames"]),
        ])
        assert result.exit_code == 0, result.output
        assert "0 malformed" in result.output
        assert "segment(s)" in result.output

    def test_malformed_counted(self, tmp_path, sim_dir):
        entry = manifest_entry(sim_dir)
        log = tmp_path / "bad.log"
        original = Path(entry["detections"]).read_text()
        log.write_text("not a record\n" + original)
        runner = CliRunner()
        result = runner.invoke(main, [
            "ingest", "--detections", str(log), "--frames", str(entry["frames"]),
        ])
        assert "1 malformed" in result.output


class TestTrackFuse:
    def test_track_writes_log(self, sim_dir, tmp_path):
        entry = manifest_entry(sim_dir)
        out = tmp_path / "tracks.log"
        summary = tmp_path / "summary.log"
        runner = CliRunner()
        result = runner.invoke(main, [
            "track",
            "--detections", entry["detections"],
            "--out", str(out),
            "--summary", str(summary),
            "--frames", str(entry["frames"]),
        ])
        assert result.exit_code == 0, result.output
        rows = out.read_text().splitlines()
        assert rows
        first = rows[0].split()
        assert len(first) == 8  # track_id class frame x y w h confidence
        summary_rows = summary.read_text().splitlines()
        assert all(len(r.split()) == 5 for r in summary_rows)

    def test_fuse_writes_violations(self, sim_dir, tmp_path):
        entry = manifest_entry(sim_dir)
        out = tmp_path / "violations.txt"
        runner = CliRunner()
        result = runner.invoke(main, [
            "fuse",
            "--detections", entry["detections"],
            "--out", str(out),
            "--frames", str(entry["frames"]),
            "--sequence-id", entry["sequence_id"],
        ])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert len(lines) == 1  # one violating group in the smoke preset
        assert "MH12AB" in lines[0]


class TestReport:
    def test_single_sequence_outputs(self, sim_dir, tmp_path):
        entry = manifest_entry(sim_dir)
        out = tmp_path / "report"
        store = tmp_path / "audit.db"
        registry = tmp_path / "registry.txt"
        registry.write_text("MH12AB owner-x\n")
        runner = CliRunner()
        result = runner.invoke(main, [
            "report",
            "--detections", entry["detections"],
            "--gps", entry["gps"],
            "--conditions", entry["conditions"],
            "--frames", str(entry["frames"]),
            "--sequence-id", entry["sequence_id"],
            "--out", str(out),
            "--store", str(store),
            "--registry", str(registry),
            "--run-id", "cli-run",
        ])
        assert result.exit_code == 0, result.output
        for name in ("report.csv", "lane_stretches.csv", "pothole_stretches.csv",
                     "irregularities.geojson", "lane_stretches.geojson",
                     "pothole_stretches.geojson", "violations.txt"):
            assert (out / name).exists(), name
        with Store(store) as st:
            assert st.run_ids() == ["cli-run"]
            assert len(st.tickets()) == 1
            assert st.registry_owner("MH12AB") == "owner-x"

    def test_manifest_runs(self, sim_dir, tmp_path):
        out = tmp_path / "city"
        runner = CliRunner()
        result = runner.invoke(main, [
            "report",
            "--manifest", str(sim_dir / "manifest.json"),
            "--out", str(out),
            "--frames", "1",  # ignored with --manifest
        ])
        assert result.exit_code == 0, result.output
        assert (out / "report.csv").exists()

    def test_config_file_respected(self, sim_dir, tmp_path):
        entry = manifest_entry(sim_dir)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"tracker": {"iou_threshold": 0.25}}))
        out = tmp_path / "cfg-report"
        runner = CliRunner()
        result = runner.invoke(main, [
            "report",
            "--detections", entry["detections"],
            "--gps", entry["gps"],
            "--frames", str(entry["frames"]),
            "--out", str(out),
            "--config", str(config),
        ])
        assert result.exit_code == 0, result.output

    def test_bad_config_rejected(self, sim_dir, tmp_path):
        entry = manifest_entry(sim_dir)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"tracker": {"bogus_knob": 1}}))
        runner = CliRunner()
        result = runner.invoke(main, [
            "report",
            "--detections", entry["detections"],
            "--gps", entry["gps"],
            "--frames", str(entry["frames"]),
            "--out", str(tmp_path / "x"),
            "--config", str(config),
        ])
        assert result.exit_code != 0


class TestEval:
    def test_eval_against_own_truth(self, sim_dir, tmp_path):
        entry = manifest_entry(sim_dir)
        gt = json.loads((sim_dir / "ground_truth.json").read_text())
        gt_file = tmp_path / "gt.txt"
        with open(gt_file, "w") as fh:
            for frame, oid, cls, x, y, w, h in gt["frame_boxes"]:
                fh.write(f"{frame} {cls} {x!r} {y!r} {w!r} {h!r}\n")
        out = tmp_path / "eval"
        runner = CliRunner()
        result = runner.invoke(main, [
            "eval",
            "--detections", entry["detections"],
            "--ground-truth", str(gt_file),
            "--conditions", entry["conditions"],
            "--frames", str(entry["frames"]),
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        metrics = (out / "detection_metrics.csv").read_text()
        # Detections are the noise-free truth, so every class scores 1.0.
        for line in metrics.splitlines()[1:]:
            if line.startswith("mean"):
                continue
            parts = line.split(",")
            assert float(parts[1]) == 1.0 and float(parts[2]) == 1.0
        assert (out / "stratified_map.csv").exists()
