import io
import math

import pytest

from roadaudit.ingest import parse_detection_log, parse_gps_log
from roadaudit.model import BoundingBox, DetectionClass, VideoMeta
from roadaudit.scenario import (
    IMAGE_H,
    IMAGE_W,
    BlipSpec,
    LaneRegion,
    NoiseModel,
    RiderGroupSpec,
    ScenarioSpec,
    SceneObject,
    SceneSpec,
    SignSpec,
    generate,
    generate_scene,
    light_offsets,
    oracle_metrics,
    project_box,
    reference_city_scenario,
)

_DEG_PER_M = 180.0 / (math.pi * 6_371_000.0)


def small_spec(**kwargs):
    defaults = dict(
        route=((0.0, 0.0), (700.0 * _DEG_PER_M, 0.0)),  # 700 m north
        ego_speed_mps=12.5,
        fps=15.0,
        sequence_id="small",
    )
    defaults.update(kwargs)
    return ScenarioSpec(**defaults)


class TestGenerate:
    def test_single_pothole_contiguous_streak(self):
        bundle = generate(small_spec(pothole_offsets=(350.0,)))
        meta = VideoMeta("small", frame_count=bundle.ground_truth.frame_count)
        records = parse_detection_log(io.StringIO(bundle.detection_log), meta).records
        assert records
        assert {r.cls for r in records} == {DetectionClass.POTHOLE}
        frames = [r.frame for r in records]
        assert frames == list(range(frames[0], frames[0] + len(frames)))

    def test_fixed_seed_byte_identical(self):
        spec = small_spec(
            pothole_offsets=(200.0, 400.0),
            signs=(SignSpec(300.0, defective=True),),
            rider_groups=(RiderGroupSpec(100.0, helmets=(False,), plate="XX99"),),
            noise=NoiseModel(miss_rate=0.1, false_positive_rate=0.05,
                             box_jitter_px=2.0, attr_flip_prob=0.1, seed=42),
        )
        a = generate(spec)
        b = generate(spec)
        assert a.detection_log == b.detection_log
        assert a.gps_log == b.gps_log
        assert a.condition_log == b.condition_log
        assert a.ground_truth.to_json() == b.ground_truth.to_json()

    def test_light_count_along_route(self):
        # 3.3 km with a light every 165 m starting at 100 m.
        spec = ScenarioSpec(
            route=((0.0, 0.0), (3_330.0 * _DEG_PER_M, 0.0)),
            ego_speed_mps=12.5, light_spacing_m=165.0, light_start_m=100.0,
        )
        offs = light_offsets(spec)
        assert len(offs) == 20
        assert offs[1] - offs[0] == 165.0
        bundle = generate(spec)
        light_ids = {
            o.object_id for o in bundle.ground_truth.objects if o.cls == "street_light"
        }
        assert len(light_ids) == 20

    def test_monotone_box_size_law(self):
        bundle = generate(small_spec(
            pothole_offsets=(350.0,),
            signs=(SignSpec(500.0),),
            light_spacing_m=300.0, light_start_m=250.0,
        ))
        by_object: dict[int, list[tuple[int, float]]] = {}
        for frame, oid, cls, x, y, w, h in bundle.ground_truth.frame_boxes:
            by_object.setdefault(oid, []).append((frame, w * h))
        for oid, seq in by_object.items():
            areas = [a for _, a in sorted(seq)]
            assert all(b > a for a, b in zip(areas, areas[1:])), f"object {oid} not monotone"

    def test_boxes_inside_image(self):
        bundle = generate(reference_city_scenario())
        meta = VideoMeta("city-ref", frame_count=bundle.ground_truth.frame_count)
        parsed = parse_detection_log(io.StringIO(bundle.detection_log), meta)
        assert parsed.n_malformed == 0

    def test_gps_log_parses_and_spans_video(self):
        bundle = generate(small_spec())
        trace = parse_gps_log(bundle.gps_log.splitlines())
        last_frame_t = (bundle.ground_truth.frame_count - 1) / 15.0
        assert trace.span[0] == 0.0
        assert trace.span[1] >= last_frame_t

    def test_degenerate_route_rejected(self):
        with pytest.raises(ValueError):
            ScenarioSpec(route=((0.0, 0.0),))

    def test_blips_emitted(self):
        blip = BlipSpec(DetectionClass.POTHOLE, 10, 3, BoundingBox(900, 800, 40, 30))
        bundle = generate(small_spec(blips=(blip,)))
        meta = VideoMeta("small", frame_count=bundle.ground_truth.frame_count)
        records = parse_detection_log(io.StringIO(bundle.detection_log), meta).records
        blip_frames = [r.frame for r in records if r.box.x == 900.0]
        assert blip_frames == [10, 11, 12]

    def test_rider_group_boxes_stacked(self):
        bundle = generate(small_spec(
            rider_groups=(RiderGroupSpec(100.0, helmets=(True,), plate="AA11"),),
        ))
        meta = VideoMeta("small", frame_count=bundle.ground_truth.frame_count)
        records = parse_detection_log(io.StringIO(bundle.detection_log), meta).records
        riders = [r for r in records if r.cls is DetectionClass.RIDER]
        motos = [r for r in records if r.cls is DetectionClass.MOTORCYCLE]
        assert len(riders) == len(motos) >= 4
        by_frame = {m.frame: m for m in motos}
        for r in riders:
            m = by_frame[r.frame]
            assert m.box.y - 0.3 * m.box.h <= r.box.y2 <= m.box.y2
            assert r.helmet_state == "helmet"
            assert m.plate_text == "AA11"

    def test_lane_fractions_attached(self):
        bundle = generate(small_spec(
            pothole_offsets=(350.0,),
            lane_profile=(LaneRegion(0.0, 700.0, 0.4),),
        ))
        meta = VideoMeta("small", frame_count=bundle.ground_truth.frame_count)
        records = parse_detection_log(io.StringIO(bundle.detection_log), meta).records
        assert all(r.lane_fraction == 0.4 for r in records)


class TestProjection:
    def test_area_shrinks_with_distance(self):
        near = project_box(DetectionClass.TRAFFIC_SIGN, 10.0)
        far = project_box(DetectionClass.TRAFFIC_SIGN, 30.0)
        assert near.area > far.area

    @pytest.mark.parametrize("cls", list(ScenarioSpec().__class__ and [
        DetectionClass.STREET_LIGHT, DetectionClass.TRAFFIC_SIGN,
        DetectionClass.POTHOLE, DetectionClass.RIDER, DetectionClass.MOTORCYCLE,
    ]))
    def test_visible_window_stays_in_image(self, cls):
        from roadaudit.scenario import OBJECT_GEOMETRY

        _, _, _, _, far, near = OBJECT_GEOMETRY[cls]
        for dist in (near, (near + far) / 2, far):
            box = project_box(cls, dist)
            assert box.x >= 0 and box.y >= 0
            assert box.x2 <= IMAGE_W and box.y2 <= IMAGE_H


class TestOracle:
    def test_zero_violators(self):
        spec = small_spec(rider_groups=(RiderGroupSpec(100.0, helmets=(True,)),))
        assert oracle_metrics(spec).helmet_violation_pct == 0.0

    def test_reference_violator_share(self):
        spec = reference_city_scenario()
        gt = generate(spec).ground_truth
        assert gt.n_riders == 1000
        assert gt.n_violators == 459
        assert oracle_metrics(spec).helmet_violation_pct == pytest.approx(45.9)

    def test_uniform_spacing_exact(self):
        spec = ScenarioSpec(
            route=((0.0, 0.0), (2_000.0 * _DEG_PER_M, 0.0)),
            ego_speed_mps=12.5, light_spacing_m=165.0, light_start_m=100.0,
        )
        assert oracle_metrics(spec).streetlight_gap_mean_m == pytest.approx(165.0)

    def test_reference_scenario_values(self):
        report = oracle_metrics(reference_city_scenario())
        assert report.streetlight_gap_mean_m == pytest.approx(165.0)
        assert report.defective_sign_pct == pytest.approx(37.5)
        assert report.pothole_stretch_pct == pytest.approx(4.0)
        assert report.helmet_violation_pct == pytest.approx(45.9)
        assert report.lane_no_marking_pct == pytest.approx(60.0)
        assert report.sign_visibility_mean_m == pytest.approx(30.0)


class TestScene:
    def test_no_noise_full_coverage(self):
        spec = SceneSpec(
            n_frames=10,
            objects=(SceneObject(DetectionClass.POTHOLE, 10, 10, 2, 0),),
        )
        frames = generate_scene(spec)
        assert len(frames) == 10
        assert all(len(dets) == 1 for _, dets in frames)

    def test_dropout_capped(self):
        spec = SceneSpec(
            n_frames=200,
            objects=(SceneObject(DetectionClass.POTHOLE, 10, 10, 1, 0),),
            miss_rate=0.3, max_consecutive_misses=2, seed=7,
        )
        frames = generate_scene(spec)
        run = 0
        worst = 0
        for _, dets in frames:
            if dets:
                run = 0
            else:
                run += 1
                worst = max(worst, run)
        assert worst <= 2
