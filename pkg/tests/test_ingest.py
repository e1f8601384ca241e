import json

import pytest

from trajlab.errors import ParseError, ValidationError
from trajlab.ingest import (
    GATE_SNAP_DEFAULT,
    REFERENCE_RESOLUTION,
    DesignedPath,
    Gate,
    SceneSpec,
    Zone,
    normalize,
    parse_scene,
    parse_trajectories,
    scale_factor,
    scene_to_dict,
    write_trajectories,
)
from trajlab.geometry import Polyline

from conftest import make_traj


def minimal_scene_doc():
    return {
        "resolution": [640, 360],
        "fps": 30,
        "gates": [
            {"name": "W", "x": 40, "y": 180, "kind": "both"},
            {"name": "E", "x": 600, "y": 180, "kind": "both"},
        ],
        "designed_paths": [
            {"source": "W", "destination": "E", "polyline": [[40, 180], [600, 180]]}
        ],
        "forbidden_zones": [
            {"name": "median", "polygon": [[300, 100], [340, 100], [340, 140], [300, 140], [300, 100]]}
        ],
        "signal_lines": [[[310, 60], [330, 60]]],
    }


class TestGate:
    def test_valid_kinds(self):
        for kind in ("entry", "exit", "both"):
            assert Gate("g", 1.0, 2.0, kind).kind == kind

    def test_bad_kind(self):
        with pytest.raises(ValidationError, match="kind"):
            Gate("g", 1.0, 2.0, "portal")


class TestZone:
    def test_needs_simple_polygon(self):
        with pytest.raises(ValidationError):
            Zone("z", ((0, 0), (4, 4), (4, 0), (0, 4)))

    def test_needs_three_vertices(self):
        with pytest.raises(ValidationError):
            Zone("z", ((0, 0), (4, 0)))


class TestDesignedPath:
    def test_name(self):
        p = DesignedPath("A", "B", Polyline(((0, 0), (1, 1))))
        assert p.name == "A->B"


class TestSceneSpec:
    def test_duplicate_gate_names(self):
        with pytest.raises(ValidationError, match="duplicate"):
            SceneSpec((640, 360), 30.0, (Gate("g", 0, 0, "both"), Gate("g", 1, 1, "both")))

    def test_unknown_gate_reference(self):
        path = DesignedPath("A", "Z", Polyline(((0, 0), (1, 1))))
        with pytest.raises(ValidationError, match="'Z'"):
            SceneSpec((640, 360), 30.0, (Gate("A", 0, 0, "both"),), (path,))

    def test_paths_between(self):
        spec = parse_scene(minimal_scene_doc())
        assert len(spec.paths_between("W", "E")) == 1
        assert spec.paths_between("E", "W") == ()

    def test_gate_lookup(self):
        spec = parse_scene(minimal_scene_doc())
        assert spec.gate("W").xy == (40.0, 180.0)
        with pytest.raises(ValidationError, match="unknown gate"):
            spec.gate("Q")


class TestParseScene:
    def test_round_trip(self, tmp_path):
        doc = minimal_scene_doc()
        p = tmp_path / "scene.json"
        p.write_text(json.dumps(doc))
        spec = parse_scene(p)
        assert spec.resolution == (640, 360)
        assert spec.fps == 30.0
        assert len(spec.gates) == 2
        assert len(spec.forbidden_zones) == 1
        assert len(spec.signal_lines) == 1
        # serialization reproduces an equivalent scene
        assert parse_scene(scene_to_dict(spec)) == spec

    def test_unknown_top_level_key(self):
        doc = minimal_scene_doc()
        doc["cameras"] = []
        with pytest.raises(ParseError, match="cameras"):
            parse_scene(doc)

    def test_missing_required_key(self):
        doc = minimal_scene_doc()
        del doc["fps"]
        with pytest.raises(ParseError, match="fps"):
            parse_scene(doc)

    def test_open_zone_polygon_rejected(self):
        doc = minimal_scene_doc()
        doc["forbidden_zones"][0]["polygon"] = [[300, 100], [340, 100], [340, 140]]
        with pytest.raises(ParseError, match="closed"):
            parse_scene(doc)

    def test_path_far_from_gate_rejected(self):
        doc = minimal_scene_doc()
        doc["designed_paths"][0]["polyline"] = [[40, 260], [600, 180]]
        with pytest.raises(ParseError, match="snap"):
            parse_scene(doc)

    def test_gate_snap_is_tunable(self):
        doc = minimal_scene_doc()
        doc["designed_paths"][0]["polyline"] = [[40, 200], [600, 180]]  # 20 px off
        with pytest.raises(ParseError):
            parse_scene(doc)
        spec = parse_scene(doc, gate_snap=25.0)
        assert spec.designed_paths[0].polyline.vertices[0] == (40.0, 200.0)

    def test_invalid_json_file(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ParseError, match="invalid JSON"):
            parse_scene(p)

    def test_demo_scenes_parse(self, demo_scene, eight_gate_scene):
        assert len(demo_scene.designed_paths) == 3
        assert len(eight_gate_scene.gates) == 8
        assert len(eight_gate_scene.designed_paths) == 12
        wants_stops = [p for p in eight_gate_scene.designed_paths if p.required_stops > 0]
        assert wants_stops, "expected at least one designed path with required stops"


class TestScaleFactor:
    def test_reference_to_reference(self):
        assert scale_factor(REFERENCE_RESOLUTION, REFERENCE_RESOLUTION) == 1.0

    def test_uniform_double(self):
        assert scale_factor((640, 360), (1280, 720)) == 2.0

    def test_anisotropic_mean(self):
        assert scale_factor((640, 360), (1280, 360)) == 1.5


def traj_csv(tmp_path, body, resolution="640x360", header="traj_id,frame,x,y"):
    p = tmp_path / "tracks.csv"
    p.write_text(f"#resolution={resolution}\n{header}\n{body}")
    return p


class TestParseTrajectories:
    def test_frame_conversion(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0,10,20\na,15,11,21\na,30,12,22\n")
        tset = parse_trajectories(p, demo_scene)
        traj = tset.get("a")
        assert traj.times.tolist() == [0.0, 0.5, 1.0]  # 30 fps
        assert traj.xy[0].tolist() == [10.0, 20.0]

    def test_time_column(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0.0,10,20\na,0.4,11,21\n", header="traj_id,t,x,y")
        traj = parse_trajectories(p, demo_scene).get("a")
        assert traj.times.tolist() == [0.0, 0.4]

    def test_frame_and_time_agree(self, tmp_path, demo_scene):
        by_frame = traj_csv(tmp_path, "a,0,10,20\na,30,11,21\n")
        t1 = parse_trajectories(by_frame, demo_scene).get("a")
        by_time = tmp_path / "t.csv"
        by_time.write_text("#resolution=640x360\ntraj_id,t,x,y\na,0.0,10,20\na,1.0,11,21\n")
        t2 = parse_trajectories(by_time, demo_scene).get("a")
        assert t1.times.tolist() == t2.times.tolist()
        assert t1.xy.tolist() == t2.xy.tolist()

    def test_resolution_rescaled_to_scene(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0,1280,720\na,1,640,360\n", resolution="1280x720")
        traj = parse_trajectories(p, demo_scene).get("a")
        assert traj.xy.tolist() == [[640.0, 360.0], [320.0, 180.0]]

    def test_unsorted_rows_sorted(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,30,2,2\na,0,1,1\n")
        traj = parse_trajectories(p, demo_scene).get("a")
        assert traj.times.tolist() == [0.0, 1.0]
        assert traj.xy[0].tolist() == [1.0, 1.0]

    def test_first_appearance_order(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "b,0,1,1\na,0,2,2\nb,1,1,2\na,1,2,3\n")
        assert parse_trajectories(p, demo_scene).ids == ("b", "a")

    def test_missing_resolution_comment(self, tmp_path, demo_scene):
        p = tmp_path / "tracks.csv"
        p.write_text("traj_id,frame,x,y\na,0,1,1\n")
        with pytest.raises(ParseError, match="#resolution"):
            parse_trajectories(p, demo_scene)

    def test_unknown_header(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0,1,1\n", header="id,frame,x,y")
        with pytest.raises(ParseError, match="header"):
            parse_trajectories(p, demo_scene)

    def test_malformed_row_reports_line(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0,1,1\na,zero,2,2\n")
        with pytest.raises(ParseError) as exc:
            parse_trajectories(p, demo_scene)
        assert exc.value.line == 4
        assert "malformed" in str(exc.value)

    def test_wrong_field_count_reports_line(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0,1\n")
        with pytest.raises(ParseError) as exc:
            parse_trajectories(p, demo_scene)
        assert exc.value.line == 3

    def test_duplicate_timestamp_is_error(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0,1,1\na,0,2,2\n")
        with pytest.raises(ParseError, match="collision"):
            parse_trajectories(p, demo_scene)

    def test_blank_lines_skipped(self, tmp_path, demo_scene):
        p = traj_csv(tmp_path, "a,0,1,1\n\na,1,2,2\n")
        assert len(parse_trajectories(p, demo_scene).get("a")) == 2


class TestWriteRoundTrip:
    def test_exact_round_trip(self, tmp_path, demo_scene):
        trajs = (
            make_traj("a", [(0.125, 0.5), (10.0, 20.0)], dt=1 / 3),
            make_traj("b", [(7.1, 8.2), (9.3, 10.4), (11.5, 12.6)]),
        )
        from trajlab.geometry import TrajectorySet

        tset = TrajectorySet(trajs, (640, 360))
        p = tmp_path / "out.csv"
        write_trajectories(tset, p)
        back = parse_trajectories(p, demo_scene)
        assert back.ids == tset.ids
        for tid in tset.ids:
            assert back.get(tid).xy.tolist() == tset.get(tid).xy.tolist()
            assert back.get(tid).times.tolist() == tset.get(tid).times.tolist()


class TestNormalize:
    def test_identity_returns_same_object(self):
        from trajlab.geometry import TrajectorySet

        tset = TrajectorySet((make_traj("a", [(0, 0), (1, 1)]),), (640, 360))
        assert normalize(tset, (640, 360)) is tset

    def test_scaling(self):
        from trajlab.geometry import TrajectorySet

        tset = TrajectorySet((make_traj("a", [(10, 10), (20, 20)]),), (640, 360))
        out = normalize(tset, (1280, 720))
        assert out.resolution == (1280, 720)
        assert out.get("a").xy.tolist() == [[20.0, 20.0], [40.0, 40.0]]
        assert out.get("a").times.tolist() == tset.get("a").times.tolist()

    def test_bad_target(self):
        from trajlab.geometry import TrajectorySet

        tset = TrajectorySet((make_traj("a", [(0, 0), (1, 1)]),), (640, 360))
        with pytest.raises(ValidationError):
            normalize(tset, (0, 360))


def test_gate_snap_default_value():
    assert GATE_SNAP_DEFAULT == 15.0
