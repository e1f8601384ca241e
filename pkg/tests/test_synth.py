import math

import numpy as np
import pytest

from trajlab.errors import ParseError, ValidationError
from trajlab.geometry import Polyline, arc_length, point_to_polyline
from trajlab.ingest import scene_to_dict
from trajlab.synth import (
    Bundle,
    SynthSpec,
    generate,
    parse_synth_spec,
    write_ground_truth,
)

WE = Polyline(((40.0, 180.0), (600.0, 180.0)))  # 560 px


class TestBundleValidation:
    def test_negative_count(self):
        with pytest.raises(ValidationError):
            Bundle("b", WE, -1)

    def test_negative_sigma(self):
        with pytest.raises(ValidationError):
            Bundle("b", WE, 1, sigma=-0.5)

    def test_dwell_fraction_range(self):
        with pytest.raises(ValidationError):
            Bundle("b", WE, 1, dwell=(1.5, 3.0))
        with pytest.raises(ValidationError):
            Bundle("b", WE, 1, dwell=(0.5, 0.0))

    def test_duplicate_bundle_names(self, demo_scene):
        with pytest.raises(ValidationError, match="unique"):
            SynthSpec(demo_scene, (Bundle("b", WE, 1), Bundle("b", WE, 2)))


class TestGenerate:
    def test_noise_free_lies_on_polyline(self, demo_scene):
        tset, _ = generate(SynthSpec(demo_scene, (Bundle("we", WE, 3, sigma=0.0),)))
        for traj in tset:
            assert max(point_to_polyline((p.x, p.y), WE) for p in traj.points) == 0.0

    def test_duration_is_exact(self, demo_scene):
        tset, _ = generate(SynthSpec(demo_scene, (Bundle("we", WE, 2, sigma=3.0, speed=60.0),)))
        for traj in tset:
            # lateral noise never changes timing: duration == L / speed
            assert traj.duration == 560.0 / 60.0

    def test_dwell_adds_exact_time(self, demo_scene):
        plain = Bundle("a", WE, 1, speed=56.0)
        dwelling = Bundle("b", WE, 1, speed=56.0, dwell=(0.5, 20.0))
        tset, _ = generate(SynthSpec(demo_scene, (plain, dwelling)))
        t_plain = tset.get("a-00000").duration
        t_dwell = tset.get("b-00000").duration
        assert t_plain == 10.0
        assert t_dwell == 30.0

    def test_dwell_repeats_anchor_point(self, demo_scene):
        tset, _ = generate(SynthSpec(demo_scene, (Bundle("b", WE, 1, speed=56.0, dwell=(0.5, 2.0)),)))
        traj = tset.get("b-00000")
        xy = [(p.x, p.y) for p in traj.points]
        midpoint_hits = sum(1 for q in xy if q == (320.0, 180.0))
        assert midpoint_hits >= 2  # arrival sample plus injected dwell samples

    def test_endpoints_at_polyline_ends(self, demo_scene):
        tset, _ = generate(SynthSpec(demo_scene, (Bundle("we", WE, 4, sigma=2.5),)))
        for traj in tset:
            # lateral offsets move points sideways, not along the path,
            # so endpoints stay within a few sigma of the gates
            assert math.hypot(traj.first.x - 40.0, traj.first.y - 180.0) < 10.0
            assert math.hypot(traj.last.x - 600.0, traj.last.y - 180.0) < 10.0

    def test_sample_rate_follows_fps(self, demo_scene):
        tset, _ = generate(SynthSpec(demo_scene, (Bundle("we", WE, 1, speed=56.0),)))
        traj = tset.get("we-00000")
        assert len(traj) == int(10.0 * demo_scene.fps) + 1
        dt = np.diff(traj.times)
        assert np.allclose(dt, dt[0])

    def test_deterministic_across_calls(self, demo_scene):
        spec = SynthSpec(demo_scene, (Bundle("we", WE, 5, sigma=2.0),), seed=42)
        t1, g1 = generate(spec)
        t2, g2 = generate(spec)
        assert g1 == g2
        for a, b in zip(t1, t2):
            assert a.id == b.id
            assert a.xy.tobytes() == b.xy.tobytes()
            assert a.times.tobytes() == b.times.tobytes()

    def test_seed_changes_noise(self, demo_scene):
        b = (Bundle("we", WE, 2, sigma=2.0),)
        t1, _ = generate(SynthSpec(demo_scene, b, seed=1))
        t2, _ = generate(SynthSpec(demo_scene, b, seed=2))
        assert t1.get("we-00000").xy.tobytes() != t2.get("we-00000").xy.tobytes()

    def test_counts_and_ids(self, demo_scene):
        tset, gt = generate(SynthSpec(demo_scene, (Bundle("x", WE, 3), Bundle("y", WE, 2, compliant=False))))
        assert len(tset) == 5
        assert gt.members("x") == ("x-00000", "x-00001", "x-00002")
        assert gt.bundle_of("y-00001") == "y"
        assert gt.is_compliant("x-00000") and not gt.is_compliant("y-00000")

    def test_lateral_noise_magnitude(self, demo_scene):
        # |offset| of a centered Gaussian has mean sigma * sqrt(2/pi)
        sigma = 2.0
        tset, _ = generate(SynthSpec(demo_scene, (Bundle("we", WE, 100, sigma=sigma),), seed=3))
        devs = []
        for traj in tset:
            for p in traj.points:
                devs.append(point_to_polyline((p.x, p.y), WE))
        expected = sigma * math.sqrt(2.0 / math.pi)
        assert abs(np.mean(devs) - expected) / expected < 0.15

    def test_zero_count_bundle(self, demo_scene):
        tset, gt = generate(SynthSpec(demo_scene, (Bundle("none", WE, 0), Bundle("we", WE, 1))))
        assert len(tset) == 1
        assert gt.members("none") == ()


class TestParseSynthSpec:
    def doc(self, scene):
        return {
            "scene": scene_to_dict(scene),
            "seed": 5,
            "bundles": [
                {"name": "main", "designed_path": "W->E", "count": 4, "sigma": 1.5},
                {"name": "cut", "polyline": [[320, 40], [600, 180]], "count": 2, "speed": 80},
            ],
        }

    def test_inline_scene(self, demo_scene):
        spec = parse_synth_spec(self.doc(demo_scene))
        assert spec.seed == 5
        assert spec.bundles[0].polyline == demo_scene.paths_between("W", "E")[0].polyline
        assert spec.bundles[0].compliant is True
        assert spec.bundles[1].compliant is False  # free polyline defaults off-design
        assert spec.bundles[1].speed == 80.0

    def test_scene_path_resolved_relative(self, tmp_path, demo_scene, demo_scene_path):
        import json
        import shutil

        shutil.copy(demo_scene_path, tmp_path / "scene.json")
        doc = self.doc(demo_scene)
        doc["scene"] = "scene.json"
        p = tmp_path / "gen.json"
        p.write_text(json.dumps(doc))
        spec = parse_synth_spec(p)
        assert spec.scene.resolution == (640, 360)

    def test_unknown_designed_path(self, demo_scene):
        doc = self.doc(demo_scene)
        doc["bundles"][0]["designed_path"] = "E->W"
        with pytest.raises(ParseError, match="E->W"):
            parse_synth_spec(doc)

    def test_exactly_one_geometry_source(self, demo_scene):
        doc = self.doc(demo_scene)
        doc["bundles"][0]["polyline"] = [[0, 0], [1, 1]]
        with pytest.raises(ParseError, match="exactly one"):
            parse_synth_spec(doc)

    def test_compliant_override(self, demo_scene):
        doc = self.doc(demo_scene)
        doc["bundles"][0]["compliant"] = False
        spec = parse_synth_spec(doc)
        assert spec.bundles[0].compliant is False

    def test_missing_keys(self):
        with pytest.raises(ParseError, match="scene"):
            parse_synth_spec({"bundles": []})


class TestWriteGroundTruth:
    def test_format(self, tmp_path, demo_scene):
        _, gt = generate(SynthSpec(demo_scene, (Bundle("x", WE, 2), Bundle("y", WE, 1, compliant=False))))
        p = tmp_path / "gt.csv"
        write_ground_truth(gt, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "traj_id,bundle,compliant"
        assert lines[1] == "x-00000,x,1"
        assert lines[-1] == "y-00000,y,0"
