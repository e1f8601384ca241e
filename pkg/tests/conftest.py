from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trajlab.geometry import Polyline, TrackPoint, Trajectory, TrajectorySet
from trajlab.ingest import parse_scene, write_trajectories
from trajlab.pipeline import RunConfig, run_pipeline
from trajlab.synth import Bundle, SynthSpec, generate

settings.register_profile(
    "deterministic", deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("deterministic")

REPO = Path(__file__).resolve().parent.parent
SCENES = REPO / "scenes"


def make_traj(traj_id: str, coords, t0: float = 0.0, dt: float = 0.1) -> Trajectory:
    """Trajectory from (x, y) pairs with evenly spaced timestamps."""
    pts = tuple(TrackPoint(float(x), float(y), t0 + i * dt) for i, (x, y) in enumerate(coords))
    return Trajectory(traj_id, pts)


def straight_traj(traj_id: str, start, end, n: int = 20, dt: float = 0.1) -> Trajectory:
    xs = np.linspace(start[0], end[0], n)
    ys = np.linspace(start[1], end[1], n)
    return make_traj(traj_id, list(zip(xs, ys)), dt=dt)


@pytest.fixture(scope="session")
def demo_scene_path() -> str:
    return str(SCENES / "demo_intersection.json")


@pytest.fixture(scope="session")
def demo_scene(demo_scene_path):
    return parse_scene(demo_scene_path)


@pytest.fixture(scope="session")
def eight_gate_scene_path() -> str:
    return str(SCENES / "dybbolsbro_like.json")


@pytest.fixture(scope="session")
def eight_gate_scene(eight_gate_scene_path):
    return parse_scene(eight_gate_scene_path)


def demo_bundles(scene, *, counts=(90, 90, 90, 30), sigma=2.0, dwell=None):
    """The standard synthetic mix: three on-design bundles plus a diagonal
    shortcut sharing endpoints with the N->E pair."""
    dp = {(p.source, p.destination): p for p in scene.designed_paths}
    shortcut = Polyline(((320.0, 40.0), (600.0, 180.0)))
    return (
        Bundle("we", dp[("W", "E")].polyline, counts[0], sigma=sigma, speed=60.0, compliant=True),
        Bundle("ns", dp[("N", "S")].polyline, counts[1], sigma=sigma, speed=60.0, compliant=True),
        Bundle("ne", dp[("N", "E")].polyline, counts[2], sigma=sigma, speed=60.0, dwell=dwell, compliant=True),
        Bundle("diag", shortcut, counts[3], sigma=sigma, speed=60.0, compliant=False),
    )


@pytest.fixture(scope="session")
def e2e_run(demo_scene, demo_scene_path, tmp_path_factory):
    """The 300-trajectory synthetic recovery run shared by several tests."""
    spec = SynthSpec(demo_scene, demo_bundles(demo_scene), seed=7)
    tset, gt = generate(spec)
    tmp = tmp_path_factory.mktemp("e2e")
    traj_path = tmp / "trajectories.csv"
    write_trajectories(tset, traj_path)
    cfg = RunConfig(
        trajectories=str(traj_path),
        scene=demo_scene_path,
        out_dir=str(tmp / "out"),
        distance_threshold=500.0,
        threads=2,
    )
    result = run_pipeline(cfg)
    return spec, tset, gt, cfg, result
