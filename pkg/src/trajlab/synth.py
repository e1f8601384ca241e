"""Synthetic trajectory generation with known ground truth.

Bundles of trajectories are sampled along reference polylines with
lateral-only Gaussian noise (perpendicular to the local direction), so
endpoints stay near their gates and endpoint clustering ground truth
stays clean. Timestamps are exact: a trajectory's time on screen equals
arc_length/speed plus any dwell, independent of the noise draw.

Randomness comes from numpy's default_rng (the PCG64 generator). The
generator algorithm is part of the contract: a given (spec, seed) pair
produces the same trajectories on any platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import Polyline, TrackPoint, Trajectory, TrajectorySet, cumulative_arclength
from .ingest import SceneSpec, parse_scene


@dataclass(frozen=True)
class Bundle:
    """A group of trajectories to generate along one reference polyline."""

    name: str
    polyline: Polyline
    count: int
    sigma: float = 0.0
    speed: float = 60.0
    dwell: tuple[float, float] | None = None  # (arc-length fraction, seconds)
    compliant: bool = True

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError(f"bundle {self.name!r}: count must be >= 0")
        if self.sigma < 0:
            raise ValidationError(f"bundle {self.name!r}: sigma must be >= 0")
        if not (self.speed > 0 and math.isfinite(self.speed)):
            raise ValidationError(f"bundle {self.name!r}: speed must be positive")
        if self.dwell is not None:
            frac, seconds = self.dwell
            if not (0.0 < frac < 1.0):
                raise ValidationError(f"bundle {self.name!r}: dwell fraction must be in (0, 1)")
            if not (seconds > 0 and math.isfinite(seconds)):
                raise ValidationError(f"bundle {self.name!r}: dwell seconds must be positive")


@dataclass(frozen=True)
class SynthSpec:
    scene: SceneSpec
    bundles: tuple[Bundle, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bundles", tuple(self.bundles))
        names = [b.name for b in self.bundles]
        if len(set(names)) != len(names):
            raise ValidationError("bundle names must be unique")


@dataclass(frozen=True)
class GroundTruth:
    """traj_id -> (bundle name, intended compliance) for every generated id."""

    rows: tuple[tuple[str, str, bool], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def bundle_of(self, traj_id: str) -> str:
        return self._by_id[traj_id][0]

    def is_compliant(self, traj_id: str) -> bool:
        return self._by_id[traj_id][1]

    @property
    def _by_id(self) -> dict:
        d = self.__dict__.get("_by_id_cache")
        if d is None:
            d = {tid: (b, c) for tid, b, c in self.rows}
            object.__setattr__(self, "_by_id_cache", d)
        return d

    def members(self, bundle: str) -> tuple[str, ...]:
        return tuple(tid for tid, b, _ in self.rows if b == bundle)


def _positions(poly: Polyline, fractions: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Points at arc-length fractions, displaced laterally by offsets."""
    xy = poly.as_array
    cum = cumulative_arclength(xy)
    s = fractions * cum[-1]
    px = np.interp(s, cum, xy[:, 0])
    py = np.interp(s, cum, xy[:, 1])
    seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
    tx = xy[seg + 1, 0] - xy[seg, 0]
    ty = xy[seg + 1, 1] - xy[seg, 1]
    norm = np.sqrt(tx * tx + ty * ty)
    nx = -ty / norm
    ny = tx / norm
    return np.column_stack((px + offsets * nx, py + offsets * ny))


def _generate_one(bundle: Bundle, fps: float, rng: np.random.Generator, traj_id: str) -> Trajectory:
    xy = bundle.polyline.as_array
    total = float(cumulative_arclength(xy)[-1])
    t_move = total / bundle.speed
    n_move = max(2, int(t_move * fps) + 1)
    fractions = np.arange(n_move) / (n_move - 1)
    offsets = rng.normal(0.0, bundle.sigma, n_move) if bundle.sigma > 0 else np.zeros(n_move)
    pos = _positions(bundle.polyline, fractions, offsets)
    times = fractions * t_move

    if bundle.dwell is None:
        pts = [TrackPoint(float(x), float(y), float(t)) for (x, y), t in zip(pos, times)]
        return Trajectory(traj_id, tuple(pts))

    frac_g, d = bundle.dwell
    t_g = frac_g * t_move
    n_dwell = max(1, int(d * fps) - 1)
    anchor_off = rng.normal(0.0, bundle.sigma) if bundle.sigma > 0 else 0.0
    anchor = _positions(bundle.polyline, np.array([frac_g]), np.array([anchor_off]))[0]
    pts = []
    for (x, y), f, t in zip(pos, fractions, times):
        # Everything past the dwell location is delayed by the full dwell.
        t = float(t)
        pts.append((t + d if f > frac_g else t, float(x), float(y)))
    for m in range(1, n_dwell + 1):
        pts.append((t_g + m * (d / (n_dwell + 1)), float(anchor[0]), float(anchor[1])))
    pts.sort()
    return Trajectory(traj_id, tuple(TrackPoint(x, y, t) for t, x, y in pts))


def generate(spec: SynthSpec) -> tuple[TrajectorySet, GroundTruth]:
    """Generate all bundles; deterministic for a given (spec, seed)."""
    rng = np.random.default_rng(spec.seed)
    trajectories = []
    rows = []
    for bundle in spec.bundles:
        width = max(5, len(str(max(bundle.count - 1, 0))))
        for i in range(bundle.count):
            tid = f"{bundle.name}-{i:0{width}d}"
            trajectories.append(_generate_one(bundle, spec.scene.fps, rng, tid))
            rows.append((tid, bundle.name, bundle.compliant))
    tset = TrajectorySet(tuple(trajectories), spec.scene.resolution)
    return tset, GroundTruth(tuple(rows))


def parse_synth_spec(source) -> SynthSpec:
    """Parse a generation spec (path or dict).

    Format: {scene: <design file path or inline object>, seed: int,
    bundles: [{name, designed_path: "SRC->DST" or polyline: [[x,y],..],
    count, sigma, speed, dwell: [fraction, seconds] or null, compliant}]}.
    Bundles on a designed path default to compliant ground truth, free
    polylines to non-compliant.
    """
    if isinstance(source, dict):
        doc, path = source, None
    else:
        path = str(source)
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e}", path=path) from e
        except OSError as e:
            raise ParseError(f"cannot read file: {e}", path=path) from e
    if not isinstance(doc, dict) or "scene" not in doc or "bundles" not in doc:
        raise ParseError("generation spec needs 'scene' and 'bundles'", path=path)
    scene_src = doc["scene"]
    if isinstance(scene_src, str) and path is not None:
        scene_src = str((Path(path).parent / scene_src))
    scene = parse_scene(scene_src)

    bundles = []
    for b in doc["bundles"]:
        try:
            name = str(b["name"])
            if ("designed_path" in b) == ("polyline" in b):
                raise ParseError(f"bundle {name!r}: give exactly one of designed_path / polyline", path=path)
            if "designed_path" in b:
                ref = str(b["designed_path"])
                src, _, dst = ref.partition("->")
                matches = scene.paths_between(src, dst)
                if not matches:
                    raise ParseError(f"bundle {name!r}: no designed path {ref!r} in scene", path=path)
                poly = matches[0].polyline
                default_compliant = True
            else:
                poly = Polyline(tuple((float(x), float(y)) for x, y in b["polyline"]))
                default_compliant = False
            dwell = b.get("dwell")
            bundles.append(
                Bundle(
                    name=name,
                    polyline=poly,
                    count=int(b["count"]),
                    sigma=float(b.get("sigma", 0.0)),
                    speed=float(b.get("speed", 60.0)),
                    dwell=(float(dwell[0]), float(dwell[1])) if dwell else None,
                    compliant=bool(b.get("compliant", default_compliant)),
                )
            )
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise ParseError(f"bad bundle entry: {e}", path=path) from e
    try:
        return SynthSpec(scene, tuple(bundles), int(doc.get("seed", 0)))
    except ValidationError as e:
        raise ParseError(str(e), path=path) from e


def write_ground_truth(gt: GroundTruth, path) -> None:
    """Write `traj_id,bundle,compliant` rows."""
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        fh.write("traj_id,bundle,compliant\n")
        for tid, bundle, compliant in gt.rows:
            fh.write(f"{tid},{bundle},{int(compliant)}\n")
