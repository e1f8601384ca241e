"""Parsing of trajectory exports and scene design files.

Trajectory files are delimiter-separated values with a resolution comment:

    #resolution=1280x720
    traj_id,frame,x,y          (or: traj_id,t,x,y)
    a17,0,410.5,233.0
    ...

Scene design files are JSON documents describing the reference resolution,
frame rate, gates (legal entry/exit points), designed paths, forbidden
zones and optional signal lines. All pixel-valued analysis parameters are
interpreted at the scene's reference resolution.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import Polyline, TrackPoint, Trajectory, TrajectorySet, euclidean, polygon_is_simple

# Reference resolution at which all default pixel parameters are stated.
REFERENCE_RESOLUTION = (640, 360)

# Default radius (px at reference resolution) for snapping endpoints to gates
# and for validating that designed paths actually start/end at their gates.
GATE_SNAP_DEFAULT = 15.0

GATE_KINDS = ("entry", "exit", "both")

_HEADER_FRAME = ["traj_id", "frame", "x", "y"]
_HEADER_TIME = ["traj_id", "t", "x", "y"]


@dataclass(frozen=True)
class Gate:
    """A named legal entry/exit point on the scene boundary."""

    name: str
    x: float
    y: float
    kind: str = "both"

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"gate {self.name!r}: kind must be one of {GATE_KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"gate {self.name!r}: coordinates must be finite")

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class DesignedPath:
    """The planner-intended route from a source gate to a destination gate."""

    source: str
    destination: str
    polyline: Polyline
    required_stops: int = 0

    def __post_init__(self):
        if self.required_stops < 0:
            raise ValidationError("required_stops must be >= 0")

    @property
    def name(self) -> str:
        return f"{self.source}->{self.destination}"


@dataclass(frozen=True)
class Zone:
    """A named simple polygon marking space where cyclists must not be."""

    name: str
    ring: tuple  # closed ring, stored without the repeated last vertex

    def __post_init__(self):
        ring = tuple((float(x), float(y)) for x, y in self.ring)
        object.__setattr__(self, "ring", ring)
        if len(ring) < 3:
            raise ValidationError(f"zone {self.name!r}: polygon needs >= 3 distinct vertices")
        if not polygon_is_simple(ring):
            raise ValidationError(f"zone {self.name!r}: polygon must be simple (non-self-intersecting)")


@dataclass(frozen=True)
class SceneSpec:
    """Everything the analysis needs to know about one camera scene."""

    resolution: tuple[int, int]
    fps: float
    gates: tuple[Gate, ...] = ()
    designed_paths: tuple[DesignedPath, ...] = ()
    forbidden_zones: tuple[Zone, ...] = ()
    signal_lines: tuple[Polyline, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "resolution", (int(self.resolution[0]), int(self.resolution[1])))
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "designed_paths", tuple(self.designed_paths))
        object.__setattr__(self, "forbidden_zones", tuple(self.forbidden_zones))
        object.__setattr__(self, "signal_lines", tuple(self.signal_lines))
        w, h = self.resolution
        if w <= 0 or h <= 0:
            raise ValidationError(f"resolution must be positive, got {self.resolution}")
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise ValidationError(f"fps must be positive and finite, got {self.fps}")
        names = [g.name for g in self.gates]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValidationError(f"duplicate gate names: {sorted(dupes)}")
        known = set(names)
        for p in self.designed_paths:
            for ref in (p.source, p.destination):
                if ref not in known:
                    raise ValidationError(f"designed path {p.name!r} references unknown gate {ref!r}")

    def gate(self, name: str) -> Gate:
        for g in self.gates:
            if g.name == name:
                return g
        raise ValidationError(f"unknown gate {name!r}")

    def paths_between(self, source: str, destination: str) -> tuple[DesignedPath, ...]:
        return tuple(p for p in self.designed_paths if p.source == source and p.destination == destination)

    def check_path_endpoints(self, gate_snap: float = GATE_SNAP_DEFAULT) -> None:
        """Designed paths must start/end within `gate_snap` px of their gates."""
        for p in self.designed_paths:
            src, dst = self.gate(p.source), self.gate(p.destination)
            d0 = euclidean(p.polyline.vertices[0], src.xy)
            d1 = euclidean(p.polyline.vertices[-1], dst.xy)
            if d0 > gate_snap:
                raise ValidationError(
                    f"designed path {p.name!r} starts {d0:.1f} px from gate {p.source!r} (snap radius {gate_snap})"
                )
            if d1 > gate_snap:
                raise ValidationError(
                    f"designed path {p.name!r} ends {d1:.1f} px from gate {p.destination!r} (snap radius {gate_snap})"
                )


def scale_factor(source: tuple[int, int], target: tuple[int, int]) -> float:
    """Mean of the x/y linear factors taking `source` resolution to `target`.

    Used to rescale pixel-valued parameters quoted at one resolution for use
    at another. Anisotropic rescaling distorts the metric, so callers should
    log when the two per-axis factors differ.
    """
    return (target[0] / source[0] + target[1] / source[1]) / 2.0


def _scene_from_dict(doc: dict, *, path: str | None = None, gate_snap: float = GATE_SNAP_DEFAULT) -> SceneSpec:
    def fail(msg: str):
        raise ParseError(msg, path=path)

    if not isinstance(doc, dict):
        fail("design file must be a JSON object")
    allowed = {"resolution", "fps", "gates", "designed_paths", "forbidden_zones", "signal_lines", "name", "notes"}
    unknown = set(doc) - allowed
    if unknown:
        fail(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("resolution", "fps", "gates", "designed_paths", "forbidden_zones"):
        if key not in doc:
            fail(f"missing required key {key!r}")

    try:
        resolution = (int(doc["resolution"][0]), int(doc["resolution"][1]))
    except (TypeError, ValueError, IndexError):
        fail(f"resolution must be [width, height], got {doc['resolution']!r}")

    gates = []
    for g in doc["gates"]:
        try:
            gates.append(Gate(str(g["name"]), float(g["x"]), float(g["y"]), str(g.get("kind", "both"))))
        except (KeyError, TypeError, ValueError) as e:
            fail(f"bad gate entry {g!r}: {e}")

    paths = []
    for p in doc["designed_paths"]:
        try:
            poly = Polyline(tuple((float(x), float(y)) for x, y in p["polyline"]))
            paths.append(
                DesignedPath(str(p["source"]), str(p["destination"]), poly, int(p.get("required_stops", 0)))
            )
        except ValidationError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            fail(f"bad designed path entry: {e}")

    zones = []
    for z in doc["forbidden_zones"]:
        try:
            ring = [(float(x), float(y)) for x, y in z["polygon"]]
        except (KeyError, TypeError, ValueError) as e:
            fail(f"bad forbidden zone entry: {e}")
        if len(ring) < 4 or ring[0] != ring[-1]:
            fail(f"zone {z.get('name')!r}: polygon must be explicitly closed (first vertex repeated last)")
        zones.append(Zone(str(z["name"]), tuple(ring[:-1])))

    signals = []
    for s in doc.get("signal_lines", []):
        try:
            signals.append(Polyline(tuple((float(x), float(y)) for x, y in s)))
        except (TypeError, ValueError) as e:
            fail(f"bad signal line entry: {e}")

    try:
        spec = SceneSpec(resolution, float(doc["fps"]), tuple(gates), tuple(paths), tuple(zones), tuple(signals))
        spec.check_path_endpoints(gate_snap)
    except ValidationError as e:
        raise ParseError(str(e), path=path) from e
    return spec


def parse_scene(source, *, gate_snap: float = GATE_SNAP_DEFAULT) -> SceneSpec:
    """Parse and validate a scene design file (path or already-loaded dict)."""
    if isinstance(source, dict):
        return _scene_from_dict(source, gate_snap=gate_snap)
    path = Path(source)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}", path=str(path)) from e
    except OSError as e:
        raise ParseError(f"cannot read file: {e}", path=str(path)) from e
    return _scene_from_dict(doc, path=str(path), gate_snap=gate_snap)


def scene_to_dict(spec: SceneSpec) -> dict:
    """Serialize a SceneSpec to the design-file JSON structure."""
    return {
        "resolution": [spec.resolution[0], spec.resolution[1]],
        "fps": spec.fps,
        "gates": [{"name": g.name, "x": g.x, "y": g.y, "kind": g.kind} for g in spec.gates],
        "designed_paths": [
            {
                "source": p.source,
                "destination": p.destination,
                "required_stops": p.required_stops,
                "polyline": [[x, y] for x, y in p.polyline.vertices],
            }
            for p in spec.designed_paths
        ],
        "forbidden_zones": [
            {"name": z.name, "polygon": [[x, y] for x, y in z.ring] + [[z.ring[0][0], z.ring[0][1]]]}
            for z in spec.forbidden_zones
        ],
        "signal_lines": [[[x, y] for x, y in s.vertices] for s in spec.signal_lines],
    }


def parse_trajectories(source, spec: SceneSpec, *, margin: float = 0.1) -> TrajectorySet:
    """Parse a trajectory file, normalizing to the scene's reference resolution.

    Frame indices are converted to seconds with the scene frame rate;
    coordinates are scaled from the file's declared resolution to
    `spec.resolution` by independent x/y linear factors. Rows may arrive
    unsorted; points are sorted by time within each trajectory. Duplicate
    (traj_id, time) pairs are a hard error: they indicate tracker id
    collisions rather than harmless repetition.
    """
    path = Path(source)
    with open(path, encoding="utf-8", newline="") as fh:
        return _parse_trajectory_stream(fh, spec, str(path), margin)


def _parse_trajectory_stream(fh, spec: SceneSpec, path: str, margin: float) -> TrajectorySet:
    line_no = 0

    def next_line():
        nonlocal line_no
        while True:
            raw = fh.readline()
            line_no += 1
            if raw == "":
                return None
            if raw.strip():
                return raw.rstrip("\n").rstrip("\r")

    res_line = next_line()
    if res_line is None or not res_line.startswith("#resolution="):
        raise ParseError("expected '#resolution=WxH' comment before the header", path=path, line=line_no)
    try:
        w_str, h_str = res_line[len("#resolution=") :].split("x")
        src_w, src_h = int(w_str), int(h_str)
        if src_w <= 0 or src_h <= 0:
            raise ValueError
    except ValueError:
        raise ParseError(f"malformed resolution comment {res_line!r}", path=path, line=line_no) from None

    header_line = next_line()
    if header_line is None:
        raise ParseError("missing header row", path=path, line=line_no)
    header = [c.strip() for c in header_line.split(",")]
    if header == _HEADER_FRAME:
        time_col = False
    elif header == _HEADER_TIME:
        time_col = True
    elif "frame" in header and "t" in header:
        raise ParseError("mixed frame/time columns: exactly one of 'frame' or 't' may be present", path=path, line=line_no)
    else:
        raise ParseError(
            f"unknown header {header_line!r}; expected 'traj_id,frame,x,y' or 'traj_id,t,x,y'", path=path, line=line_no
        )

    order: list[str] = []
    rows: dict[str, list[tuple[float, float, float]]] = {}
    sx = spec.resolution[0] / src_w
    sy = spec.resolution[1] / src_h
    reader = csv.reader(fh)
    for rec in reader:
        line_no += 1
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue
        if len(rec) != 4:
            raise ParseError(f"expected 4 fields, got {len(rec)}", path=path, line=line_no)
        traj_id = rec[0].strip()
        if not traj_id:
            raise ParseError("empty traj_id", path=path, line=line_no)
        try:
            if time_col:
                t = float(rec[1])
                if not (math.isfinite(t) and t >= 0):
                    raise ValueError
            else:
                frame = int(rec[1])
                if frame < 0:
                    raise ValueError
                t = frame / spec.fps
            x = float(rec[2])
            y = float(rec[3])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError
        except ValueError:
            raise ParseError(f"malformed row {rec!r}", path=path, line=line_no) from None
        if traj_id not in rows:
            rows[traj_id] = []
            order.append(traj_id)
        rows[traj_id].append((t, x * sx, y * sy))

    trajectories = []
    for traj_id in order:
        pts = sorted(rows[traj_id])
        for (ta, _, _), (tb, _, _) in zip(pts, pts[1:]):
            if ta == tb:
                raise ParseError(
                    f"duplicate timestamp {ta} for trajectory {traj_id!r} (tracker id collision?)", path=path
                )
        trajectories.append(Trajectory(traj_id, tuple(TrackPoint(x, y, t) for t, x, y in pts)))
    return TrajectorySet(tuple(trajectories), spec.resolution, margin=margin)


def write_trajectories(tset: TrajectorySet, path) -> None:
    """Write a TrajectorySet in the standard trajectory format (time column)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"#resolution={tset.resolution[0]}x{tset.resolution[1]}\n")
        fh.write("traj_id,t,x,y\n")
        for traj in tset:
            for p in traj.points:
                fh.write(f"{traj.id},{p.t!r},{p.x!r},{p.y!r}\n")


def normalize(tset: TrajectorySet, target: tuple[int, int]) -> TrajectorySet:
    """Rescale all coordinates to `target` resolution; timestamps untouched."""
    tw, th = int(target[0]), int(target[1])
    if tw <= 0 or th <= 0:
        raise ValidationError(f"target resolution must be positive, got {target}")
    if (tw, th) == tset.resolution:
        return tset
    fx = tw / tset.resolution[0]
    fy = th / tset.resolution[1]
    scaled = tuple(
        Trajectory(t.id, tuple(TrackPoint(p.x * fx, p.y * fy, p.t) for p in t.points)) for t in tset
    )
    return TrajectorySet(scaled, (tw, th), margin=tset.margin)
