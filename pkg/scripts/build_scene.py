#!/usr/bin/env python3
"""Generate the scene design files committed under scenes/.

Two scenes are produced:

* demo_intersection.json: a compact four-gate intersection used by the
  test suite and the synthetic demo. Three designed paths (W->E, N->S
  and the two-leg corner route N->E) plus one forbidden zone and one
  signal line.

* dybbolsbro_like.json: an eight-gate, twelve-path layout shaped like
  the four-arm bicycle intersection the analysis was built around, with
  Copenhagen-left stop counts on the four left turns (two stops on E->S,
  one on S->W, N->E and W->N). Gate positions and polylines are schematic
  pixel placements at 640x360, not measured from the original camera;
  rerun against real footage requires recalibrating them.

Deterministic: running this script twice produces identical files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trajlab.ingest import parse_scene, scene_to_dict  # noqa: E402


def demo_intersection() -> dict:
    return {
        "name": "demo_intersection",
        "resolution": [640, 360],
        "fps": 30.0,
        "gates": [
            {"name": "N", "x": 320.0, "y": 40.0, "kind": "both"},
            {"name": "W", "x": 40.0, "y": 180.0, "kind": "both"},
            {"name": "E", "x": 600.0, "y": 180.0, "kind": "both"},
            {"name": "S", "x": 320.0, "y": 320.0, "kind": "both"},
        ],
        "designed_paths": [
            {"source": "W", "destination": "E", "required_stops": 0,
             "polyline": [[40.0, 180.0], [600.0, 180.0]]},
            {"source": "N", "destination": "S", "required_stops": 0,
             "polyline": [[320.0, 40.0], [320.0, 320.0]]},
            {"source": "N", "destination": "E", "required_stops": 0,
             "polyline": [[320.0, 40.0], [320.0, 180.0], [600.0, 180.0]]},
        ],
        "forbidden_zones": [
            {"name": "vehicle_lane",
             "polygon": [[80.0, 260.0], [200.0, 260.0], [200.0, 330.0], [80.0, 330.0], [80.0, 260.0]]},
        ],
        "signal_lines": [[[300.0, 70.0], [340.0, 70.0]]],
    }


# Arm layout for the eight-gate scene: entry/exit gate per arm, and
# whether traffic enters moving vertically or horizontally.
_ARMS = {
    "N": {"in": (300.0, 30.0), "out": (340.0, 30.0), "vertical": True},
    "S": {"in": (360.0, 330.0), "out": (300.0, 330.0), "vertical": True},
    "E": {"in": (610.0, 200.0), "out": (610.0, 150.0), "vertical": False},
    "W": {"in": (30.0, 150.0), "out": (30.0, 200.0), "vertical": False},
}

# Copenhagen-left stop counts; every other movement has none.
_STOPS = {("S", "W"): 1, ("N", "E"): 1, ("W", "N"): 1, ("E", "S"): 2}


def _route(src_arm: str, dst_arm: str) -> list[list[float]]:
    sx, sy = _ARMS[src_arm]["in"]
    dx, dy = _ARMS[dst_arm]["out"]
    if _ARMS[src_arm]["vertical"] == _ARMS[dst_arm]["vertical"]:
        # Straight through (or U-shaped across; only straights occur here).
        mid = [(sx + dx) / 2.0, (sy + dy) / 2.0]
        return [[sx, sy], mid, [dx, dy]]
    corner = [sx, dy] if _ARMS[src_arm]["vertical"] else [dx, sy]
    return [[sx, sy], corner, [dx, dy]]


def dybbolsbro_like() -> dict:
    gates = []
    for arm in ("N", "S", "E", "W"):
        gx, gy = _ARMS[arm]["in"]
        gates.append({"name": f"{arm}_in", "x": gx, "y": gy, "kind": "entry"})
        gx, gy = _ARMS[arm]["out"]
        gates.append({"name": f"{arm}_out", "x": gx, "y": gy, "kind": "exit"})
    paths = []
    for src in ("N", "S", "E", "W"):
        for dst in ("N", "S", "E", "W"):
            if src == dst:
                continue
            paths.append(
                {
                    "source": f"{src}_in",
                    "destination": f"{dst}_out",
                    "required_stops": _STOPS.get((src, dst), 0),
                    "polyline": _route(src, dst),
                }
            )
    return {
        "name": "dybbolsbro_like",
        "resolution": [640, 360],
        "fps": 30.0,
        "gates": gates,
        "designed_paths": paths,
        "forbidden_zones": [
            # Vehicles-only side of the southern street.
            {"name": "south_street_vehicle_side",
             "polygon": [[380.0, 250.0], [560.0, 250.0], [560.0, 355.0], [380.0, 355.0], [380.0, 250.0]]},
        ],
        "signal_lines": [
            [[280.0, 60.0], [360.0, 60.0]],
            [[280.0, 300.0], [360.0, 300.0]],
        ],
    }


def main() -> int:
    out_dir = Path(__file__).resolve().parent.parent / "scenes"
    out_dir.mkdir(exist_ok=True)
    for name, doc in (("demo_intersection", demo_intersection()), ("dybbolsbro_like", dybbolsbro_like())):
        spec = parse_scene(doc)  # validate before writing
        payload = {"name": name, **scene_to_dict(spec)}
        path = out_dir / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"wrote {path} ({len(spec.gates)} gates, {len(spec.designed_paths)} paths)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
