#!/usr/bin/env python3
"""Full-scale run over a real tracker export.

Expects a trajectory csv (see README for the format) covering the
four-arm bicycle intersection and runs the published-parameter
configuration: endpoint clustering at eps=8 px / min_pts=25 at the
640x360 reference resolution, the curation directives committed under
scenes/, and the compliance report. Prints the headline numbers next to
their expected values so drift is obvious.

The committed scene geometry is schematic; against real footage the
gate positions, designed paths and zone polygons in
scenes/dybbolsbro_like.json must be calibrated first, and the labels in
scenes/dybbolsbro_directives.json reviewed against the actual clusters.

Usage: python3 scripts/reproduce_dataset_run.py TRAJECTORY_CSV [out_dir]
"""

from __future__ import annotations

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from trajlab.compliance import raw_sd_query, classify_trajectories  # noqa: E402
from trajlab.pipeline import RunConfig, run_pipeline  # noqa: E402
from trajlab.preprocess import resample  # noqa: E402

SCENE = REPO / "scenes" / "dybbolsbro_like.json"
DIRECTIVES = REPO / "scenes" / "dybbolsbro_directives.json"


def run(trajectories: Path, out: Path) -> None:
    plain = run_pipeline(
        RunConfig(
            trajectories=str(trajectories),
            scene=str(SCENE),
            out_dir=str(out / "uncurated"),
            threads=4,
            eps=8.0,
            min_pts=25,
        ),
        stop_after="endpoints",
    )
    clustered = sum(c.size for c in plain.clusters)
    print(f"SD-clusters: {len(plain.clusters)} (expected 16)")
    print(f"clustered trajectories: {clustered} (expected 4888)")

    result = run_pipeline(
        RunConfig(
            trajectories=str(trajectories),
            scene=str(SCENE),
            out_dir=str(out / "curated"),
            directives=str(DIRECTIVES),
            threads=4,
            eps=8.0,
            min_pts=25,
        )
    )
    a = result.manifest["accounting"]
    r = result.report
    print(f"retained after directives: {a['retained_in_clusters']} (expected 4432)")
    print(f"scene mismatch: {r.mismatch_fraction:.4f} "
          f"({r.total_noncompliant}/{r.total_trajectories}, expected ~0.11)")

    es = [sd for sd in r.sd_pairs if sd.sd_name == "E_in->S_out"]
    if es:
        print(f"E_in->S_out cluster: {es[0].noncompliant_members}/{es[0].size} "
              "non-compliant (expected ~0/177)")
    else:
        print("E_in->S_out cluster: not found (check gate calibration)")

    raw_ids = raw_sd_query(result.kept, result.spec, "E_in", "S_out", result.params.gate_snap)
    designs = result.spec.paths_between("E_in", "S_out")
    verdicts = classify_trajectories(
        [resample(result.kept.get(tid), result.params.k) for tid in raw_ids],
        designs,
        result.params.compliance,
    )
    bad = sum(1 for v in verdicts.values() if not v.compliant)
    print(f"E_in->S_out raw endpoint query: {bad}/{len(raw_ids)} "
          "non-compliant (expected ~9/518)")
    print(f"outputs in {out}")


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print(__doc__, file=sys.stderr)
        sys.exit(2)
    run(Path(sys.argv[1]), Path(sys.argv[2]) if len(sys.argv) > 2 else REPO / "dataset_out")
