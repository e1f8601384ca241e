"""Command-line interface.

Subcommands:
  run               full pipeline with all exports
  cluster-endpoints stop after source-destination clustering
  cluster-paths     stop after within-cluster path clustering
  report            full analysis, tables only (no figure files)
  synth             generate a synthetic trajectory set from a spec

Exit codes: 0 success, 1 input or validation error, 2 internal pipeline
error. The --threads flag changes wall time only, never output bytes.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import export
from ._version import __version__
from .errors import ParseError, PipelineError, ValidationError
from .ingest import scene_to_dict
from .ingest import write_trajectories
from .pipeline import RunConfig, load_config, run_pipeline
from .synth import generate, parse_synth_spec, write_ground_truth

log = logging.getLogger("trajlab")


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--trajectories", help="trajectory file (csv with #resolution header)")
    p.add_argument("--scene", help="scene design file (JSON)")
    p.add_argument("--directives", help="cluster merge/discard directives file (JSON)")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--k", type=int, help="resample length (default 64)")
    p.add_argument("--threads", type=int, help="worker threads for distance computation")
    p.add_argument("--band", type=float, help="optional DTW band width as a fraction of K")
    p.add_argument("--gate-snap", type=float, dest="gate_snap", help="gate snap radius, px")
    g = p.add_argument_group("filtering")
    g.add_argument("--min-points", type=int, dest="min_points")
    g.add_argument("--min-path-length", type=float, dest="min_path_length")
    g.add_argument("--max-time-gap", type=float, dest="max_time_gap")
    g.add_argument("--min-duration", type=float, dest="min_duration")
    g = p.add_argument_group("endpoint clustering")
    g.add_argument("--eps", type=float, help="DBSCAN radius, px at 640x360 by default")
    g.add_argument("--min-pts", type=int, dest="min_pts")
    g = p.add_argument_group("path clustering")
    g.add_argument("--linkage", choices=["average", "complete"])
    g.add_argument("--target-count", type=int, dest="target_count")
    g.add_argument("--distance-threshold", type=float, dest="distance_threshold")
    g.add_argument("--min-cluster-size", type=int, dest="min_cluster_size")
    g = p.add_argument_group("compliance")
    g.add_argument("--deviation-threshold", type=float, dest="deviation_threshold")
    g.add_argument("--deviation-quantile", type=float, dest="deviation_quantile")
    g.add_argument("--zone-min-points", type=int, dest="zone_min_points")
    g = p.add_argument_group("exports")
    g.add_argument("--no-geojson", dest="geojson", action="store_const", const=False, default=None)
    g.add_argument("--no-svg", dest="svg", action="store_const", const=False, default=None)
    g.add_argument("--matrices", action="store_const", const=True, default=None,
                   help="dump per-cluster distance matrices")


_OVERRIDE_KEYS = (
    "trajectories", "scene", "directives", "out_dir", "k", "threads", "band", "gate_snap",
    "min_points", "min_path_length", "max_time_gap", "min_duration", "eps", "min_pts",
    "linkage", "target_count", "distance_threshold", "min_cluster_size",
    "deviation_threshold", "deviation_quantile", "zone_min_points",
    "geojson", "svg", "matrices",
)


def _config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}
    return load_config(args.config, overrides)


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    result = run_pipeline(cfg)
    r = result.report
    a = result.manifest["accounting"]
    print(
        f"{a['input_trajectories']} in, {a['kept_after_filter']} kept, "
        f"{a['sd_clusters']} SD-clusters ({a['retained_in_clusters']} trajectories, "
        f"{a['dbscan_noise']} noise, {a['directive_discarded']} discarded by directives)"
    )
    print(
        f"{len(result.path_clusters)} path-clusters; mismatch {r.mismatch_fraction:.4f} "
        f"({r.total_noncompliant}/{r.total_trajectories}); {r.wrongway_event_count} wrong-way events"
    )
    print(f"outputs in {result.out_dir}")
    return 0


def _cmd_cluster_endpoints(args) -> int:
    cfg = _config_from_args(args)
    result = run_pipeline(cfg, stop_after="endpoints")
    for c in result.clusters:
        print(f"sd{c.label:02d} {c.name:<14} {c.size:>6}")
    noise = sum(1 for v in result.labels.values() if v == -1)
    print(f"noise {noise}")
    print(f"outputs in {result.out_dir}")
    return 0


def _cmd_cluster_paths(args) -> int:
    cfg = _config_from_args(args)
    result = run_pipeline(cfg, stop_after="paths")
    by_sd: dict[int, list] = {}
    for pc in result.path_clusters:
        by_sd.setdefault(pc.sd_label, []).append(pc)
    names = {c.label: c.name for c in result.clusters}
    for sd in sorted(by_sd):
        sizes = ", ".join(str(pc.size) for pc in sorted(by_sd[sd], key=lambda p: p.index))
        print(f"sd{sd:02d} {names[sd]:<14} {len(by_sd[sd])} path-clusters: {sizes}")
    print(f"outputs in {result.out_dir}")
    return 0


def _cmd_report(args) -> int:
    cfg = _config_from_args(args)
    result = run_pipeline(cfg, figures=False)
    print(export.report_table(result.report), end="")
    return 0


def _cmd_synth(args) -> int:
    spec = parse_synth_spec(args.spec)
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    tset, gt = generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectories(tset, out / "trajectories.csv")
    write_ground_truth(gt, out / "ground_truth.csv")
    export.write_json(out / "scene.json", scene_to_dict(spec.scene))
    print(f"{len(tset)} trajectories in {len(spec.bundles)} bundles, seed {spec.seed}")
    print(f"outputs in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajlab",
        description="Trajectory clustering and designed-path compliance analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline: filter, cluster, score, export")
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("cluster-endpoints", help="stop after source-destination clustering")
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_cluster_endpoints)

    p = sub.add_parser("cluster-paths", help="stop after path clustering")
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_cluster_paths)

    p = sub.add_parser("report", help="full analysis, report tables only")
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate synthetic trajectories with ground truth")
    p.add_argument("--spec", required=True, help="generation spec (JSON)")
    p.add_argument("--out", dest="out_dir", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the spec's seed")
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except PipelineError as e:
        code = 1 if isinstance(e.__cause__, (ParseError, ValidationError)) else 2
        print(f"error: {e}", file=sys.stderr)
        return code
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
