"""End-to-end orchestration: ingest, filter, cluster, score, export.

The pipeline is a deterministic function of (input files, effective
parameters): the run manifest records both, checksums included, and two
runs with the same manifest produce byte-identical outputs whatever the
thread count.

Pixel-valued defaults (filter lengths, eps, tau, gate snap, the DTW cut)
are stated at the 640x360 reference resolution. When a scene uses a
different resolution and the caller has not overridden a parameter, the
default is rescaled by the mean of the x/y scale factors and the rescale
is logged. Explicit overrides are always taken at scene resolution.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import compliance as comp
from . import export
from ._version import __version__
from .endpoints import ClusterParams, Directives, apply_directives, assign_gates, cluster_endpoints, parse_directives
from .errors import ParseError, PipelineError, TrajlabError, ValidationError
from .geometry import TrajectorySet
from .ingest import GATE_SNAP_DEFAULT, REFERENCE_RESOLUTION, SceneSpec, parse_scene, parse_trajectories, scale_factor
from .pathcluster import DistanceMatrix, PathCluster, PathClusterParams, distance_matrix, cluster_paths
from .preprocess import DEFAULT_K, FilterParams, filter_broken, resample

log = logging.getLogger("trajlab")


@dataclass(frozen=True)
class RunConfig:
    """Paths, parameter overrides and export toggles for one run.

    Optional parameter fields left as None fall back to defaults (rescaled
    to the scene resolution when it differs from 640x360).
    """

    trajectories: str
    scene: str
    out_dir: str
    directives: str | None = None
    k: int = DEFAULT_K
    threads: int = 1
    band: float | None = None
    gate_snap: float | None = None
    # filter overrides
    min_points: int | None = None
    min_path_length: float | None = None
    max_time_gap: float | None = None
    min_duration: float | None = None
    # endpoint clustering overrides
    eps: float | None = None
    min_pts: int | None = None
    # path clustering overrides
    linkage: str = "average"
    target_count: int | None = None
    distance_threshold: float | None = None
    min_cluster_size: int | None = None
    # compliance overrides
    deviation_threshold: float | None = None
    deviation_quantile: float | None = None
    zone_min_points: int | None = None
    # export toggles
    geojson: bool = True
    svg: bool = True
    matrices: bool = False

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError(f"k must be >= 2, got {self.k}")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")


_CONFIG_KEYS = (
    "trajectories", "scene", "out_dir", "directives", "k", "threads", "band", "gate_snap",
    "min_points", "min_path_length", "max_time_gap", "min_duration",
    "eps", "min_pts", "linkage", "target_count", "distance_threshold", "min_cluster_size",
    "deviation_threshold", "deviation_quantile", "zone_min_points",
    "geojson", "svg", "matrices",
)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a JSON file plus keyword overrides."""
    doc: dict = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e}", path=str(path)) from e
        except OSError as e:
            raise ParseError(f"cannot read file: {e}", path=str(path)) from e
        if not isinstance(doc, dict):
            raise ParseError("config must be a JSON object", path=str(path))
        unknown = set(doc) - set(_CONFIG_KEYS)
        if unknown:
            raise ParseError(f"unknown config keys: {sorted(unknown)}", path=str(path))
    merged = dict(doc)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    missing = [k for k in ("trajectories", "scene", "out_dir") if not merged.get(k)]
    if missing:
        raise ValidationError(f"missing required setting(s): {', '.join(missing)}")
    try:
        return RunConfig(**merged)
    except TypeError as e:
        raise ValidationError(f"bad config: {e}") from e


@dataclass(frozen=True)
class ResolvedParams:
    """Concrete parameter set actually used by a run."""

    k: int
    band: float | None
    gate_snap: float
    filter: FilterParams
    cluster: ClusterParams
    paths: PathClusterParams
    compliance: comp.ComplianceParams
    scale: float  # reference -> scene factor applied to unset pixel defaults

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "band": self.band,
            "gate_snap": self.gate_snap,
            "filter": asdict(self.filter),
            "cluster": asdict(self.cluster),
            "path_cluster": asdict(self.paths),
            "compliance": asdict(self.compliance),
            "reference_scale": self.scale,
        }


def resolve_params(cfg: RunConfig, spec: SceneSpec) -> ResolvedParams:
    factor = scale_factor(REFERENCE_RESOLUTION, spec.resolution)
    if factor != 1.0:
        fx = spec.resolution[0] / REFERENCE_RESOLUTION[0]
        fy = spec.resolution[1] / REFERENCE_RESOLUTION[1]
        log.warning(
            "scene resolution %dx%d differs from the 640x360 reference; "
            "unset pixel parameters are rescaled by %.4f (x factor %.4f, y factor %.4f)",
            spec.resolution[0], spec.resolution[1], factor, fx, fy,
        )

    def px(override, default):
        return override if override is not None else default * factor

    fp = FilterParams(
        min_points=cfg.min_points if cfg.min_points is not None else 10,
        min_path_length=px(cfg.min_path_length, 40.0),
        max_time_gap=cfg.max_time_gap if cfg.max_time_gap is not None else 2.0,
        min_duration=cfg.min_duration if cfg.min_duration is not None else 1.0,
    )
    cp = ClusterParams(
        eps=px(cfg.eps, 8.0),
        min_pts=cfg.min_pts if cfg.min_pts is not None else 25,
    )
    threshold = cfg.distance_threshold
    if threshold is None and cfg.target_count is None:
        threshold = 30.0 * cfg.k / 64.0 * factor
    pp = PathClusterParams(
        linkage=cfg.linkage,
        target_count=cfg.target_count,
        distance_threshold=threshold,
        min_cluster_size=cfg.min_cluster_size if cfg.min_cluster_size is not None else 1,
    )
    mp = comp.ComplianceParams(
        deviation_threshold=px(cfg.deviation_threshold, 12.0),
        deviation_quantile=cfg.deviation_quantile if cfg.deviation_quantile is not None else 0.9,
        zone_min_points=cfg.zone_min_points if cfg.zone_min_points is not None else 3,
    )
    snap = px(cfg.gate_snap, GATE_SNAP_DEFAULT)
    return ResolvedParams(cfg.k, cfg.band, snap, fp, cp, pp, mp, factor)


@dataclass
class RunResult:
    """Everything a run computed, for callers that want more than files."""

    spec: SceneSpec
    params: ResolvedParams
    raw_count: int
    kept: TrajectorySet
    filter_discards: list
    clusters: list
    labels: dict
    directive_discards: list
    path_clusters: list
    resampled: dict
    report: comp.ComplianceReport | None
    manifest: dict
    out_dir: Path


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _stage(name: str):
    """Wrap stage errors so failures carry the stage that produced them."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, TrajlabError) and not isinstance(exc, PipelineError):
                raise PipelineError(name, str(exc)) from exc
            return False

    return _Ctx()


def _sanitize(name: str) -> str:
    return name.replace("->", "_to_").replace("/", "_").replace(" ", "_")


def run_pipeline(cfg: RunConfig, *, stop_after: str | None = None, figures: bool | None = None) -> RunResult:
    """Execute the pipeline and write artifacts into cfg.out_dir.

    stop_after: None for the full run, or "endpoints" / "paths" to stop
    after the respective clustering stage. figures=False suppresses
    GeoJSON/SVG regardless of the config toggles.
    """
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with _stage("ingest"):
        spec = parse_scene(cfg.scene)
        params = resolve_params(cfg, spec)
        tset = parse_trajectories(cfg.trajectories, spec)
        directives = parse_directives(cfg.directives) if cfg.directives else Directives()

    with _stage("preprocess"):
        kept, filter_discards = filter_broken(tset, params.filter)
        export.write_text(out_dir / "discards.csv", export.discards_csv(filter_discards))

    with _stage("endpoint_cluster"):
        clusters, labels = cluster_endpoints(kept, params.cluster)
        clusters, directive_discards = apply_directives(clusters, directives, kept)
        clusters = assign_gates(clusters, spec, params.gate_snap)
        final_label = {tid: -1 for tid in labels}
        for c in clusters:
            for tid in c.member_ids:
                final_label[tid] = c.label
        export.write_text(out_dir / "sd_assignments.csv", export.sd_assignments_csv(final_label))
        if cfg.directives:
            export.write_text(out_dir / "directive_discards.csv", export.discards_csv(directive_discards))

    manifest = _manifest(cfg, params, tset, kept, filter_discards, clusters, labels, directive_discards)
    export.write_json(out_dir / "run_manifest.json", manifest)

    result = RunResult(
        spec=spec, params=params, raw_count=len(tset), kept=kept,
        filter_discards=filter_discards, clusters=clusters, labels=labels,
        directive_discards=directive_discards, path_clusters=[], resampled={},
        report=None, manifest=manifest, out_dir=out_dir,
    )
    if stop_after == "endpoints":
        return result

    with _stage("path_cluster"):
        resampled = {t.id: resample(t, params.k) for t in kept}
        result.resampled = resampled
        path_clusters: list[PathCluster] = []
        matrices: dict[int, DistanceMatrix] = {}
        for c in clusters:
            paths = [resampled[tid] for tid in c.member_ids]
            m = distance_matrix(paths, threads=cfg.threads, band=cfg.band)
            path_clusters.extend(cluster_paths(m, params.paths, sd_label=c.label))
            if cfg.matrices:
                matrices[c.label] = m
        result.path_clusters = path_clusters
        rows = [(tid, pc.sd_label, pc.index) for pc in path_clusters for tid in pc.member_ids]
        export.write_text(out_dir / "path_assignments.csv", export.path_assignments_csv(rows))
        for label, m in matrices.items():
            export.write_text(out_dir / "matrices" / f"sd{label:02d}.tsv", export.distance_matrix_text(m))
    if stop_after == "paths":
        return result

    with _stage("compliance"):
        by_label = {c.label: c for c in clusters}
        report_rows = []
        medoid_samples = {}
        for pc in path_clusters:
            c = by_label[pc.sd_label]
            designs = (
                spec.paths_between(c.source_gate, c.dest_gate)
                if c.source_gate and c.dest_gate
                else ()
            )
            verdict = comp.classify_cluster(pc, resampled[pc.medoid_id], designs, params.compliance)
            durations = comp.duration_stats(kept, pc.member_ids)
            report_rows.append(
                comp.PathClusterRow(
                    sd_label=pc.sd_label,
                    sd_name=c.name,
                    path_index=pc.index,
                    size=pc.size,
                    medoid_id=pc.medoid_id,
                    compliant=verdict.compliant,
                    matched_design=verdict.matched_design,
                    reason=verdict.reason,
                    max_dev=verdict.stats.max_dev if verdict.stats else None,
                    within_fraction=verdict.stats.within_fraction if verdict.stats else None,
                    durations=durations,
                )
            )
            medoid_samples[(pc.sd_label, pc.index)] = resampled[pc.medoid_id].samples
        retained_ids = {tid for c in clusters for tid in c.member_ids}
        retained = TrajectorySet(
            tuple(t for t in kept if t.id in retained_ids), kept.resolution, margin=kept.margin
        )
        events = comp.forbidden_zone_events(retained, spec.forbidden_zones, params.compliance)
        report = comp.mismatch_report(report_rows, events)
        result.report = report

    with _stage("report"):
        export.write_json(out_dir / "report.json", export.report_json_obj(report))
        export.write_text(out_dir / "report.txt", export.report_table(report))
        details = []
        pc_of = {tid: pc for pc in path_clusters for tid in pc.member_ids}
        verdict_of = {(r.sd_label, r.path_index): r.compliant for r in report_rows}
        for tid in sorted(retained_ids):
            pc = pc_of[tid]
            details.append((tid, pc.sd_label, pc.index, verdict_of[(pc.sd_label, pc.index)], kept.get(tid).duration))
        export.write_text(out_dir / "trajectory_details.csv", export.trajectory_details_csv(details))

        do_figures = figures if figures is not None else True
        if do_figures and cfg.geojson:
            doc = export.geojson_document(spec, report, medoid_samples)
            export.write_json(out_dir / "overlays.geojson", doc)
        if do_figures and cfg.svg:
            pc_index = {tid: pc.index for pc in path_clusters for tid in pc.member_ids}
            for c in clusters:
                members = [(tid, resampled[tid].samples, pc_index[tid]) for tid in c.member_ids]
                designs = (
                    spec.paths_between(c.source_gate, c.dest_gate)
                    if c.source_gate and c.dest_gate
                    else ()
                )
                name = _sanitize(c.name)
                svg = export.svg_sd_cluster(spec, f"{c.name} ({c.size} trajectories)", members, designs)
                export.write_text(out_dir / "figures" / f"sd{c.label:02d}_{name}.svg", svg)
                durs = [kept.get(tid).duration for tid in c.member_ids]
                hist = export.svg_duration_hist(f"{c.name} time on screen", durs)
                export.write_text(out_dir / "figures" / f"sd{c.label:02d}_{name}_durations.svg", hist)

    return result


def _manifest(cfg, params, tset, kept, filter_discards, clusters, labels, directive_discards) -> dict:
    clustered = sum(c.size for c in clusters)
    noise = sum(1 for lbl in labels.values() if lbl == -1)
    inputs = {
        "trajectories": {"path": cfg.trajectories, "sha256": _sha256(cfg.trajectories)},
        "scene": {"path": cfg.scene, "sha256": _sha256(cfg.scene)},
        "directives": (
            {"path": cfg.directives, "sha256": _sha256(cfg.directives)} if cfg.directives else None
        ),
    }
    return {
        "version": __version__,
        "inputs": inputs,
        "parameters": params.as_dict(),
        "export": {"geojson": cfg.geojson, "svg": cfg.svg, "matrices": cfg.matrices},
        "accounting": {
            "input_trajectories": len(tset),
            "kept_after_filter": len(kept),
            "filter_discarded": len(filter_discards),
            "dbscan_noise": noise,
            "directive_discarded": len(directive_discards),
            "retained_in_clusters": clustered,
            "sd_clusters": len(clusters),
        },
    }


def config_from_manifest(manifest: dict, out_dir: str) -> RunConfig:
    """Reconstruct a RunConfig that replays a manifest's run exactly."""
    p = manifest["parameters"]
    directives = manifest["inputs"]["directives"]
    return RunConfig(
        trajectories=manifest["inputs"]["trajectories"]["path"],
        scene=manifest["inputs"]["scene"]["path"],
        out_dir=out_dir,
        directives=directives["path"] if directives else None,
        k=p["k"],
        band=p["band"],
        gate_snap=p["gate_snap"],
        min_points=p["filter"]["min_points"],
        min_path_length=p["filter"]["min_path_length"],
        max_time_gap=p["filter"]["max_time_gap"],
        min_duration=p["filter"]["min_duration"],
        eps=p["cluster"]["eps"],
        min_pts=p["cluster"]["min_pts"],
        linkage=p["path_cluster"]["linkage"],
        target_count=p["path_cluster"]["target_count"],
        distance_threshold=p["path_cluster"]["distance_threshold"],
        min_cluster_size=p["path_cluster"]["min_cluster_size"],
        deviation_threshold=p["compliance"]["deviation_threshold"],
        deviation_quantile=p["compliance"]["deviation_quantile"],
        zone_min_points=p["compliance"]["zone_min_points"],
        geojson=manifest["export"]["geojson"],
        svg=manifest["export"]["svg"],
        matrices=manifest["export"]["matrices"],
    )
