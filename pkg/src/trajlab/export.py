"""Deterministic file exports: tables, GeoJSON overlays and SVG figures.

Every writer here is a pure function of its inputs: fixed number
formatting, sorted JSON keys, no timestamps. Two runs over identical
inputs must produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .compliance import ComplianceReport
from .ingest import SceneSpec
from .pathcluster import DistanceMatrix

# Fixed figure palette, indexed by path-cluster index (1-based).
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)


def _num(v: float) -> str:
    return f"{v:.2f}"


def write_text(path, content: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(content, encoding="utf-8")


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def discards_csv(discards: list[tuple[str, str]]) -> str:
    lines = ["traj_id,reason"]
    lines += [f"{tid},{reason}" for tid, reason in discards]
    return "\n".join(lines) + "\n"


def sd_assignments_csv(labels: dict[str, int]) -> str:
    lines = ["traj_id,sd_label"]
    lines += [f"{tid},{labels[tid]}" for tid in sorted(labels)]
    return "\n".join(lines) + "\n"


def path_assignments_csv(rows: list[tuple[str, int, int]]) -> str:
    """rows: (traj_id, sd_label, path_index)."""
    lines = ["traj_id,sd_label,path_index"]
    lines += [f"{tid},{sd},{idx}" for tid, sd, idx in sorted(rows)]
    return "\n".join(lines) + "\n"


def trajectory_details_csv(rows: list[tuple[str, int, int, bool, float]]) -> str:
    """rows: (traj_id, sd_label, path_index, compliant, duration_s)."""
    lines = ["traj_id,sd_label,path_index,compliant,duration_s"]
    lines += [f"{tid},{sd},{idx},{int(ok)},{dur!r}" for tid, sd, idx, ok, dur in sorted(rows)]
    return "\n".join(lines) + "\n"


def distance_matrix_text(m: DistanceMatrix) -> str:
    lines = ["\t".join(m.id_order)]
    for i in range(m.n):
        lines.append("\t".join(repr(float(v)) for v in m.values[i]))
    return "\n".join(lines) + "\n"


def report_json_obj(report: ComplianceReport) -> dict:
    return {
        "totals": {
            "trajectories": report.total_trajectories,
            "noncompliant": report.total_noncompliant,
            "mismatch_fraction": report.mismatch_fraction,
            "wrongway_events": report.wrongway_event_count,
        },
        "sd_pairs": [
            {
                "label": sd.sd_label,
                "name": sd.sd_name,
                "size": sd.size,
                "compliant": sd.compliant_members,
                "noncompliant": sd.noncompliant_members,
                "mismatch_fraction": sd.mismatch_fraction,
            }
            for sd in report.sd_pairs
        ],
        "path_clusters": [
            {
                "sd_label": r.sd_label,
                "sd_name": r.sd_name,
                "path_index": r.path_index,
                "size": r.size,
                "medoid": r.medoid_id,
                "compliant": r.compliant,
                "matched_design": r.matched_design,
                "reason": r.reason,
                "max_dev": r.max_dev,
                "within_fraction": r.within_fraction,
                "duration_mean_s": r.durations.mean,
                "duration_median_s": r.durations.median,
                "duration_min_s": r.durations.min,
                "duration_max_s": r.durations.max,
            }
            for r in report.rows
        ],
        "zone_events": [
            {"traj_id": e.traj_id, "zone": e.zone, "first_entry_t": e.first_entry_t}
            for e in report.zone_events
        ],
    }


def report_table(report: ComplianceReport) -> str:
    """Human-readable fixed-width summary of a ComplianceReport."""
    out = []
    out.append("path clusters")
    header = f"{'sd':>3} {'name':<12} {'idx':>3} {'size':>6} {'ok':>3} {'within':>7} {'maxdev':>8} {'dur_mean':>9} {'matched':<16}"
    out.append(header)
    out.append("-" * len(header))
    for r in report.rows:
        within = "" if r.within_fraction is None else f"{r.within_fraction:.3f}"
        maxdev = "" if r.max_dev is None else _num(r.max_dev)
        out.append(
            f"{r.sd_label:>3} {r.sd_name:<12} {r.path_index:>3} {r.size:>6} "
            f"{'yes' if r.compliant else 'no':>3} {within:>7} {maxdev:>8} "
            f"{r.durations.mean:>9.2f} {r.matched_design or r.reason or '':<16}"
        )
    out.append("")
    out.append("SD pairs")
    out.append(f"{'sd':>3} {'name':<12} {'size':>6} {'ok':>6} {'dev':>6} {'mismatch':>9}")
    for sd in report.sd_pairs:
        out.append(
            f"{sd.sd_label:>3} {sd.sd_name:<12} {sd.size:>6} {sd.compliant_members:>6} "
            f"{sd.noncompliant_members:>6} {sd.mismatch_fraction:>9.4f}"
        )
    out.append("")
    out.append(
        f"total {report.total_trajectories} trajectories, {report.total_noncompliant} off-design "
        f"({report.mismatch_fraction:.4f}), {report.wrongway_event_count} wrong-way events"
    )
    return "\n".join(out) + "\n"


def geojson_document(spec: SceneSpec, report: ComplianceReport, medoid_samples: dict) -> dict:
    """GeoJSON FeatureCollection in pixel space (y down, not geographic).

    medoid_samples maps (sd_label, path_index) to the medoid's (K, 2)
    sample array.
    """

    def coords(arr) -> list:
        return [[float(x), float(y)] for x, y in np.asarray(arr)]

    features = []
    for p in spec.designed_paths:
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords(p.polyline.as_array)},
                "properties": {
                    "role": "designed_path",
                    "source": p.source,
                    "destination": p.destination,
                    "required_stops": p.required_stops,
                },
            }
        )
    for z in spec.forbidden_zones:
        ring = coords(list(z.ring) + [z.ring[0]])
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"role": "forbidden_zone", "name": z.name},
            }
        )
    for i, s in enumerate(spec.signal_lines):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords(s.as_array)},
                "properties": {"role": "signal_line", "index": i},
            }
        )
    for r in report.rows:
        samples = medoid_samples[(r.sd_label, r.path_index)]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords(samples)},
                "properties": {
                    "role": "path_cluster_medoid",
                    "sd_label": r.sd_label,
                    "sd_name": r.sd_name,
                    "path_index": r.path_index,
                    "size": r.size,
                    "compliant": r.compliant,
                    "medoid": r.medoid_id,
                },
            }
        )
    return {
        "type": "FeatureCollection",
        "features": features,
        "properties": {
            "coordinate_space": "image pixels, y axis downward; not geographic",
            "resolution": [spec.resolution[0], spec.resolution[1]],
        },
    }


def _polyline_points(arr) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in np.asarray(arr))


def svg_sd_cluster(
    spec: SceneSpec,
    title: str,
    members: list[tuple[str, np.ndarray, int]],
    designs,
) -> str:
    """Figure for one SD-cluster: members colored by path-cluster index.

    members: (traj_id, (K, 2) samples, path_index) triples. Members are
    the only <polyline> elements; overlays use other element types so the
    member count is checkable from the markup.
    """
    w, h = spec.resolution
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]
    for z in spec.forbidden_zones:
        d = "M " + " L ".join(f"{x:.2f} {y:.2f}" for x, y in z.ring) + " Z"
        out.append(f'<path d="{d}" fill="#d62728" fill-opacity="0.12" stroke="#d62728" stroke-width="1"/>')
    for tid, samples, idx in members:
        color = PALETTE[(idx - 1) % len(PALETTE)]
        out.append(
            f'<polyline points="{_polyline_points(samples)}" fill="none" '
            f'stroke="{color}" stroke-width="1" stroke-opacity="0.45"><title>{tid}</title></polyline>'
        )
    for p in designs:
        d = "M " + " L ".join(f"{x:.2f} {y:.2f}" for x, y in p.polyline.as_array)
        out.append(f'<path d="{d}" fill="none" stroke="black" stroke-width="2" stroke-dasharray="6 4"/>')
    for g in spec.gates:
        out.append(f'<circle cx="{_num(g.x)}" cy="{_num(g.y)}" r="4" fill="black"/>')
        out.append(f'<text x="{_num(g.x + 6)}" y="{_num(g.y - 6)}" font-size="10">{g.name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_duration_hist(title: str, durations: list[float], bins: int = 10) -> str:
    """Duration histogram for one SD pair (seconds on screen)."""
    w, h, pad = 480, 240, 36
    vals = np.asarray(sorted(durations), dtype=np.float64)
    lo, hi = float(vals.min()), float(vals.max())
    if hi <= lo:
        hi = lo + 1.0
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    peak = max(int(counts.max()), 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w // 2}" y="16" font-size="12" text-anchor="middle">{title}</text>',
    ]
    plot_w, plot_h = w - 2 * pad, h - 2 * pad
    bar_w = plot_w / bins
    for i, c in enumerate(counts):
        bh = plot_h * (int(c) / peak)
        x = pad + i * bar_w
        y = h - pad - bh
        out.append(
            f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(bar_w * 0.9)}" height="{_num(bh)}" fill="#1f77b4"/>'
        )
    out.append(f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black" stroke-width="1"/>')
    out.append(f'<text x="{pad}" y="{h - pad + 14}" font-size="10">{_num(lo)}s</text>')
    out.append(f'<text x="{w - pad}" y="{h - pad + 14}" font-size="10" text-anchor="end">{_num(hi)}s</text>')
    out.append(f'<text x="{pad - 4}" y="{pad}" font-size="10" text-anchor="end">{peak}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
