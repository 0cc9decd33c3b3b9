"""Evaluation reports and their on-disk forms: results.json, results.csv and
radar.svg. Nothing time-dependent is written, so artifacts are byte-stable."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

from ..errors import ImageIOError

# metric -> (axis minimum, axis maximum, higher is better)
RADAR_AXES = {
    "psnr": (0.0, 50.0, True),
    "ssim": (0.0, 1.0, True),
    "fid": (0.0, 200.0, False),
    "VA": (50.0, 100.0, False),
    "TAR_at_FAR": (0.0, 100.0, False),
    "PSR": (0.0, 100.0, True),
    "age_MAE": (0.0, 30.0, False),
    "gender_Acc": (0.0, 100.0, True),
    "ethnicity_Acc": (0.0, 100.0, True),
    "expression_Acc": (0.0, 100.0, True),
    "landmark_NME": (0.0, 1.0, False),
    "hr_MAE": (0.0, 40.0, False),
}

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


@dataclass
class EvaluationReport:
    label: str
    config_hash: str
    config: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "config_hash": self.config_hash,
            "config": self.config,
            "aggregates": self.aggregates,
            "thresholds": self.thresholds,
            "records": self.records,
        }


def _atomic_write(path, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(parent, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def normalize_axis(metric: str, value: float) -> float:
    lo, hi, higher = RADAR_AXES[metric]
    r = min(max((value - lo) / (hi - lo), 0.0), 1.0)
    return r if higher else 1.0 - r


def radar_axes(reports) -> list[str]:
    present = set()
    for r in reports:
        present.update(k for k, v in r.aggregates.items() if isinstance(v, (int, float)) and k in RADAR_AXES)
    return [m for m in RADAR_AXES if m in present]


def radar_svg(reports, size: int = 480) -> str:
    """One closed polygon per report over the normalised metric axes.

    Every axis runs from the centre (worst) to the rim (best); axis ranges are
    fixed per metric in :data:`RADAR_AXES`.
    """
    axes = radar_axes(reports)
    c = size / 2.0
    rad = size * 0.34
    n = max(len(axes), 1)

    def point(i, r):
        ang = -math.pi / 2 + 2 * math.pi * i / n
        return c + r * rad * math.cos(ang), c + r * rad * math.sin(ang)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    for ring in (0.25, 0.5, 0.75, 1.0):
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in (point(i, ring) for i in range(n)))
        out.append(f'<polygon class="grid" points="{pts}" fill="none" stroke="#cccccc"/>')
    for i, name in enumerate(axes):
        x, y = point(i, 1.0)
        lx, ly = point(i, 1.12)
        out.append(f'<line class="axis" x1="{c:.3f}" y1="{c:.3f}" x2="{x:.3f}" y2="{y:.3f}" stroke="#999999"/>')
        out.append(f'<text x="{lx:.3f}" y="{ly:.3f}" font-size="11" text-anchor="middle">{name}</text>')
    for k, rep in enumerate(reports):
        color = PALETTE[k % len(PALETTE)]
        vals = [rep.aggregates.get(m) for m in axes]
        pts = " ".join(
            f"{x:.3f},{y:.3f}"
            for x, y in (point(i, normalize_axis(m, v) if isinstance(v, (int, float)) else 0.0)
                         for i, (m, v) in enumerate(zip(axes, vals)))
        )
        label = _xml_escape(rep.label)
        out.append(f'<polygon class="method" data-label="{label}" points="{pts}" '
                   f'fill="{color}" fill-opacity="0.2" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="10" y="{18 + 14 * k}" font-size="12" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xml_escape(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(reports) -> str:
    keys = sorted({k for r in reports for k in r.aggregates})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "config_hash"] + keys)
    for r in reports:
        w.writerow([r.label, r.config_hash] + [_csv_value(r.aggregates.get(k)) for k in keys])
    return buf.getvalue()


def emit_report(report, out_dir) -> list[str]:
    """Write results.json, results.csv and radar.svg; return their paths."""
    reports = report if isinstance(report, (list, tuple)) else [report]
    if not reports:
        raise ValueError("nothing to report")
    out_dir = os.fspath(out_dir)
    payload = {"version": 1, "reports": [r.to_dict() for r in reports]}
    paths = [os.path.join(out_dir, n) for n in ("results.json", "results.csv", "radar.svg")]
    _atomic_write(paths[0], json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")
    _atomic_write(paths[1], results_csv(reports))
    _atomic_write(paths[2], radar_svg(reports))
    return paths


def load_results(path) -> list[EvaluationReport]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [EvaluationReport(d["label"], d["config_hash"], d.get("config", {}), d.get("records", []),
                             d.get("aggregates", {}), d.get("thresholds", {})) for d in payload["reports"]]
