"""Attribute-preservation arithmetic over ingested predictions."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError, ImageIOError, MissingColumn, ZeroInterOcular

# metric name -> (prediction column, ground-truth column)
METRIC_COLUMNS = {
    "age_MAE": ("age_pred", "age_gt"),
    "gender_Acc": ("gender_pred", "gender_gt"),
    "ethnicity_Acc": ("ethnicity_pred", "ethnicity_gt"),
    "expression_Acc": ("expression_pred", "expression_gt"),
    "landmark_NME": ("landmarks_pred", "landmarks_gt"),
    "hr_MAE": ("hr_pred", "hr_gt"),
}
NUMERIC_COLUMNS = {"age_pred", "age_gt", "hr_pred", "hr_gt"}
LANDMARK_COLUMNS = {"landmarks_pred", "landmarks_gt"}
KNOWN_COLUMNS = {c for pair in METRIC_COLUMNS.values() for c in pair}

# outer eye corners used for the inter-ocular distance
EYE_INDICES = {5: (0, 1), 68: (36, 45)}


@dataclass
class PredictionTable:
    """Column store keyed by image id. Landmark cells are ``(n, 2)`` arrays."""

    ids: list[str]
    columns: dict[str, list]

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise FormatError("prediction table has duplicate image ids")
        for name, col in self.columns.items():
            if len(col) != len(self.ids):
                raise FormatError(f"column {name} has {len(col)} rows, expected {len(self.ids)}")

    def column(self, name):
        if name not in self.columns:
            raise MissingColumn(name)
        return self.columns[name]


def _parse_landmarks(cell: str) -> np.ndarray:
    vals = np.array(cell.split(), dtype=np.float64)
    if vals.size % 2:
        raise FormatError(f"landmark cell has an odd number of values: {cell!r}")
    return vals.reshape(-1, 2)


def load_predictions(path) -> PredictionTable:
    """CSV with an ``id`` column plus any of the documented prediction/ground-truth columns.

    Landmark cells hold space-separated ``x0 y0 x1 y1 ...``; class labels are
    kept as strings.
    """
    path = os.fspath(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ImageIOError(f"cannot read predictions {path}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: empty prediction table")
    header = list(rows[0].keys())
    if "id" not in header:
        raise FormatError(f"{path}: missing 'id' column")
    unknown = [c for c in header if c != "id" and c not in KNOWN_COLUMNS]
    if unknown:
        raise FormatError(f"{path}: unknown columns {unknown}")
    cols = {}
    for name in header:
        if name == "id":
            continue
        raw = [r[name] for r in rows]
        if name in NUMERIC_COLUMNS:
            cols[name] = [float(v) for v in raw]
        elif name in LANDMARK_COLUMNS:
            cols[name] = [_parse_landmarks(v) for v in raw]
        else:
            cols[name] = [v.strip() for v in raw]
    return PredictionTable([r["id"] for r in rows], cols)


def save_predictions(table: PredictionTable, path) -> None:
    names = list(table.columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + names)
        for i, rid in enumerate(table.ids):
            row = [rid]
            for n in names:
                v = table.columns[n][i]
                if n in LANDMARK_COLUMNS:
                    row.append(" ".join(repr(float(x)) for x in np.asarray(v).ravel()))
                elif n in NUMERIC_COLUMNS:
                    row.append(repr(float(v)))
                else:
                    row.append(str(v))
            w.writerow(row)


def mae(pred, gt) -> float:
    return float(np.mean(np.abs(np.asarray(pred, float) - np.asarray(gt, float))))


def accuracy(pred, gt) -> float:
    """Exact-match rate in percent."""
    return 100.0 * sum(p == g for p, g in zip(pred, gt)) / len(gt)


def nme(pred, gt, eye_indices=None) -> float:
    """Mean over images of (mean point error / inter-ocular distance)."""
    per_image = []
    for p, g in zip(pred, gt):
        p, g = np.asarray(p, float), np.asarray(g, float)
        if p.shape != g.shape:
            raise FormatError(f"landmark shape mismatch {p.shape} vs {g.shape}")
        eyes = eye_indices or EYE_INDICES.get(len(g))
        if eyes is None:
            raise FormatError(f"no default eye indices for {len(g)} landmarks; pass eye_indices")
        iod = float(np.linalg.norm(g[eyes[0]] - g[eyes[1]]))
        if iod == 0.0:
            raise ZeroInterOcular("ground-truth eyes coincide")
        per_image.append(np.mean(np.linalg.norm(p - g, axis=1)) / iod)
    return float(np.mean(per_image))


def utility_report(table: PredictionTable, metrics=None, eye_indices=None) -> dict:
    """Compute the requested utility metrics (default: every metric whose columns exist)."""
    if metrics is None:
        metrics = [m for m, (p, g) in METRIC_COLUMNS.items() if p in table.columns and g in table.columns]
    out = {}
    for m in metrics:
        if m not in METRIC_COLUMNS:
            raise ValueError(f"unknown utility metric {m!r}")
        pred_col, gt_col = METRIC_COLUMNS[m]
        pred, gt = table.column(pred_col), table.column(gt_col)
        if m.endswith("MAE"):
            out[m] = mae(pred, gt)
        elif m.endswith("Acc"):
            out[m] = accuracy(pred, gt)
        else:
            out[m] = nme(pred, gt, eye_indices)
    return out
