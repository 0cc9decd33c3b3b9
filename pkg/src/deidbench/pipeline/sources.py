"""Dataset manifests, frame lists and JSON-lines detection sidecars."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError, ImageIOError
from ..geometry import as_landmarks
from ..imgcore import PixelRect

IMAGE_EXTS = (".png", ".ppm", ".pgm", ".pnm")
BBOX_INFLATE = 1.2


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    identity: str | None = None


@dataclass(frozen=True)
class DetectionRecord:
    key: str | int  # image id or frame index
    bbox: PixelRect
    landmarks: np.ndarray  # (5, 2)
    confidence: float = 1.0

    def to_dict(self) -> dict:
        return {"bbox": self.bbox.as_list(), "landmarks": self.landmarks.tolist(),
                "confidence": self.confidence}


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc


def load_manifest(path) -> list[ManifestEntry]:
    """``id<TAB>path[<TAB>identity]`` per line; ``#`` starts a comment line."""
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    entries, seen = [], set()
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3) or not parts[0] or not parts[1]:
            raise FormatError(f"{path}:{lineno}: expected id<TAB>path[<TAB>identity]")
        rid = parts[0]
        if rid in seen:
            raise FormatError(f"{path}:{lineno}: duplicate id {rid!r}")
        seen.add(rid)
        img = parts[1] if os.path.isabs(parts[1]) else os.path.normpath(os.path.join(base, parts[1]))
        entries.append(ManifestEntry(rid, img, parts[2] if len(parts) == 3 and parts[2] else None))
    if not entries:
        raise FormatError(f"{path}: manifest lists no images")
    return entries


def _natural_key(name):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


def list_frames(source) -> list[str]:
    """Ordered frame paths from a directory (natural filename order) or a
    frame-list file (one path per line, in order)."""
    source = os.fspath(source)
    if os.path.isdir(source):
        names = [n for n in os.listdir(source) if n.lower().endswith(IMAGE_EXTS)]
        frames = [os.path.join(source, n) for n in sorted(names, key=_natural_key)]
    else:
        base = os.path.dirname(os.path.abspath(source))
        frames = []
        for line in _read_lines(source):
            line = line.strip()
            if line and not line.startswith("#"):
                frames.append(line if os.path.isabs(line) else os.path.normpath(os.path.join(base, line)))
    if not frames:
        raise FormatError(f"{source}: no frames found")
    return frames


def parse_detection(obj, where="detection", key_field=None) -> DetectionRecord:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: record must be a JSON object")
    if key_field is None:
        key_field = "frame" if "frame" in obj else "id"
    if key_field not in obj:
        raise FormatError(f"{where}: record needs an {key_field!r} field")
    key = obj[key_field]
    if key_field == "frame":
        if isinstance(key, bool) or not isinstance(key, int) or key < 0:
            raise FormatError(f"{where}: frame must be a non-negative integer")
    else:
        key = str(key)
    try:
        box = [float(v) for v in obj["bbox"]]
        lms = as_landmarks(obj["landmarks"])
        conf = float(obj.get("confidence", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: bad bbox/landmarks/confidence ({exc})") from exc
    if len(box) != 4 or box[2] <= 0 or box[3] <= 0 or any(v != int(v) for v in box):
        raise FormatError(f"{where}: bbox must be [x0, y0, w, h] integers with w, h > 0")
    if not 0.0 <= conf <= 1.0:
        raise FormatError(f"{where}: confidence must lie in [0, 1]")
    x0, y0, w, h = box
    cx, cy = x0 + w / 2.0, y0 + h / 2.0
    hw, hh = w * BBOX_INFLATE / 2.0, h * BBOX_INFLATE / 2.0
    inside = (np.abs(lms[:, 0] - cx) <= hw) & (np.abs(lms[:, 1] - cy) <= hh)
    if not np.all(inside):
        raise FormatError(f"{where}: landmarks fall outside the bbox inflated by 20%")
    return DetectionRecord(key, PixelRect(int(x0), int(y0), int(w), int(h)), lms, conf)


def load_detections(path, key_field=None) -> dict:
    """``{key: [DetectionRecord, ...]}`` in file order; several records per
    key are several faces."""
    path = os.fspath(path)
    out: dict = {}
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: not JSON ({exc})") from exc
        rec = parse_detection(obj, f"{path}:{lineno}", key_field)
        out.setdefault(rec.key, []).append(rec)
    return out


def write_detections(path, records) -> None:
    """Inverse of :func:`load_detections` for a flat list of records."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            field = "frame" if isinstance(rec.key, int) else "id"
            fh.write(json.dumps({field: rec.key, **rec.to_dict()}) + "\n")
