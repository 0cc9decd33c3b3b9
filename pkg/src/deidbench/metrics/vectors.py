"""Embedding / feature-vector files.

Binary layout: one UTF-8 JSON header line ``{"d": .., "n": .., "ids": [..]}``
terminated by ``\\n``, followed by ``n * d`` little-endian float32 values in
row-major order. Files ending in ``.csv`` use rows ``id,v0,...,v{d-1}``
(header line optional).
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from ..errors import FormatError, ImageIOError


def save_vectors(path, ids, vectors) -> None:
    path = os.fspath(path)
    vec = np.asarray(vectors, dtype=np.float64)
    ids = [str(i) for i in ids]
    if vec.ndim != 2 or len(ids) != len(vec):
        raise FormatError("need one id per row of an (n, d) matrix")
    if path.lower().endswith(".csv"):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["id"] + [f"v{j}" for j in range(vec.shape[1])])
            for rid, row in zip(ids, vec):
                w.writerow([rid] + [repr(float(x)) for x in row])
        return
    header = json.dumps({"d": int(vec.shape[1]), "n": int(vec.shape[0]), "ids": ids})
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        fh.write(vec.astype("<f4").tobytes())


def load_vectors(path) -> tuple[list[str], np.ndarray]:
    """Return ``(ids, (n, d) float64 matrix)``."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ImageIOError(f"no such file: {path}")
    if path.lower().endswith(".csv"):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if rows and rows[0][0] == "id":
            rows = rows[1:]
        if not rows:
            raise FormatError(f"{path}: no vectors")
        try:
            vec = np.array([[float(v) for v in r[1:]] for r in rows])
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc
        return [r[0] for r in rows], vec
    with open(path, "rb") as fh:
        line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(line.decode("utf-8"))
        n, d, ids = int(header["n"]), int(header["d"]), list(header["ids"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: bad vector header") from exc
    if len(payload) != 4 * n * d or len(ids) != n:
        raise FormatError(f"{path}: payload does not match header n={n}, d={d}")
    vec = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)
    return ids, vec


def align_by_id(ids_a, vec_a, ids_b, vec_b):
    """Rows of ``vec_b`` reordered to follow ``ids_a``; every id must be present."""
    index = {rid: i for i, rid in enumerate(ids_b)}
    missing = [rid for rid in ids_a if rid not in index]
    if missing:
        raise FormatError(f"ids missing from second set: {missing[:5]}")
    return vec_a, vec_b[[index[rid] for rid in ids_a]]
