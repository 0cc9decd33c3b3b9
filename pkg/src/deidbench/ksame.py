"""k-Same family: substitute a probe face using its k nearest gallery faces.

Similarity is plain pixel-space L2 over flattened aligned crops. Distances are
exact brute force; ties always go to the lower gallery index.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, FormatError, ImageIOError, KTooLarge
from .imgcore import load_image

_CHUNK = 4096


@dataclass(frozen=True)
class Gallery:
    faces: np.ndarray  # (n, S, S, C)
    labels: tuple[str | None, ...] = ()
    source_manifest: str | None = None
    _flat: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        faces = np.asarray(self.faces, dtype=np.float64)
        if faces.ndim != 4 or len(faces) == 0:
            raise DimensionMismatch("gallery must be a non-empty (n, H, W, C) stack")
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "_flat", faces.reshape(len(faces), -1))
        if not self.labels:
            object.__setattr__(self, "labels", (None,) * len(faces))
        elif len(self.labels) != len(faces):
            raise DimensionMismatch("one label per gallery face required")

    def __len__(self):
        return len(self.faces)

    @property
    def shape(self):
        return self.faces.shape[1:]


def load_gallery(manifest) -> Gallery:
    """Read ``path[<TAB>identity]`` lines; relative paths resolve against the manifest."""
    manifest = os.fspath(manifest)
    base = os.path.dirname(os.path.abspath(manifest))
    try:
        with open(manifest, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    except OSError as exc:
        raise ImageIOError(f"cannot read gallery manifest {manifest}: {exc}") from exc
    faces, labels = [], []
    for ln in lines:
        parts = ln.split("\t")
        path = parts[0] if os.path.isabs(parts[0]) else os.path.join(base, parts[0])
        faces.append(load_image(path))
        labels.append(parts[1] if len(parts) > 1 else None)
    if not faces:
        raise FormatError(f"gallery manifest {manifest} lists no images")
    if len({f.shape for f in faces}) != 1:
        raise DimensionMismatch("gallery faces differ in size or channel count")
    return Gallery(np.stack(faces), tuple(labels), manifest)


def pixel_distances(face: np.ndarray, g: Gallery) -> np.ndarray:
    if face.shape != g.shape:
        raise DimensionMismatch(f"probe shape {face.shape} != gallery face shape {g.shape}")
    probe = face.reshape(-1)
    out = np.empty(len(g))
    for start in range(0, len(g), _CHUNK):
        block = g._flat[start:start + _CHUNK] - probe
        out[start:start + _CHUNK] = np.sqrt(np.einsum("ij,ij->i", block, block))
    return out


def _neighbours(face, g: Gallery, k: int, exclude_self: bool):
    dist = pixel_distances(face, g)
    order = np.argsort(dist, kind="stable")
    if exclude_self:
        order = order[dist[order] > 0]
    if k < 1 or k > len(order):
        raise KTooLarge(f"k={k} but only {len(order)} gallery candidates")
    return order[:k], dist[order[:k]]


def knn_pixel(face: np.ndarray, g: Gallery, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices of the ``k`` nearest gallery faces, ascending by distance."""
    return _neighbours(face, g, k, exclude_self)[0]


def _furthest(idx, dist) -> int:
    # lowest index among the members tied at the largest distance
    return int(idx[dist == dist[-1]].min())


@dataclass(frozen=True)
class KSameParams:
    k: int = 10
    variant: str = "average"
    selection_mode: str = "closest"
    rng_seed: int = 0
    exclude_self: bool = False


def k_same_average(face, g: Gallery, p: KSameParams) -> np.ndarray:
    idx = knn_pixel(face, g, p.k, p.exclude_self)
    chosen = g.faces[idx]
    lo, hi = chosen.min(axis=0), chosen.max(axis=0)
    # rounding must not push the mean outside the neighbours' range
    return np.where(lo == hi, lo, np.clip(chosen.mean(axis=0), lo, hi))


def k_same_select(face, g: Gallery, p: KSameParams) -> np.ndarray:
    idx, dist = _neighbours(face, g, p.k, p.exclude_self)
    if p.selection_mode == "closest":
        pick = idx[0]
    elif p.selection_mode == "furthest":
        pick = _furthest(idx, dist)
    elif p.selection_mode == "random":
        pick = idx[np.random.default_rng(p.rng_seed).integers(len(idx))]
    else:
        raise ValueError(f"unknown selection_mode {p.selection_mode!r}")
    return g.faces[pick].copy()


def k_same_furthest(face, g: Gallery, p: KSameParams) -> np.ndarray:
    idx, dist = _neighbours(face, g, p.k, p.exclude_self)
    return g.faces[_furthest(idx, dist)].copy()


def k_same(face, g: Gallery, p: KSameParams) -> np.ndarray:
    """Dispatch on ``p.variant``."""
    if p.variant == "average":
        return k_same_average(face, g, p)
    if p.variant == "select":
        return k_same_select(face, g, p)
    if p.variant == "furthest":
        return k_same_furthest(face, g, p)
    raise ValueError(f"unknown k-Same variant {p.variant!r}")
