import os

import numpy as np
import pytest

from deidbench.imgcore import save_image
from deidbench.pipeline.sources import DetectionRecord, write_detections
from deidbench.synthetic import synthetic_scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def quantized(img):
    return np.floor(np.asarray(img) * 255 + 0.5) / 255


def write_dataset(root, n=5, seed=0, identities=None, size=(160, 200)):
    """Synthetic scenes + manifest + detections under ``root``; returns
    ``(manifest, detections, [(image, landmarks, bbox)])``."""
    os.makedirs(os.path.join(root, "imgs"), exist_ok=True)
    lines, recs, scenes = [], [], []
    for i in range(n):
        img, lm, bb = synthetic_scene(size[0], size[1], rng=seed * 1000 + i, scale_range=(0.9, 1.2))
        img = quantized(img)
        rel = f"imgs/im{i:03d}.png"
        save_image(img, os.path.join(root, rel))
        ident = f"\t{identities[i]}" if identities else ""
        lines.append(f"im{i:03d}\t{rel}{ident}")
        recs.append(DetectionRecord(f"im{i:03d}", bb, lm, 0.99))
        scenes.append((img, lm, bb))
    manifest = os.path.join(root, "manifest.tsv")
    with open(manifest, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    dets = os.path.join(root, "dets.jsonl")
    write_detections(dets, recs)
    return manifest, dets, scenes


def write_config(path, text):
    with open(path, "w") as fh:
        fh.write(text)
    return path


def face_bbox(t, crop_size, width, height):
    from deidbench.geometry import face_quad
    from deidbench.imgcore import PixelRect

    q = face_quad(t, crop_size)
    x0, y0 = np.floor(q.min(axis=0)).astype(int)
    x1, y1 = np.ceil(q.max(axis=0)).astype(int)
    x0, y0 = max(int(x0), 0), max(int(y0), 0)
    return PixelRect(x0, y0, int(min(x1, width - 1)) - x0 + 1, int(min(y1, height - 1)) - y0 + 1)


def write_sequence(root, n=30, seed=0, static=False, size=(150, 200)):
    """A face drifting across a fixed background, one PNG per frame, plus
    per-frame detections. Returns ``(frames_dir, detections_path, frames)``."""
    from deidbench.geometry import BlendSpec, SimilarityTransform, reinsert, template_for
    from deidbench.synthetic import smooth_noise, synthetic_face

    rng = np.random.default_rng(seed)
    h, w = size
    bg = smooth_noise(h, w, 3, rng, sigma=6.0)
    face = synthetic_face(112, 3, rng)
    fdir = os.path.join(root, "frames")
    os.makedirs(fdir, exist_ok=True)
    recs, frames = [], []
    for i in range(n):
        dx = 0.0 if static else 1.5 * i
        to_src = SimilarityTransform.from_params(0.8, 0.05, (20.0 + dx, 20.0))  # crop -> frame
        t = to_src.inverse()
        img = quantized(reinsert(bg, face, t, BlendSpec(0.0)))
        save_image(img, os.path.join(fdir, f"frame{i}.png"))
        recs.append(DetectionRecord(i, face_bbox(t, 112, w, h), to_src.apply(template_for(112)), 0.95))
        frames.append(img)
    dets = os.path.join(root, "frame_dets.jsonl")
    write_detections(dets, recs)
    return fdir, dets, frames
