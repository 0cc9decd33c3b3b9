"""Seeded synthetic faces and scenes with exact landmarks.

No real face data ships with the package; these generators give the tests and
demos images whose landmark geometry is known exactly.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .geometry import BlendSpec, SimilarityTransform, face_quad, reinsert, template_for
from .imgcore import PixelRect


def smooth_noise(h: int, w: int, channels: int, rng, sigma: float = 4.0) -> np.ndarray:
    """Band-limited noise rescaled to span [0.1, 0.9] per channel."""
    raw = rng.standard_normal((h, w, channels))
    out = np.stack([gaussian_filter(raw[:, :, c], sigma, mode="wrap") for c in range(channels)], axis=2)
    lo = out.min(axis=(0, 1), keepdims=True)
    hi = out.max(axis=(0, 1), keepdims=True)
    return 0.1 + 0.8 * (out - lo) / np.where(hi > lo, hi - lo, 1.0)


def synthetic_face(size: int = 112, channels: int = 3, rng=None) -> np.ndarray:
    """Smooth random texture with darker blobs at the template landmarks."""
    rng = np.random.default_rng(rng)
    face = smooth_noise(size, size, channels, rng, sigma=size / 16)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    for x, y in template_for(size):
        blob = np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2 * (size / 28) ** 2))
        face *= (1.0 - 0.5 * blob)[..., None]
    return np.clip(face, 0.0, 1.0)


def synthetic_scene(height: int = 200, width: int = 240, channels: int = 3, rng=None,
                    scale_range=(0.9, 1.4), max_rotation: float = 0.3, crop_size: int = 112):
    """Background with one synthetic face pasted at a random similarity pose.

    Returns ``(image, landmarks (5, 2), bbox PixelRect)``; landmarks are the
    template mapped into the scene, so alignment recovers the pose exactly.
    """
    rng = np.random.default_rng(rng)
    img = smooth_noise(height, width, channels, rng, sigma=6.0)
    face = synthetic_face(crop_size, channels, rng)
    for _ in range(100):
        s = rng.uniform(*scale_range)  # source pixels per crop pixel
        theta = rng.uniform(-max_rotation, max_rotation)
        fwd = SimilarityTransform.from_params(1.0 / s, theta)
        quad = fwd.inverse().apply([[0, 0], [crop_size - 1, 0], [crop_size - 1, crop_size - 1], [0, crop_size - 1]])
        span = quad.max(axis=0) - quad.min(axis=0)
        if span[0] + 5 > width or span[1] + 5 > height:
            continue
        ox = rng.uniform(2 - quad[:, 0].min(), width - 3 - quad[:, 0].max())
        oy = rng.uniform(2 - quad[:, 1].min(), height - 3 - quad[:, 1].max())
        inv = fwd.inverse()  # crop -> scene, before shifting into place
        to_src = SimilarityTransform(np.hstack([inv.linear, (inv.translation + [ox, oy])[:, None]]))
        t = to_src.inverse()
        break
    else:
        raise ValueError("scene too small for the requested face scale")
    img = reinsert(img, face, t, BlendSpec(0.0))
    landmarks = to_src.apply(template_for(crop_size))
    q = face_quad(t, crop_size)
    x0, y0 = np.floor(q.min(axis=0)).astype(int)
    x1, y1 = np.ceil(q.max(axis=0)).astype(int)
    x0, y0 = max(int(x0), 0), max(int(y0), 0)
    bbox = PixelRect(x0, y0, int(min(x1, width - 1)) - x0 + 1, int(min(y1, height - 1)) - y0 + 1)
    return img, landmarks, bbox
