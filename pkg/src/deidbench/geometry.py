"""Landmark alignment (crop to a canonical template) and blended reinsertion.

Coordinates are ``(x, y)`` in pixel units with integer values at pixel
centres. A :class:`SimilarityTransform` maps *source image* coordinates to
*aligned face* coordinates; reinsertion uses its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLandmarks, SingularTransform
from .imgcore import PixelRect

# 5-point ArcFace template for a 112x112 crop: left eye, right eye, nose tip,
# left mouth corner, right mouth corner.
ARCFACE_TEMPLATE_112 = np.array([
    [38.2946, 51.6963],
    [73.5318, 51.5014],
    [56.0252, 71.7366],
    [41.5493, 92.3655],
    [70.7299, 92.2041],
])

DEFAULT_CROP_SIZE = 112


def template_for(size: int, template=None) -> np.ndarray:
    """Template landmarks for a ``size x size`` crop (scaled from the 112 template)."""
    base = ARCFACE_TEMPLATE_112 if template is None else np.asarray(template, float)
    if template is None:
        return base * (size / 112.0)
    return base


def as_landmarks(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape != (5, 2):
        raise DegenerateLandmarks(f"expected 5 (x, y) landmarks, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DegenerateLandmarks("landmarks contain non-finite coordinates")
    return pts


def _check_spread(pts: np.ndarray, name: str) -> None:
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[0] == 0.0 or sv[1] <= 1e-9 * sv[0]:
        raise DegenerateLandmarks(f"{name} landmarks are coincident or collinear")


@dataclass(frozen=True)
class SimilarityTransform:
    """``p' = scale * R(rotation) @ p + translation`` stored as a 2x3 matrix."""

    matrix: np.ndarray

    @classmethod
    def from_params(cls, scale=1.0, rotation=0.0, translation=(0.0, 0.0)):
        c, s = np.cos(rotation), np.sin(rotation)
        m = np.array([[scale * c, -scale * s, translation[0]],
                      [scale * s, scale * c, translation[1]]], dtype=np.float64)
        return cls(m)

    @classmethod
    def identity(cls):
        return cls(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    @property
    def linear(self) -> np.ndarray:
        return self.matrix[:, :2]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:, 2]

    @property
    def scale(self) -> float:
        return float(np.sqrt(abs(np.linalg.det(self.linear))))

    @property
    def rotation(self) -> float:
        return float(np.arctan2(self.matrix[1, 0], self.matrix[0, 0]))

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.linear.T + self.translation

    def inverse(self) -> "SimilarityTransform":
        det = np.linalg.det(self.linear)
        if not np.isfinite(det) or abs(det) < 1e-12:
            raise SingularTransform("transform is not invertible")
        inv = np.linalg.inv(self.linear)
        return SimilarityTransform(np.hstack([inv, (-inv @ self.translation)[:, None]]))

    def compose(self, first: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equivalent to applying ``first`` and then ``self``."""
        lin = self.linear @ first.linear
        return SimilarityTransform(np.hstack([lin, (self.linear @ first.translation + self.translation)[:, None]]))


def estimate_similarity(src, template) -> SimilarityTransform:
    """Least-squares similarity (no reflection) taking ``src`` onto ``template``.

    Closed-form Umeyama estimate: the rotation comes from the SVD of the
    cross-covariance, with the last singular direction flipped when needed to
    keep ``det(R) = +1``.
    """
    src = as_landmarks(src)
    dst = as_landmarks(template)
    _check_spread(src, "source")
    _check_spread(dst, "template")
    src_mean, dst_mean = src.mean(axis=0), dst.mean(axis=0)
    src_c, dst_c = src - src_mean, dst - dst_mean
    cov = dst_c.T @ src_c / len(src)
    u, sv, vt = np.linalg.svd(cov)
    d = np.array([1.0, 1.0])
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        d[1] = -1.0
    rot = u @ np.diag(d) @ vt
    scale = float(sv @ d) / float(np.mean(np.sum(src_c ** 2, axis=1)))
    if scale <= 0:
        raise DegenerateLandmarks("landmark sets cannot be related by a proper similarity")
    trans = dst_mean - scale * rot @ src_mean
    return SimilarityTransform(np.hstack([scale * rot, trans[:, None]]))


def residual(t: SimilarityTransform, src, template) -> float:
    """Sum of squared landmark transfer errors."""
    return float(np.sum((t.apply(src) - np.asarray(template, float)) ** 2))


def sample_bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Edge-clamped bilinear lookup at float coordinates; returns ``xs.shape + (C,)``."""
    h, w = img.shape[:2]
    xs = np.clip(xs, 0.0, w - 1)
    ys = np.clip(ys, 0.0, h - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    # gather on the flattened raster; much cheaper than 2-D fancy indexing
    flat = img.reshape(h * w, -1)
    r0, r1 = y0 * w, y1 * w
    top = np.take(flat, r0 + x0, axis=0) * (1.0 - fx) + np.take(flat, r0 + x1, axis=0) * fx
    bottom = np.take(flat, r1 + x0, axis=0) * (1.0 - fx) + np.take(flat, r1 + x1, axis=0) * fx
    return top * (1.0 - fy) + bottom * fy


def warp_to_template(img: np.ndarray, t: SimilarityTransform, size: int) -> np.ndarray:
    """Aligned ``size x size`` crop: ``out(p) = img(T^-1 p)``."""
    if size < 1:
        raise ValueError("size must be >= 1")
    inv = t.inverse()
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    src = inv.apply(np.stack([xs.ravel(), ys.ravel()], axis=1))
    out = sample_bilinear(img, src[:, 0].reshape(size, size), src[:, 1].reshape(size, size))
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class BlendSpec:
    """Feathered alpha ramp of total width ``feather`` (aligned-face pixels),
    centred on the face square boundary. ``feather=0`` gives a hard mask."""

    feather: float = 8.0


@dataclass(frozen=True)
class AlignedFace:
    face: np.ndarray
    transform: SimilarityTransform
    source_rect_hint: PixelRect


def face_quad(t: SimilarityTransform, size: int) -> np.ndarray:
    """Corners of the aligned square mapped back to source coordinates."""
    s = size - 1
    return t.inverse().apply([[0, 0], [s, 0], [s, s], [0, s]])


def _quad_bbox(t: SimilarityTransform, size: int, margin: float, width: int, height: int):
    quad = face_quad(t, size)
    lo = np.floor(quad.min(axis=0) - margin).astype(int)
    hi = np.ceil(quad.max(axis=0) + margin).astype(int)
    x0, y0 = max(lo[0], 0), max(lo[1], 0)
    x1, y1 = min(hi[0], width - 1), min(hi[1], height - 1)
    return x0, y0, x1, y1


def align_face(img: np.ndarray, landmarks, template=None, size: int = DEFAULT_CROP_SIZE) -> AlignedFace:
    t = estimate_similarity(landmarks, template_for(size, template))
    x0, y0, x1, y1 = _quad_bbox(t, size, 0.0, img.shape[1], img.shape[0])
    hint = PixelRect(int(x0), int(y0), int(max(x1 - x0 + 1, 1)), int(max(y1 - y0 + 1, 1)))
    return AlignedFace(warp_to_template(img, t, size), t, hint)


def blend_alpha(px: np.ndarray, py: np.ndarray, size: int, feather: float) -> np.ndarray:
    """Alpha for aligned-space points against the square ``[0, size-1]^2``."""
    hi = size - 1
    inside = np.minimum(np.minimum(px, py), np.minimum(hi - px, hi - py))
    dx = np.maximum(np.maximum(-px, px - hi), 0.0)
    dy = np.maximum(np.maximum(-py, py - hi), 0.0)
    signed = np.where(inside >= 0, inside, -np.hypot(dx, dy))
    if feather <= 0:
        return (signed >= 0).astype(np.float64)
    return np.clip(0.5 + signed / feather, 0.0, 1.0)


def reinsert(background: np.ndarray, deid_face: np.ndarray, t: SimilarityTransform,
             blend: BlendSpec = BlendSpec()) -> np.ndarray:
    """Paste ``deid_face`` back through ``T^-1`` with feathered blending.

    Pixels whose alpha is zero are copied from ``background`` untouched.
    """
    size = deid_face.shape[0]
    if deid_face.shape[1] != size:
        raise ValueError("de-identified face must be square")
    if deid_face.shape[2] != background.shape[2]:
        raise ValueError("channel count mismatch between face and background")
    t.inverse()  # raises SingularTransform
    margin = max(blend.feather, 0.0) / 2.0 / t.scale + 1.0
    h, w = background.shape[:2]
    x0, y0, x1, y1 = _quad_bbox(t, size, margin, w, h)
    out = background.copy()
    if x1 < x0 or y1 < y0:
        return out
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1].astype(np.float64)
    p = t.apply(np.stack([xs.ravel(), ys.ravel()], axis=1))
    px, py = p[:, 0].reshape(xs.shape), p[:, 1].reshape(xs.shape)
    alpha = blend_alpha(px, py, size, blend.feather)
    if not np.any(alpha > 0):
        return out
    face_px = sample_bilinear(deid_face, px, py)
    region = out[y0:y1 + 1, x0:x1 + 1]
    a = alpha[..., None]
    mixed = a * face_px + (1.0 - a) * region
    out[y0:y1 + 1, x0:x1 + 1] = np.where(a > 0, np.clip(mixed, 0.0, 1.0), region)
    return out
