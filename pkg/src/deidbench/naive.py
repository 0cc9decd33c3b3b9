"""Naive de-identifiers: Gaussian blur, pixelation and solid masks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import InvalidKernel
from .imgcore import LUMA, resize


@dataclass(frozen=True)
class BlurParams:
    kernel_size: int | None = None  # None: 51, or 2*ceil(3*sigma)+1 when sigma > 0
    sigma: float = 0.0

    def resolved(self) -> tuple[int, float]:
        """``(kernel_size, effective_sigma)`` after applying the defaults."""
        if self.sigma < 0:
            raise InvalidKernel("sigma must be >= 0")
        k = self.kernel_size
        if k is None:
            k = 2 * math.ceil(3 * self.sigma) + 1 if self.sigma > 0 else 51
        if k < 1 or k % 2 == 0:
            raise InvalidKernel(f"kernel_size must be a positive odd integer, got {k}")
        sigma = self.sigma if self.sigma > 0 else auto_sigma(k)
        return k, sigma


@dataclass(frozen=True)
class PixelateParams:
    block_size: int = 16
    interpolation: str = "nearest"


@dataclass(frozen=True)
class MaskParams:
    mask_color: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mask_type: str = "solid"


def auto_sigma(kernel_size: int) -> float:
    return 0.3 * ((kernel_size - 1) / 2 - 1) + 0.8


def gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian taps of odd length ``kernel_size``."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise InvalidKernel(f"kernel_size must be a positive odd integer, got {kernel_size}")
    if kernel_size == 1:
        return np.ones(1)
    x = np.arange(kernel_size) - (kernel_size - 1) / 2
    taps = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return taps / taps.sum()


def blur(face: np.ndarray, p: BlurParams = BlurParams()) -> np.ndarray:
    """Separable Gaussian blur with edge-clamped borders."""
    k, sigma = p.resolved()
    if k == 1:
        return face.copy()
    taps = gaussian_kernel(k, sigma)
    out = correlate1d(face, taps, axis=0, mode="nearest")
    out = correlate1d(out, taps, axis=1, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def block_means(face: np.ndarray, block: int) -> np.ndarray:
    """Area mean of each ``block x block`` cell (partial cells at the right/bottom edge)."""
    h, w, c = face.shape
    gh, gw = -(-h // block), -(-w // block)
    ys = np.arange(0, h, block)
    xs = np.arange(0, w, block)
    sums = np.add.reduceat(np.add.reduceat(face, ys, axis=0), xs, axis=1)
    cnt_y = np.minimum(ys + block, h) - ys
    cnt_x = np.minimum(xs + block, w) - xs
    means = sums / (cnt_y[:, None, None] * cnt_x[None, :, None])
    # constant cells keep their exact value so the mosaic is idempotent
    hi = np.maximum.reduceat(np.maximum.reduceat(face, ys, axis=0), xs, axis=1)
    lo = np.minimum.reduceat(np.minimum.reduceat(face, ys, axis=0), xs, axis=1)
    return np.where(hi == lo, hi, means).reshape(gh, gw, c)


def pixelate(face: np.ndarray, p: PixelateParams = PixelateParams()) -> np.ndarray:
    if p.block_size < 1:
        raise ValueError("block_size must be >= 1")
    if p.block_size == 1:
        return face.copy()
    h, w = face.shape[:2]
    grid = block_means(face, p.block_size)
    if p.interpolation == "nearest":
        out = np.repeat(np.repeat(grid, p.block_size, axis=0), p.block_size, axis=1)
        return out[:h, :w].copy()
    if p.interpolation == "linear":
        return resize(grid, w, h, "bilinear")
    raise ValueError(f"unknown interpolation {p.interpolation!r}")


def mask_color(p: MaskParams, rng_seed: int = 0) -> np.ndarray:
    if p.mask_type == "black":
        return np.zeros(3)
    if p.mask_type == "white":
        return np.ones(3)
    if p.mask_type == "random_color":
        return np.random.default_rng(rng_seed).uniform(0.0, 1.0, size=3)
    if p.mask_type == "solid":
        color = np.asarray(p.mask_color, dtype=np.float64)
        if color.shape != (3,) or np.any(color < 0) or np.any(color > 1):
            raise ValueError(f"mask_color must be an RGB triple in [0, 1], got {p.mask_color}")
        return color
    raise ValueError(f"unknown mask_type {p.mask_type!r}")


def mask(face: np.ndarray, p: MaskParams = MaskParams(), rng_seed: int = 0) -> np.ndarray:
    color = mask_color(p, rng_seed)
    if face.shape[2] == 1:
        gray = color[0] if np.all(color == color[0]) else color @ LUMA
        color = np.array([gray])
    return np.broadcast_to(color, face.shape).copy()
