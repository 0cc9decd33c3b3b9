"""Differentiable embedder contract and an analytic toy embedder.

Any object with ``embed(x) -> (d,)`` (unit norm) and
``grad_sim(x, target) -> array like x`` (gradient of ``cos(embed(x), target)``)
can drive the adversarial attacks. ``sim_and_grad`` is optional and used when
present to save a forward pass.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .imgcore import LUMA


class GradientOracle(Protocol):
    def embed(self, x: np.ndarray) -> np.ndarray: ...

    def grad_sim(self, x: np.ndarray, target: np.ndarray) -> np.ndarray: ...


def _cell_edges(n: int, cells: int) -> np.ndarray:
    return (np.arange(cells + 1) * n) // cells


class ToyEmbedder:
    """``embed(x) = normalize(W @ cellmeans_8x8(luma(x)))``.

    ``W`` is a seeded Gaussian matrix whose rows are centred to zero mean, so
    the embedding ignores a global brightness offset and responds to the
    spatial layout of the face instead. Gradients are exact.
    """

    grid = 8

    def __init__(self, seed: int = 0, dim: int = 128):
        if dim < 2:
            raise ValueError("embedding dimension must be >= 2")
        self.seed = seed
        self.dim = dim
        w = np.random.default_rng(seed).standard_normal((dim, self.grid * self.grid))
        self.W = w - w.mean(axis=1, keepdims=True)

    def _layout(self, shape):
        h, w = shape[:2]
        if h < self.grid or w < self.grid:
            raise ValueError(f"toy embedder needs images of at least {self.grid}x{self.grid}")
        ey, ex = _cell_edges(h, self.grid), _cell_edges(w, self.grid)
        counts = np.diff(ey)[:, None] * np.diff(ex)[None, :]
        return ey, ex, counts

    def _gray(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x[:, :, 0] if x.shape[2] == 1 else x @ LUMA

    def features(self, x) -> np.ndarray:
        ey, ex, counts = self._layout(x.shape)
        g = self._gray(x)
        sums = np.add.reduceat(np.add.reduceat(g, ey[:-1], axis=0), ex[:-1], axis=1)
        return (sums / counts).ravel()

    def _forward(self, x):
        y = self.W @ self.features(x)
        norm = np.linalg.norm(y)
        return y, max(norm, 1e-12)

    def embed(self, x) -> np.ndarray:
        y, norm = self._forward(x)
        return y / norm

    def sim_and_grad(self, x, target):
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(target, dtype=np.float64)
        y, norm = self._forward(x)
        e = y / norm
        sim = float(e @ t)
        d_y = (t - sim * e) / norm
        d_cells = (self.W.T @ d_y).reshape(self.grid, self.grid)
        ey, ex, counts = self._layout(x.shape)
        per_px = d_cells / counts
        d_gray = np.repeat(np.repeat(per_px, np.diff(ey), axis=0), np.diff(ex), axis=1)
        if x.shape[2] == 1:
            return sim, d_gray[:, :, None]
        return sim, d_gray[:, :, None] * LUMA

    def grad_sim(self, x, target) -> np.ndarray:
        return self.sim_and_grad(x, target)[1]


def toy_embedder(seed: int = 0, dim: int = 128) -> ToyEmbedder:
    return ToyEmbedder(seed, dim)
