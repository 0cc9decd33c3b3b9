"""Frechet distance between Gaussians fitted to two feature sets."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, NumericalError

NEG_EIG_TOL = 1e-6


def feature_stats(vectors) -> tuple[np.ndarray, np.ndarray]:
    """Mean and unbiased covariance; diagonal shrinkage of ``1e-6 * tr / d`` when ``n <= d``."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or len(x) < 2:
        raise DimensionMismatch("feature set must be an (n >= 2, d) matrix")
    if not np.all(np.isfinite(x)):
        raise NumericalError("feature set contains non-finite entries")
    n, d = x.shape
    mu = x.mean(axis=0)
    xc = x - mu
    cov = xc.T @ xc / (n - 1)
    if n <= d:
        cov = cov + np.eye(d) * (1e-6 * np.trace(cov) / d)
    return mu, cov


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((mat + mat.T) / 2)
    if w.min() < -NEG_EIG_TOL:
        raise NumericalError(f"covariance has eigenvalue {w.min():.3g} < 0")
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.T


def frechet_distance(mu1, cov1, mu2, cov2) -> float:
    """``|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2))``.

    ``tr((S1 S2)^(1/2))`` is the sum of square roots of the eigenvalues of
    the symmetric matrix ``S1^(1/2) S2 S1^(1/2)``.
    """
    mu1, mu2 = np.asarray(mu1, float), np.asarray(mu2, float)
    cov1, cov2 = np.asarray(cov1, float), np.asarray(cov2, float)
    if mu1.shape != mu2.shape or cov1.shape != cov2.shape:
        raise DimensionMismatch("feature dimensions differ")
    root1 = _psd_sqrt(cov1)
    inner = root1 @ cov2 @ root1
    w = np.linalg.eigvalsh((inner + inner.T) / 2)
    if w.min() < -NEG_EIG_TOL:
        raise NumericalError(f"product covariance has eigenvalue {w.min():.3g} < 0")
    tr_cross = float(np.sum(np.sqrt(np.clip(w, 0, None))))
    diff = mu1 - mu2
    value = float(diff @ diff + np.trace(cov1) + np.trace(cov2) - 2.0 * tr_cross)
    return max(value, 0.0)


def fid(real, gen) -> float:
    real = np.asarray(real, dtype=np.float64)
    gen = np.asarray(gen, dtype=np.float64)
    if real.ndim != 2 or gen.ndim != 2 or real.shape[1] != gen.shape[1]:
        raise DimensionMismatch(f"feature dimension mismatch: {real.shape} vs {gen.shape}")
    return frechet_distance(*feature_stats(real), *feature_stats(gen))
