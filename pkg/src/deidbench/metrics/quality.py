"""Full-reference pixel fidelity: PSNR and single-scale SSIM (with its gradient)."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import ShapeMismatch, TooSmall
from ..imgcore import LUMA, to_gray

SSIM_WIN = 11
SSIM_SIGMA = 1.5
C1 = 0.01 ** 2
C2 = 0.03 ** 2
PSNR_CAP = 99.0


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, cap: float = PSNR_CAP) -> float:
    """Peak signal-to-noise ratio in dB for unit peak; identical inputs give ``cap``."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float(cap)
    return min(10.0 * np.log10(1.0 / mse), float(cap))


def ssim_window() -> np.ndarray:
    x = np.arange(SSIM_WIN) - SSIM_WIN // 2
    taps = np.exp(-(x ** 2) / (2 * SSIM_SIGMA ** 2))
    return taps / taps.sum()


_WIN = ssim_window()
_HALF = SSIM_WIN // 2


def _filt(x):
    """Valid-region Gaussian window average."""
    out = correlate1d(x, _WIN, axis=0, mode="constant")
    out = correlate1d(out, _WIN, axis=1, mode="constant")
    return out[_HALF:-_HALF, _HALF:-_HALF]


def _filt_adjoint(m, shape):
    full = np.zeros(shape)
    full[_HALF:-_HALF, _HALF:-_HALF] = m
    out = correlate1d(full, _WIN[::-1], axis=0, mode="constant")
    return correlate1d(out, _WIN[::-1], axis=1, mode="constant")


def _plane(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return to_gray(img)


def _ssim_terms(x, y):
    if min(x.shape) < SSIM_WIN:
        raise TooSmall(f"SSIM needs both sides >= {SSIM_WIN}, got {x.shape}")
    mx, my = _filt(x), _filt(y)
    sxx = _filt(x * x) - mx * mx
    syy = _filt(y * y) - my * my
    sxy = _filt(x * y) - mx * my
    a1 = 2 * mx * my + C1
    a2 = 2 * sxy + C2
    b1 = mx * mx + my * my + C1
    b2 = sxx + syy + C2
    return mx, my, a1, a2, b1, b2


def ssim_map(a, b) -> np.ndarray:
    a, b = _check_pair(a, b)
    _, _, a1, a2, b1, b2 = _ssim_terms(_plane(a), _plane(b))
    return (a1 * a2) / (b1 * b2)


def ssim(a, b) -> float:
    """Mean local SSIM (11x11 Gaussian window, sigma 1.5) on luma."""
    return float(np.mean(ssim_map(a, b)))


def ssim_and_grad(x, ref):
    """``(ssim(x, ref), d ssim / d x)`` with the gradient in the shape of ``x``."""
    x, ref = _check_pair(x, ref)
    px, py = _plane(x), _plane(ref)
    mx, my, a1, a2, b1, b2 = _ssim_terms(px, py)
    s = (a1 * a2) / (b1 * b2)
    n = s.size
    d_mu = 2 * my * a2 / (b1 * b2) - 2 * mx * s / b1
    d_var = -s / b2
    d_cov = 2 * a1 / (b1 * b2)
    m1 = d_mu - 2 * mx * d_var - my * d_cov
    g = (_filt_adjoint(m1, px.shape)
         + 2 * px * _filt_adjoint(d_var, px.shape)
         + py * _filt_adjoint(d_cov, px.shape)) / n
    if x.ndim == 3 and x.shape[2] == 3:
        g = g[:, :, None] * LUMA
    elif x.ndim == 3:
        g = g[:, :, None]
    return float(np.mean(s)), g
