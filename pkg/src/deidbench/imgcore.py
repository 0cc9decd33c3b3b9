"""Image representation, resampling and lossless file I/O.

An image is a ``numpy.ndarray`` of shape ``(H, W, C)`` with ``C`` in ``{1, 3}``
and float64 samples in ``[0, 1]``. Functions never modify their inputs.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .errors import FormatError, ImageIOError, InvalidSize, OutOfBounds

LUMA = np.array([0.299, 0.587, 0.114])

_SAVE_FORMATS = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}


@dataclass(frozen=True)
class PixelRect:
    """Axis-aligned pixel rectangle; ``(x0, y0)`` is the inclusive top-left."""

    x0: int
    y0: int
    w: int
    h: int

    def check(self, width: int, height: int) -> None:
        if self.w < 1 or self.h < 1:
            raise OutOfBounds(f"empty rectangle {self}")
        if self.x0 < 0 or self.y0 < 0 or self.x0 + self.w > width or self.y0 + self.h > height:
            raise OutOfBounds(f"{self} outside {width}x{height} image")

    def as_list(self) -> list[int]:
        return [self.x0, self.y0, self.w, self.h]


def as_image(data, copy: bool = False) -> np.ndarray:
    """Coerce ``data`` to the canonical ``(H, W, C)`` float64 layout, clamped to [0, 1]."""
    arr = np.array(data, dtype=np.float64, copy=copy)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise FormatError(f"expected (H, W, 1|3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidSize(f"empty image {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError("image contains non-finite samples")
    return np.clip(arr, 0.0, 1.0)


def quantize_8bit(img: np.ndarray) -> np.ndarray:
    """Round-half-up to 8-bit codes (0.5 -> 128)."""
    return np.clip(np.floor(np.asarray(img) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luma plane ``(H, W)`` of an RGB image; gray images pass through."""
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img @ LUMA


def load_image(path) -> np.ndarray:
    path = os.fspath(path)
    try:
        pil = PILImage.open(path)
        pil.load()
    except FileNotFoundError as exc:
        raise ImageIOError(f"no such file: {path}") from exc
    except PILImage.UnidentifiedImageError as exc:
        raise FormatError(f"unrecognised image file: {path}") from exc
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc
    if pil.format not in ("PNG", "PPM"):
        raise FormatError(f"{path}: unsupported codec {pil.format}")
    if pil.mode in ("P", "RGBA", "CMYK"):
        pil = pil.convert("RGB")
    elif pil.mode == "LA":
        pil = pil.convert("L")
    elif pil.mode not in ("L", "RGB"):
        raise FormatError(f"{path}: unsupported pixel mode {pil.mode}")
    codes = np.asarray(pil, dtype=np.uint8)
    if codes.ndim == 2:
        codes = codes[:, :, None]
    return codes.astype(np.float64) / 255.0


def save_image(img: np.ndarray, path) -> None:
    """Write an 8-bit PNG/PPM/PGM atomically (temp file then rename)."""
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    fmt = _SAVE_FORMATS.get(ext)
    if fmt is None:
        raise FormatError(f"unsupported output extension {ext!r}")
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise ImageIOError(f"directory does not exist: {parent}")
    codes = quantize_8bit(as_image(img))
    pil = PILImage.fromarray(codes[:, :, 0] if codes.shape[2] == 1 else codes)
    fd, tmp = tempfile.mkstemp(dir=parent, suffix=ext + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            pil.save(fh, format=fmt)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def crop(img: np.ndarray, rect: PixelRect) -> np.ndarray:
    rect.check(img.shape[1], img.shape[0])
    return img[rect.y0:rect.y0 + rect.h, rect.x0:rect.x0 + rect.w].copy()


def paste(img: np.ndarray, patch: np.ndarray, x0: int, y0: int) -> np.ndarray:
    """Return a copy of ``img`` with ``patch`` written at ``(x0, y0)``."""
    PixelRect(x0, y0, patch.shape[1], patch.shape[0]).check(img.shape[1], img.shape[0])
    out = img.copy()
    out[y0:y0 + patch.shape[0], x0:x0 + patch.shape[1]] = patch
    return out


def interp_matrix(n_out: int, n_in: int, mode: str = "bilinear") -> np.ndarray:
    """1-D resampling operator of shape ``(n_out, n_in)``.

    Pixel centres are aligned (``src = (i + 0.5) * n_in / n_out - 0.5``) and
    out-of-range taps are clamped to the edge.
    """
    scale = n_in / n_out
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    if mode == "nearest":
        src = np.minimum(np.floor((rows + 0.5) * scale).astype(int), n_in - 1)
        mat[rows, src] = 1.0
        return mat
    if mode != "bilinear":
        raise ValueError(f"unknown interpolation mode {mode!r}")
    src = np.clip((rows + 0.5) * scale - 0.5, 0.0, n_in - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    np.add.at(mat, (rows, i0), 1.0 - frac)
    np.add.at(mat, (rows, i1), frac)
    return mat


def resize(img: np.ndarray, w: int, h: int, mode: str = "bilinear") -> np.ndarray:
    if int(w) != w or int(h) != h or w < 1 or h < 1:
        raise InvalidSize(f"invalid target size {w}x{h}")
    ay = interp_matrix(int(h), img.shape[0], mode)
    ax = interp_matrix(int(w), img.shape[1], mode)
    out = np.einsum("yi,ijc,xj->yxc", ay, img, ax, optimize=True)
    return np.clip(out, 0.0, 1.0)
