"""Pixel-buffer primitives: crop, bilinear resize, paste, channel bridging.

Resampling uses half-pixel centers with edge clamping. At unit scale the
sample points land exactly on source pixels, so a same-size resize
reproduces the input bytes bit for bit.
"""

from __future__ import annotations

import numpy as np

from .geometry import BBox


def crop(pixels: np.ndarray, box: BBox) -> np.ndarray:
    """Cut the box region out of an H x W x C array (copy)."""
    h, w = pixels.shape[:2]
    if box.x2 > w or box.y2 > h:
        raise ValueError(f"crop box ({box.x},{box.y},{box.w},{box.h}) exceeds image {w}x{h}")
    return np.array(pixels[box.y : box.y2, box.x : box.x2])


def bilinear_resize(pixels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize an H x W x C array to out_h x out_w with bilinear sampling.

    Input is promoted to float64 and the result stays float64; quantize
    separately so intermediate values are rounded exactly once.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"resize target must be positive, got {out_w}x{out_h}")
    src = np.asarray(pixels, dtype=np.float64)
    h, w = src.shape[:2]
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    np.clip(xs, 0.0, w - 1.0, out=xs)
    np.clip(ys, 0.0, h - 1.0, out=ys)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[np.newaxis, :, np.newaxis]
    fy = (ys - y0)[:, np.newaxis, np.newaxis]
    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Round non-negative float samples to uint8, ties upward."""
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)


def match_channels(pixels: np.ndarray, channels: int) -> np.ndarray:
    """Bridge between 1- and 3-channel buffers (replicate / average)."""
    have = pixels.shape[2]
    if have == channels:
        return pixels
    if have == 1 and channels == 3:
        return np.repeat(pixels, 3, axis=2)
    if have == 3 and channels == 1:
        return np.asarray(pixels, dtype=np.float64).mean(axis=2, keepdims=True)
    raise ValueError(f"cannot convert {have}-channel buffer to {channels} channels")


def resize_u8(pixels: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear-resize a uint8 buffer and quantize back to uint8."""
    return quantize_u8(bilinear_resize(pixels, out_w, out_h))
