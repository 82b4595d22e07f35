"""Minimal binary PGM/PPM writers (no imaging dependency)."""

from __future__ import annotations

import numpy as np


def write_pgm(path, gray: np.ndarray) -> None:
    """Write a 2-D uint8 array as binary PGM (P5)."""
    gray = np.asarray(gray)
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 array")
    h, w = gray.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(gray.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as binary PPM (P6)."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 array")
    h, w, _ = rgb.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(rgb.tobytes())


def to_gray(values: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Linear [lo, hi] -> [0, 255] mapping with clipping."""
    arr = np.asarray(values, dtype=np.float64)
    if hi <= lo:
        raise ValueError("hi must exceed lo")
    scaled = np.clip((arr - lo) / (hi - lo), 0.0, 1.0)
    return np.round(scaled * 255.0).astype(np.uint8)


def upscale(img: np.ndarray, factor: int) -> np.ndarray:
    """Nearest-neighbour upscaling along the two leading axes."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return np.repeat(np.repeat(img, factor, axis=0), factor, axis=1)
