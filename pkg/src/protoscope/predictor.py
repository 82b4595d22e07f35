"""Predictive queries on the transition tensor and the reconstruction
canvas: for one reference state, the modal predicted patch of every
confident movement is stamped at its displacement, and overlapping stamps
are averaged per pixel (up to 9 movements predict each pixel).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .explorer import MotorSpace
from .imageio import upscale, write_ppm
from .similarity import SimilarityParams
from .transitions import TransitionTensor

# Pixel-value palette for renders (values 1..3), certainty-scaled.
_PALETTE = np.array([[50, 80, 230], [70, 200, 90], [235, 200, 60]], dtype=np.float64)
_AMBIGUOUS_TINT = np.array([255, 70, 170], dtype=np.float64)

AMBIGUITY_MIN_CERTAINTY = 0.5
AMBIGUITY_MIN_GAP = 1.0


def predict_next(T: TransitionTensor, state: int, motor: int,
                 params: SimilarityParams | None = None):
    """Conditional next-state distribution, or None when the pair lacks
    statistical support (NO_CONFIDENT_PREDICTION)."""
    params = params or SimilarityParams()
    if T.total(state, motor) <= params.n_min:
        return None
    return T.conditional(state, motor)


@dataclass
class Canvas:
    """Per-pixel reconstruction around the reference sensor window.

    Arrays are indexed [row, col] over the full reachable extent; the
    reference window's top-left cell sits at ``origin``. Pixels no
    confident movement covers are EMPTY: value NaN, certainty 0.
    """

    state: int
    values: np.ndarray      # float64, NaN where EMPTY
    certainty: np.ndarray   # float64 in [0, 1]
    ambiguous: np.ndarray   # bool
    origin: tuple[int, int]

    @property
    def empty_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def window_mask(self) -> np.ndarray:
        """True over the reference sensor window itself."""
        m = np.zeros(self.values.shape, dtype=bool)
        r, c = self.origin
        m[r:r + 3, c:c + 3] = True
        return m

    def to_json_dict(self) -> dict:
        pixels = []
        h, w = self.values.shape
        for r in range(h):
            for c in range(w):
                if np.isnan(self.values[r, c]):
                    continue
                pixels.append({
                    "dz": [r - self.origin[0], c - self.origin[1]],
                    "value": float(self.values[r, c]),
                    "certainty": float(self.certainty[r, c]),
                    "ambiguous": bool(self.ambiguous[r, c]),
                })
        return {"state": int(self.state), "shape": [h, w],
                "origin": list(self.origin), "pixels": pixels}


def reconstruct_canvas(T: TransitionTensor, codebook: Codebook, state: int,
                       space: MotorSpace,
                       params: SimilarityParams | None = None) -> Canvas:
    """Mosaic of modal predictions over all confident movements.

    A movement is admitted when its row has more than n_min samples and
    its peak successor probability exceeds p_sim; the peak state's
    centroid patch is stamped at the movement's displacement. Each canvas
    pixel averages its covering stamps weighted by their peak
    probabilities; certainty is the strongest contribution, and a pixel is
    flagged ambiguous when two confident (>= 0.5) contributions disagree
    by a full pixel-value step.
    """
    params = params or SimilarityParams()
    p = space.anchors_per_axis
    size = 2 * p + 1
    origin = (p - 1, p - 1)

    sum_pv = np.zeros((size, size))
    sum_p = np.zeros((size, size))
    max_p = np.zeros((size, size))
    conf_lo = np.full((size, size), np.inf)
    conf_hi = np.full((size, size), -np.inf)

    lo = int(np.searchsorted(T.row_keys, state * T.M))
    hi = int(np.searchsorted(T.row_keys, (state + 1) * T.M))
    for i in range(lo, hi):
        total = T.row_totals[i]
        if total <= params.n_min:
            continue
        motor = int(T.row_keys[i] % T.M)
        if motor >= space.n_move:
            continue  # rotate carries no displacement
        a, b = T.row_ptr[i], T.row_ptr[i + 1]
        counts = T.counts[a:b]
        peak = int(np.argmax(counts))  # first max = lowest successor state
        p_max = float(counts[peak]) / float(total)
        if p_max <= params.p_sim:
            continue
        modal_state = int(T.keys[a + peak] % T.K)
        patch = codebook.centroid_patch(modal_state)
        dr, dc = space.displacement(motor)
        r, c = origin[0] + dr, origin[1] + dc
        sum_pv[r:r + 3, c:c + 3] += p_max * patch
        sum_p[r:r + 3, c:c + 3] += p_max
        np.maximum(max_p[r:r + 3, c:c + 3], p_max, out=max_p[r:r + 3, c:c + 3])
        if p_max >= AMBIGUITY_MIN_CERTAINTY:
            np.minimum(conf_lo[r:r + 3, c:c + 3], patch, out=conf_lo[r:r + 3, c:c + 3])
            np.maximum(conf_hi[r:r + 3, c:c + 3], patch, out=conf_hi[r:r + 3, c:c + 3])

    covered = sum_p > 0
    values = np.full((size, size), np.nan)
    values[covered] = sum_pv[covered] / sum_p[covered]
    spread = conf_hi - conf_lo
    ambiguous = np.isfinite(spread) & (spread >= AMBIGUITY_MIN_GAP)
    return Canvas(state, values, max_p, ambiguous, origin)


def canvas_to_ppm(canvas: Canvas, path, scale: int = 8) -> None:
    """Render: value -> 3-color palette scaled by certainty; ambiguous
    pixels tinted with the reserved color; EMPTY pixels black."""
    h, w = canvas.values.shape
    rgb = np.zeros((h, w, 3), dtype=np.float64)
    filled = ~canvas.empty_mask
    idx = np.clip(np.round(canvas.values[filled]).astype(np.int64), 1, 3) - 1
    rgb[filled] = _PALETTE[idx] * canvas.certainty[filled][:, None]
    rgb[canvas.ambiguous] = _AMBIGUOUS_TINT
    write_ppm(path, upscale(np.round(rgb).astype(np.uint8), scale))


def canvas_to_json(canvas: Canvas, path) -> None:
    with open(path, "w") as f:
        json.dump(canvas.to_json_dict(), f, sort_keys=True)


def canvas_from_json_dict(payload: dict) -> Canvas:
    h, w = payload["shape"]
    values = np.full((h, w), np.nan)
    certainty = np.zeros((h, w))
    ambiguous = np.zeros((h, w), dtype=bool)
    origin = tuple(payload["origin"])
    for px in payload["pixels"]:
        r, c = px["dz"][0] + origin[0], px["dz"][1] + origin[1]
        values[r, c] = px["value"]
        certainty[r, c] = px["certainty"]
        ambiguous[r, c] = px["ambiguous"]
    return Canvas(payload["state"], values, certainty, ambiguous, origin)
