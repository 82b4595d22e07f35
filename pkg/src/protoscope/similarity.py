"""Similarity matrices between sensory states.

Two constructions from the sealed transition tensor:

* sensorimotor similarity: every sufficiently-sampled (state, motor) row
  whose peak successor probability clears the threshold credits that peak
  (argmax mode, the default) or every successor above the threshold
  (sum-over-threshold mode);
* sensory similarity: transition counts aggregated over all motors and
  row-normalized, ignoring the motor channel entirely.

Both are symmetrized by averaging with the transpose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transitions import TransitionTensor

MODE_ARGMAX = "argmax"
MODE_SUM_OVER_E = "sum_over_e"


@dataclass
class SimilarityParams:
    n_min: int = 20          # rows with total <= n_min are discarded (strict >)
    p_sim: float = 0.3
    mode: str = MODE_ARGMAX

    def __post_init__(self):
        if self.n_min < 0:
            raise ValueError("n_min must be >= 0")
        if not 0.0 <= self.p_sim <= 1.0:
            raise ValueError("p_sim must be in [0, 1]")
        if self.mode not in (MODE_ARGMAX, MODE_SUM_OVER_E):
            raise ValueError(f"unknown mode {self.mode!r}")


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def build_lambda_sm(T: TransitionTensor, params: SimilarityParams | None = None) -> np.ndarray:
    """Sensorimotor similarity matrix (K x K, symmetric, nonnegative)."""
    params = params or SimilarityParams()
    K = T.K
    out = np.zeros((K, K), dtype=np.float64)
    if T.nnz == 0:
        return out

    admitted_rows = np.flatnonzero(T.row_totals > params.n_min)
    if admitted_rows.size == 0:
        return out
    s_a_all = (T.row_keys // T.M).astype(np.int64)

    if params.mode == MODE_ARGMAX:
        starts = T.row_ptr[:-1]
        row_max = np.maximum.reduceat(T.counts, starts)
        # First (lowest s_b) position attaining the row maximum: successors
        # are stored in ascending s_b within each row.
        nnz = T.nnz
        row_of_key = np.repeat(np.arange(len(starts)), np.diff(T.row_ptr))
        at_max = T.counts == row_max[row_of_key]
        pos = np.where(at_max, np.arange(nnz), nnz)
        argmax_pos = np.minimum.reduceat(pos, starts)

        p_max = row_max[admitted_rows] / T.row_totals[admitted_rows]
        keep = p_max > params.p_sim
        rows = admitted_rows[keep]
        s_a = s_a_all[rows]
        s_b = T.keys[argmax_pos[rows]] % K
        np.add.at(out, (s_a, s_b), p_max[keep])
    else:
        row_of_key = np.repeat(np.arange(len(T.row_keys)), np.diff(T.row_ptr))
        admitted_key = T.row_totals[row_of_key] > params.n_min
        p = T.counts / T.row_totals[row_of_key]
        keep = admitted_key & (p >= params.p_sim)
        s_a = s_a_all[row_of_key[keep]]
        s_b = T.keys[keep] % K
        np.add.at(out, (s_a, s_b), p[keep])

    return _symmetrize(out)


def build_lambda_s(T: TransitionTensor) -> np.ndarray:
    """Motor-blind sensory similarity: p(s_b | s_a) aggregated over motors,
    rows normalized (zero rows stay zero), then symmetrized."""
    K = T.K
    if T.nnz == 0:
        return np.zeros((K, K), dtype=np.float64)
    s_a = T.keys // (K * T.M)
    s_b = T.keys % K
    agg = np.bincount(s_a * K + s_b, weights=T.counts.astype(np.float64),
                      minlength=K * K).reshape(K, K)
    row_sums = agg.sum(axis=1)
    norm = np.divide(agg, row_sums[:, None], out=np.zeros_like(agg),
                     where=row_sums[:, None] > 0)
    return _symmetrize(norm)


def similarity_to_csv(matrix: np.ndarray, path) -> None:
    """K rows of K comma-separated decimal values; row i = state i."""
    with open(path, "w") as f:
        for row in np.asarray(matrix, dtype=np.float64):
            f.write(",".join(repr(float(v)) for v in row))
            f.write("\n")
