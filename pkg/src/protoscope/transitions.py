"""Sparse count tensor over (state, motor, next state) transitions.

Counts are stored, not probabilities: the statistical-relevance guard in
the similarity construction needs raw visit counts, and conditional
distributions are cheap derived views. Storage is a sorted array of packed
keys plus a CSR-style index over the (state, motor) rows, so memory scales
with the number of distinct observed triplets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


def pack_keys(s_a, m, s_b, K: int, M: int) -> np.ndarray:
    return (np.asarray(s_a, dtype=np.int64) * M + np.asarray(m)) * K + np.asarray(s_b)


@dataclass
class TransitionTensor:
    """Sealed, immutable transition counts.

    ``keys`` are sorted packed triplets ((s_a * M + m) * K + s_b);
    ``row_ptr`` delimits the runs of equal (s_a, m) so per-row reductions
    (totals, maxima) are single vector operations.
    """

    K: int
    M: int
    keys: np.ndarray        # int64, sorted
    counts: np.ndarray      # int64, aligned with keys
    row_keys: np.ndarray = field(init=False)   # int64: s_a * M + m per row
    row_ptr: np.ndarray = field(init=False)    # int64, len n_rows + 1
    row_totals: np.ndarray = field(init=False)

    def __post_init__(self):
        rows = self.keys // self.K
        change = np.flatnonzero(np.diff(rows)) + 1
        starts = np.concatenate(([0], change)) if len(rows) else np.zeros(0, dtype=np.int64)
        self.row_keys = rows[starts] if len(rows) else np.zeros(0, dtype=np.int64)
        self.row_ptr = np.concatenate((starts, [len(self.keys)])).astype(np.int64)
        self.row_totals = (np.add.reduceat(self.counts, starts)
                           if len(self.keys) else np.zeros(0, dtype=np.int64))

    @property
    def n_triplets(self) -> int:
        return int(self.counts.sum())

    @property
    def nnz(self) -> int:
        return len(self.keys)

    def _row_index(self, s_a: int, m: int) -> int | None:
        rk = s_a * self.M + m
        i = int(np.searchsorted(self.row_keys, rk))
        if i < len(self.row_keys) and self.row_keys[i] == rk:
            return i
        return None

    def total(self, s_a: int, m: int) -> int:
        i = self._row_index(s_a, m)
        return 0 if i is None else int(self.row_totals[i])

    def successors(self, s_a: int, m: int) -> tuple[np.ndarray, np.ndarray]:
        """Observed next states and their counts (empty arrays if none)."""
        i = self._row_index(s_a, m)
        if i is None:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.keys[lo:hi] % self.K, self.counts[lo:hi].copy()

    def conditional(self, s_a: int, m: int):
        """Empirical p(s_b | s_a, m) as (states, probs), or None if the
        pair was never observed (UNOBSERVED)."""
        states, counts = self.successors(s_a, m)
        if len(states) == 0:
            return None
        return states, counts / counts.sum()

    def count(self, s_a: int, m: int, s_b: int) -> int:
        key = (s_a * self.M + m) * self.K + s_b
        i = int(np.searchsorted(self.keys, key))
        if i < len(self.keys) and self.keys[i] == key:
            return int(self.counts[i])
        return 0

    def self_transition_rate(self, motor: int) -> float:
        """Fraction of transitions under ``motor`` that kept the same state."""
        m_of_key = (self.keys // self.K) % self.M
        sel = m_of_key == motor
        total = int(self.counts[sel].sum())
        if total == 0:
            return float("nan")
        diag = sel & (self.keys % self.K == self.keys // (self.K * self.M))
        return float(self.counts[diag].sum()) / total

    def to_csv(self, path) -> None:
        """Debug dump as (s_a, m, s_b, count) rows; not a stable format."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["s_a", "m", "s_b", "count"])
            s_a = self.keys // (self.K * self.M)
            m = (self.keys // self.K) % self.M
            s_b = self.keys % self.K
            for row in zip(s_a.tolist(), m.tolist(), s_b.tolist(), self.counts.tolist()):
                writer.writerow(row)


class TensorAccumulator:
    """Single-writer accumulator; seal() produces the immutable tensor."""

    def __init__(self, K: int, M: int, consolidate_every: int = 16):
        self.K = int(K)
        self.M = int(M)
        self._buckets: list[tuple[np.ndarray, np.ndarray]] = []
        self._every = consolidate_every

    def add(self, s_a, m, s_b) -> None:
        s_a = np.asarray(s_a, dtype=np.int64)
        m = np.asarray(m, dtype=np.int64)
        s_b = np.asarray(s_b, dtype=np.int64)
        if not (len(s_a) == len(m) == len(s_b)):
            raise ValueError("triplet arrays must have equal length")
        if len(s_a) == 0:
            return
        if m.max() >= self.M or m.min() < 0:
            raise ValueError(f"motor index outside [0, {self.M})")
        if s_a.max() >= self.K or s_b.max() >= self.K or min(s_a.min(), s_b.min()) < 0:
            raise ValueError(f"state index outside [0, {self.K})")
        keys, counts = np.unique(pack_keys(s_a, m, s_b, self.K, self.M), return_counts=True)
        self._buckets.append((keys, counts))
        if len(self._buckets) >= self._every:
            self._consolidate()

    def _consolidate(self) -> None:
        if len(self._buckets) <= 1:
            return
        keys = np.concatenate([k for k, _ in self._buckets])
        counts = np.concatenate([c for _, c in self._buckets])
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        counts = counts[order]
        starts = np.concatenate(([0], np.flatnonzero(np.diff(keys)) + 1))
        self._buckets = [(keys[starts], np.add.reduceat(counts, starts))]

    def seal(self) -> TransitionTensor:
        self._consolidate()
        if self._buckets:
            keys, counts = self._buckets[0]
        else:
            keys = np.zeros(0, dtype=np.int64)
            counts = np.zeros(0, dtype=np.int64)
        return TransitionTensor(self.K, self.M, keys, counts)


def accumulate(triplet_stream, codebook, n_motors: int) -> TransitionTensor:
    """Count quantized triplets from a stream of (code_t, motor, code_next)
    array chunks. Order-independent: any chunking of the same multiset of
    triplets seals to the identical tensor.
    """
    acc = TensorAccumulator(codebook.K, n_motors)
    for code_t, motors, code_next in triplet_stream:
        acc.add(codebook.assign(code_t), motors, codebook.assign(code_next))
    return acc.seal()
