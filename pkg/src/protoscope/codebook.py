"""Quantization of sensory patches into states via weighted k-means.

Fitting runs on the frequency histogram of distinct patch codes (at most
3^9 points), which is mathematically identical to k-means on the raw
sample stream but far cheaper, and makes the fit independent of sample
order. The fitted codebook memoizes the code -> state assignment over the
whole finite patch space.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .base import BaseEstimator, check_array
from .explorer import PATCH_CELLS, decode_codes, n_codes
from .rng import ensure_rng


def _pairwise_sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (X * X).sum(axis=1)[:, None] + (C * C).sum(axis=1)[None, :] - 2.0 * (X @ C.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


class PatchKMeans(BaseEstimator):
    """Weighted k-means with k-means++ seeding and Lloyd iterations.

    Deterministic given ``seed``: identical inputs reproduce identical
    centroids. Ties in assignment go to the lowest centroid index; empty
    clusters are repaired by seizing the point currently farthest from its
    centroid. If the input has fewer distinct points than ``n_clusters``,
    the cluster count is reduced to the distinct count (with a warning) so
    every cluster is a real point group.
    """

    def __init__(self, n_clusters: int = 250, seed: int = 0, max_iter: int = 200,
                 rel_tol: float = 1e-6):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.rel_tol = rel_tol

    def _init_pp(self, X, w, k, rng) -> np.ndarray:
        n = len(X)
        centers = np.empty((k, X.shape[1]), dtype=np.float64)
        probs = w / w.sum()
        first = int(rng.choice(n, p=probs))
        centers[0] = X[first]
        d2 = _pairwise_sq_dists(X, centers[:1])[:, 0]
        for i in range(1, k):
            mass = w * d2
            total = mass.sum()
            if total <= 0:
                # All remaining mass sits on already-chosen points.
                pick = int(rng.choice(n, p=probs))
            else:
                pick = int(rng.choice(n, p=mass / total))
            centers[i] = X[pick]
            np.minimum(d2, _pairwise_sq_dists(X, centers[i:i + 1])[:, 0], out=d2)
        return centers

    def fit(self, X, sample_weight=None):
        X = check_array(X, ndim=2, name="X")
        n = len(X)
        if sample_weight is None:
            w = np.ones(n, dtype=np.float64)
        else:
            w = check_array(sample_weight, ndim=1, name="sample_weight")
            if len(w) != n or np.any(w <= 0):
                raise ValueError("sample_weight must be positive and match X")

        k = int(self.n_clusters)
        n_distinct = len(np.unique(X, axis=0))
        if n_distinct < k:
            warnings.warn(
                f"only {n_distinct} distinct points; reducing n_clusters from {k}",
                stacklevel=2,
            )
            k = n_distinct
        if k < 1:
            raise ValueError("need at least one cluster")

        rng = ensure_rng(self.seed)
        centers = self._init_pp(X, w, k, rng)

        history = []
        prev = None
        labels = None
        for it in range(self.max_iter):
            # Assignment (argmin breaks ties toward the lowest centroid id).
            d2 = _pairwise_sq_dists(X, centers)
            labels = np.argmin(d2, axis=1)
            point_d2 = d2[np.arange(n), labels]
            inertia = float((w * point_d2).sum())
            history.append(inertia)

            converged = prev is not None and prev - inertia <= self.rel_tol * max(prev, 1e-300)
            prev = inertia
            if converged or it == self.max_iter - 1:
                break

            # Weighted centroid update.
            cluster_w = np.bincount(labels, weights=w, minlength=k)
            new_centers = np.empty_like(centers)
            for dim in range(X.shape[1]):
                sums = np.bincount(labels, weights=w * X[:, dim], minlength=k)
                new_centers[:, dim] = np.divide(sums, cluster_w,
                                                out=np.zeros(k), where=cluster_w > 0)

            empties = np.flatnonzero(cluster_w == 0)
            if empties.size:
                takeable = point_d2.copy()
                for c in empties:
                    far = int(np.argmax(takeable))
                    new_centers[c] = X[far]
                    takeable[far] = -1.0
            centers = new_centers

        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = history[-1]
        self.inertia_history_ = history
        self.n_iter_ = len(history)
        self.n_clusters_ = k
        return self

    def predict(self, X) -> np.ndarray:
        self._check_fitted("cluster_centers_")
        X = check_array(X, ndim=2, name="X")
        return np.argmin(_pairwise_sq_dists(X, self.cluster_centers_), axis=1)

    def fit_predict(self, X, sample_weight=None) -> np.ndarray:
        return self.fit(X, sample_weight).labels_


def build_assign_table(centroids: np.ndarray, alphabet: int = 3) -> np.ndarray:
    """Exact nearest-centroid state of every patch code (ties: lowest id)."""
    centroids = check_array(centroids, ndim=2, name="centroids")
    total = n_codes(alphabet)
    table = np.empty(total, dtype=np.int16)
    step = 4096
    for lo in range(0, total, step):
        codes = np.arange(lo, min(lo + step, total))
        pts = decode_codes(codes, alphabet=alphabet)
        table[lo:lo + len(codes)] = np.argmin(_pairwise_sq_dists(pts, centroids), axis=1)
    return table


@dataclass
class Codebook:
    """Fitted quantizer: centroids plus the exact code -> state table."""

    centroids: np.ndarray    # (K, 9) float64, components in [1, alphabet]
    assign_table: np.ndarray  # (alphabet^9,) int16
    alphabet: int = 3

    @property
    def K(self) -> int:
        return len(self.centroids)

    def assign(self, codes) -> np.ndarray:
        """Map patch codes to state ids through the memo table."""
        return self.assign_table.take(np.asarray(codes))

    def centroid_patch(self, state: int) -> np.ndarray:
        """The state's centroid as a 3x3 real-valued patch."""
        return self.centroids[state].reshape(3, 3)

    def save(self, path) -> None:
        payload = {"K": self.K, "alphabet": self.alphabet,
                   "centroids": self.centroids.tolist()}
        with open(path, "w") as f:
            json.dump(payload, f)

    @classmethod
    def load(cls, path) -> "Codebook":
        with open(path) as f:
            payload = json.load(f)
        centroids = np.asarray(payload["centroids"], dtype=np.float64)
        if centroids.shape != (payload["K"], PATCH_CELLS):
            raise ValueError("malformed codebook file")
        alphabet = int(payload.get("alphabet", 3))
        return cls(centroids, build_assign_table(centroids, alphabet), alphabet)


def fit_codebook(code_histogram, n_clusters: int = 250, seed: int = 0,
                 max_iter: int = 200, rel_tol: float = 1e-6,
                 alphabet: int = 3) -> Codebook:
    """Fit the quantizer from a histogram over all patch codes.

    ``code_histogram`` holds the visit count of each code; codes with zero
    count take no part in the fit but still get a table entry.
    """
    hist = np.asarray(code_histogram, dtype=np.int64)
    if hist.shape != (n_codes(alphabet),):
        raise ValueError(f"histogram must cover all {n_codes(alphabet)} codes")
    if hist.sum() <= 0:
        raise ValueError("empty histogram")
    codes = np.flatnonzero(hist)
    X = decode_codes(codes, alphabet=alphabet)
    est = PatchKMeans(n_clusters=n_clusters, seed=seed, max_iter=max_iter,
                      rel_tol=rel_tol).fit(X, sample_weight=hist[codes].astype(np.float64))
    return Codebook(est.cluster_centers_, build_assign_table(est.cluster_centers_, alphabet), alphabet)
