"""Spectral clustering with normalized-cut scoring and cluster-count
selection from the knee of the cut curve.

The graph is the similarity matrix. States with zero degree are excluded
up front and reported separately. The embedding uses the symmetric
normalized Laplacian; rows are unit-normalized and clustered with the
package's own weighted k-means, best of R restarts by the returned
labeling's normalized cut.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .base import BaseEstimator, check_similarity_matrix
from .codebook import PatchKMeans
from .rng import STREAMS

KNEE_VERBATIM = "verbatim"
KNEE_CENTERED = "centered"


@dataclass
class SpectralParams:
    n_max: int = 10
    restarts: int = 10
    knee: str = KNEE_CENTERED
    eig_tol: float = 1e-10
    # A centered knee counts only if its curvature reaches this fraction of
    # the curve's median step; otherwise no cut is detected and the default
    # outcome is two clusters.
    knee_gain: float = 0.25

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.knee not in (KNEE_VERBATIM, KNEE_CENTERED):
            raise ValueError(f"unknown knee convention {self.knee!r}")
        if self.knee_gain < 0:
            raise ValueError("knee_gain must be >= 0")


@dataclass
class Clustering:
    """Labels over all states; excluded (zero-degree) states carry -1."""

    labels: np.ndarray
    n_clusters: int
    excluded: np.ndarray
    ncut_value: float


def ncut(W: np.ndarray, labels) -> float:
    """Normalized cut of a labeling: sum over clusters of (boundary weight)
    / (cluster degree). Self-loops count toward degree, never toward the
    cut. Unlabeled (-1) nodes must have zero degree.
    """
    W = check_similarity_matrix(W)
    labels = np.asarray(labels)
    if labels.shape != (len(W),):
        raise ValueError("labels must match the matrix size")
    degrees = W.sum(axis=1)
    unlabeled = labels < 0
    if np.any(degrees[unlabeled] > 0):
        raise ValueError("unlabeled node with positive degree")
    total = 0.0
    for k in np.unique(labels[~unlabeled]):
        mask = labels == k
        vol = degrees[mask].sum()
        if vol <= 0:
            raise ValueError(f"cluster {k} has zero degree; Ncut undefined")
        internal = W[np.ix_(mask, mask)].sum()
        total += (vol - internal) / vol
    # cut sums are nonnegative; anything at rounding scale is an exact zero
    if total < 1e-12:
        return 0.0
    return float(total)


def _seed_int(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(STREAMS["spectral"],) + tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


class _EmbeddingBasis:
    """Eigen-decomposition of the normalized Laplacian, computed once per
    similarity matrix and shared across the cluster-count sweep."""

    def __init__(self, W: np.ndarray):
        W = check_similarity_matrix(W)
        degrees = W.sum(axis=1)
        self.kept = np.flatnonzero(degrees > 0)
        self.excluded = np.flatnonzero(degrees == 0)
        self.n = len(W)
        if len(self.kept) == 0:
            self.eigvals = np.zeros(0)
            self.eigvecs = np.zeros((0, 0))
            self.W_kept = np.zeros((0, 0))
            return
        Wk = W[np.ix_(self.kept, self.kept)]
        inv_sqrt = 1.0 / np.sqrt(degrees[self.kept])
        S = Wk * inv_sqrt[:, None] * inv_sqrt[None, :]
        L = np.eye(len(Wk)) - S
        L = 0.5 * (L + L.T)  # kill rounding asymmetry before eigh
        self.eigvals, self.eigvecs = np.linalg.eigh(L)
        self.W_kept = Wk
        self.laplacian = L

    def embedding(self, n_clusters: int) -> np.ndarray:
        emb = self.eigvecs[:, :n_clusters].copy()
        norms = np.linalg.norm(emb, axis=1)
        nz = norms > 1e-12
        emb[nz] /= norms[nz, None]
        return emb

    def cluster(self, n_clusters: int, seed: int, restarts: int) -> tuple[np.ndarray, float]:
        """Best-of-restarts labeling of the kept nodes, scored by Ncut."""
        if n_clusters > len(self.kept):
            raise ValueError(
                f"n_clusters={n_clusters} exceeds the {len(self.kept)} states with positive degree")
        emb = self.embedding(n_clusters)
        best_labels, best_ncut = None, np.inf
        for r in range(restarts):
            km = PatchKMeans(n_clusters=n_clusters, seed=_seed_int(seed, n_clusters, r))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # duplicate embedding rows may shrink k
                labels = km.fit_predict(emb)
            labels = _compact_labels(labels)
            value = ncut(self.W_kept, labels)
            if value < best_ncut:
                best_labels, best_ncut = labels, value
        return best_labels, best_ncut


def _compact_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber labels to consecutive ids so every cluster is non-empty."""
    _, out = np.unique(labels, return_inverse=True)
    return out


class NcutSpectralClustering(BaseEstimator):
    """Estimator facade: fit a similarity matrix, read ``labels_``."""

    def __init__(self, n_clusters: int = 2, restarts: int = 10, seed: int = 0):
        self.n_clusters = n_clusters
        self.restarts = restarts
        self.seed = seed

    def fit(self, W):
        basis = _EmbeddingBasis(W)
        kept_labels, value = basis.cluster(self.n_clusters, self.seed, self.restarts)
        labels = np.full(basis.n, -1, dtype=np.int64)
        labels[basis.kept] = kept_labels
        self.labels_ = labels
        self.ncut_ = value
        self.excluded_ = basis.excluded
        self.n_clusters_ = int(kept_labels.max()) + 1
        return self

    def fit_predict(self, W) -> np.ndarray:
        return self.fit(W).labels_


def spectral_cluster(W, n_clusters: int, seed: int = 0,
                     params: SpectralParams | None = None) -> Clustering:
    """Cluster a similarity matrix into ``n_clusters`` groups."""
    params = params or SpectralParams()
    est = NcutSpectralClustering(n_clusters=n_clusters, restarts=params.restarts,
                                 seed=seed).fit(W)
    return Clustering(est.labels_, est.n_clusters_, est.excluded_, est.ncut_)


@dataclass
class NcutCurve:
    """Cut values over the cluster-count sweep plus both knee readings.

    ``delta`` is the forward second difference f(N+2) + f(N) - 2 f(N+1)
    indexed at N (the formula as written); ``delta_centered`` re-centers
    the same curvature at its middle point, with a zero baseline at N=2 so
    a curve with no convex knee falls back to two clusters.
    """

    ncut: dict[int, float]
    delta: dict[int, float]
    delta_centered: dict[int, float]
    n_star_verbatim: int
    n_star_centered: int
    convention: str
    labels_by_n: dict[int, np.ndarray] = field(repr=False, default_factory=dict)
    excluded: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, np.int64))

    @property
    def n_star(self) -> int:
        return self.n_star_centered if self.convention == KNEE_CENTERED else self.n_star_verbatim


def _argmax_smallest(d: dict[int, float]) -> int:
    best_n, best_v = 2, -np.inf
    for n in sorted(d):
        if d[n] > best_v:
            best_n, best_v = n, d[n]
    return best_n


def knee_from_curve(ncut_values: dict[int, float], knee_gain: float = 0.25
                    ) -> tuple[dict[int, float], dict[int, float], int, int]:
    """Second differences and selected cluster counts from a cut curve.

    The verbatim selection is the plain argmax of the forward second
    difference. The centered selection looks for a convex knee: the
    curvature at its argmax must reach ``knee_gain`` times the curve's
    median step, else no cut is detected and the default of two clusters
    is returned.
    """
    ns = sorted(ncut_values)
    f = ncut_values
    delta = {n: f[n + 2] + f[n] - 2.0 * f[n + 1]
             for n in ns if n + 1 in f and n + 2 in f}
    centered = {2: 0.0}
    centered.update({n: f[n + 1] + f[n - 1] - 2.0 * f[n]
                     for n in ns if n >= 3 and n - 1 in f and n + 1 in f})
    n_v = _argmax_smallest(delta) if delta else 2

    n_c = _argmax_smallest(centered)
    steps = [abs(f[n + 1] - f[n]) for n in ns if n + 1 in f]
    scale = float(np.median(steps)) if steps else 0.0
    if n_c != 2 and centered[n_c] < knee_gain * scale:
        n_c = 2
    return delta, centered, n_v, n_c


def cut_gap(W, seed: int = 0, params: SpectralParams | None = None) -> NcutCurve:
    """Sweep N = 2 .. n_max + 2, score each clustering with Ncut, and pick
    the knee under both conventions. Degenerate graphs (fewer connected
    states than requested clusters) truncate the sweep; with no usable
    curvature the default outcome is two clusters.
    """
    params = params or SpectralParams()
    basis = _EmbeddingBasis(W)
    top = min(params.n_max + 2, len(basis.kept))
    curve: dict[int, float] = {}
    labels_by_n: dict[int, np.ndarray] = {}
    for n in range(2, top + 1):
        kept_labels, value = basis.cluster(n, seed, params.restarts)
        curve[n] = value
        full = np.full(basis.n, -1, dtype=np.int64)
        full[basis.kept] = kept_labels
        labels_by_n[n] = full
    delta, centered, n_v, n_c = knee_from_curve(curve, params.knee_gain)
    return NcutCurve(curve, delta, centered, n_v, n_c, params.knee,
                     labels_by_n, basis.excluded)


def ncut_curve_to_csv(curve: NcutCurve, path) -> None:
    """Columns N, ncut, delta (delta blank where undefined)."""
    with open(path, "w") as f:
        f.write("N,ncut,delta\n")
        for n in sorted(curve.ncut):
            d = repr(curve.delta[n]) if n in curve.delta else ""
            f.write(f"{n},{curve.ncut[n]!r},{d}\n")
