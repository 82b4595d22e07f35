import itertools
import json

import numpy as np
import pytest

from protoscope.codebook import (Codebook, PatchKMeans, build_assign_table,
                                 fit_codebook)
from protoscope.explorer import decode_codes, n_codes


def embed(values):
    """1-D values embedded into the 9-D patch space (other dims zero)."""
    X = np.zeros((len(values), 9))
    X[:, 0] = values
    return X


def test_each_point_its_own_centroid_when_k_equals_n():
    X = embed([0.0, 1.0, 5.0, 9.0])
    est = PatchKMeans(n_clusters=4, seed=0).fit(X)
    assert est.inertia_ == pytest.approx(0.0, abs=1e-12)
    assert sorted(est.cluster_centers_[:, 0].tolist()) == [0.0, 1.0, 5.0, 9.0]


def test_two_cluster_brute_force_optimum():
    values = [0.0, 0.0, 0.0, 10.0, 10.0, 10.0]
    X = embed(values)

    # Oracle: best weighted inertia over every 2-partition of the points.
    def inertia(groups):
        total = 0.0
        for g in groups:
            if not g:
                return np.inf
            pts = np.array([values[i] for i in g])
            total += ((pts - pts.mean()) ** 2).sum()
        return total

    best = min(inertia([list(a), [i for i in range(6) if i not in a]])
               for r in range(1, 6) for a in itertools.combinations(range(6), r))
    est = PatchKMeans(n_clusters=2, seed=1).fit(X)
    assert best == pytest.approx(0.0)
    assert est.inertia_ == pytest.approx(best, abs=1e-12)
    assert sorted(est.cluster_centers_[:, 0].tolist()) == [0.0, 10.0]


def test_inertia_non_increasing():
    rng = np.random.default_rng(2)
    X = rng.random((500, 9)) * 2 + 1
    w = rng.integers(1, 50, size=500).astype(float)
    est = PatchKMeans(n_clusters=20, seed=3).fit(X, sample_weight=w)
    hist = est.inertia_history_
    assert all(hist[i + 1] <= hist[i] + 1e-9 for i in range(len(hist) - 1))


def test_fit_deterministic_given_seed():
    rng = np.random.default_rng(4)
    X = rng.random((300, 9))
    a = PatchKMeans(n_clusters=10, seed=5).fit(X).cluster_centers_
    b = PatchKMeans(n_clusters=10, seed=5).fit(X).cluster_centers_
    assert np.array_equal(a, b)


def test_k_reduced_when_too_few_distinct_points():
    X = embed([1.0, 1.0, 2.0, 2.0])
    with pytest.warns(UserWarning):
        est = PatchKMeans(n_clusters=4, seed=6).fit(X)
    assert est.n_clusters_ == 2


def test_no_empty_clusters_after_fit():
    rng = np.random.default_rng(7)
    for trial in range(10):
        X = rng.random((60, 9))
        w = 10.0 ** rng.integers(0, 6, size=60)  # extreme weights stress repair
        est = PatchKMeans(n_clusters=12, seed=trial).fit(X, sample_weight=w)
        assert len(np.unique(est.labels_)) == est.n_clusters_


def test_predict_tie_goes_to_lowest_index():
    est = PatchKMeans(n_clusters=2, seed=0).fit(embed([0.0, 4.0]))
    est.cluster_centers_ = np.zeros((2, 9))  # force an exact tie
    assert est.predict(embed([1.0]))[0] == 0


def test_get_set_params():
    est = PatchKMeans(n_clusters=7, seed=9)
    params = est.get_params()
    assert params["n_clusters"] == 7 and params["seed"] == 9
    est.set_params(max_iter=33)
    assert est.max_iter == 33
    with pytest.raises(ValueError):
        est.set_params(bogus=1)


def test_assign_table_single_centroid():
    table = build_assign_table(np.full((1, 9), 2.0))
    assert table.shape == (n_codes(),)
    assert (table == 0).all()


def test_assign_table_exact_centroid_hit():
    code = 1234
    centroids = np.vstack([decode_codes([code])[0], np.full(9, 2.0) + 0.4])
    table = build_assign_table(centroids)
    assert table[code] == 0


def test_assign_table_matches_direct_search():
    rng = np.random.default_rng(8)
    centroids = rng.random((250, 9)) * 2 + 1
    table = build_assign_table(centroids)
    codes = rng.integers(0, n_codes(), size=1000)
    pts = decode_codes(codes)
    d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assert np.array_equal(table[codes], np.argmin(d2, axis=1))


def test_fit_codebook_order_invariant_and_sized():
    rng = np.random.default_rng(10)
    samples = rng.integers(0, n_codes(), size=50_000)
    hist_a = np.bincount(samples, minlength=n_codes())
    hist_b = np.bincount(rng.permutation(samples), minlength=n_codes())
    assert np.array_equal(hist_a, hist_b)
    cb_a = fit_codebook(hist_a, n_clusters=250, seed=11)
    cb_b = fit_codebook(hist_b, n_clusters=250, seed=11)
    assert cb_a.K == 250
    assert np.array_equal(cb_a.centroids, cb_b.centroids)
    assert cb_a.centroids.min() >= 1.0 and cb_a.centroids.max() <= 3.0


def test_fit_codebook_rejects_empty():
    with pytest.raises(ValueError):
        fit_codebook(np.zeros(n_codes(), dtype=np.int64))


def test_codebook_json_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    hist = np.bincount(rng.integers(0, n_codes(), size=20_000), minlength=n_codes())
    cb = fit_codebook(hist, n_clusters=40, seed=13)
    path = tmp_path / "codebook.json"
    cb.save(path)
    with open(path) as f:
        payload = json.load(f)
    assert payload["K"] == 40
    back = Codebook.load(path)
    assert np.array_equal(back.centroids, cb.centroids)
    assert np.array_equal(back.assign_table, cb.assign_table)
