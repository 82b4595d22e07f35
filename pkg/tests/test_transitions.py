from collections import Counter

import numpy as np
import pytest

from protoscope.codebook import Codebook, build_assign_table
from protoscope.transitions import TensorAccumulator, accumulate


def seal(K=6, M=4, triples=()):
    acc = TensorAccumulator(K, M)
    if triples:
        arr = np.asarray(triples)
        acc.add(arr[:, 0], arr[:, 1], arr[:, 2])
    return acc.seal()


def test_empty_stream():
    T = seal()
    assert T.nnz == 0 and T.n_triplets == 0
    assert T.conditional(0, 0) is None
    assert T.total(3, 2) == 0


def test_single_triplet():
    T = seal(triples=[(1, 2, 3)])
    assert T.count(1, 2, 3) == 1
    assert T.total(1, 2) == 1
    assert T.n_triplets == 1


def test_counts_match_dictionary_oracle():
    rng = np.random.default_rng(0)
    K, M, n = 40, 25, 100_000
    s_a = rng.integers(0, K, n)
    m = rng.integers(0, M, n)
    s_b = rng.integers(0, K, n)
    oracle = Counter(zip(s_a.tolist(), m.tolist(), s_b.tolist()))

    acc = TensorAccumulator(K, M, consolidate_every=3)
    for lo in range(0, n, 7919):  # uneven chunking
        sl = slice(lo, lo + 7919)
        acc.add(s_a[sl], m[sl], s_b[sl])
    T = acc.seal()
    assert T.nnz == len(oracle)
    for (a, mm, b), c in list(oracle.items())[:500]:
        assert T.count(a, mm, b) == c
    assert T.n_triplets == n
    totals_oracle = Counter(zip(s_a.tolist(), m.tolist()))
    for (a, mm), c in list(totals_oracle.items())[:200]:
        assert T.total(a, mm) == c


def test_conditional_hand_normalization():
    T = seal(triples=[(0, 1, 2)] * 15 + [(0, 1, 4)] * 10)
    states, probs = T.conditional(0, 1)
    assert list(states) == [2, 4]
    assert probs == pytest.approx([0.6, 0.4])


def test_conditional_single_successor():
    T = seal(triples=[(2, 3, 5)] * 7)
    states, probs = T.conditional(2, 3)
    assert list(states) == [5] and probs[0] == 1.0


def test_conditional_sums_to_one():
    rng = np.random.default_rng(1)
    T = seal(K=10, M=5, triples=rng.integers(0, 5, size=(5000, 3)))
    for a in range(5):
        for m in range(5):
            cond = T.conditional(a, m)
            if cond is not None:
                assert abs(cond[1].sum() - 1.0) < 1e-12
                assert (cond[1] >= 0).all()


def test_accumulation_order_independent():
    rng = np.random.default_rng(2)
    triples = rng.integers(0, 6, size=(4000, 3))
    T1 = seal(triples=triples)
    T2 = seal(triples=triples[rng.permutation(len(triples))])
    assert np.array_equal(T1.keys, T2.keys)
    assert np.array_equal(T1.counts, T2.counts)


def test_bounds_rejected():
    acc = TensorAccumulator(4, 3)
    with pytest.raises(ValueError):
        acc.add([0], [3], [0])
    with pytest.raises(ValueError):
        acc.add([4], [0], [0])
    with pytest.raises(ValueError):
        acc.add([0], [0], [-1])
    with pytest.raises(ValueError):
        acc.add([0, 1], [0], [0])


def test_self_transition_rate():
    T = seal(triples=[(1, 0, 1)] * 3 + [(1, 0, 2)] * 1 + [(2, 0, 2)] * 4
             + [(1, 1, 0)] * 5)
    assert T.self_transition_rate(0) == pytest.approx(7 / 8)
    assert np.isnan(T.self_transition_rate(2))


def test_accumulate_maps_codes_through_table():
    centroids = np.vstack([np.full(9, 1.0), np.full(9, 3.0)])
    cb = Codebook(centroids, build_assign_table(centroids))
    code_lo, code_hi = 0, 3 ** 9 - 1  # all-1s and all-3s patches
    stream = [(np.array([code_lo, code_hi]), np.array([5, 5]),
               np.array([code_hi, code_hi]))]
    T = accumulate(stream, cb, n_motors=10)
    assert T.count(0, 5, 1) == 1
    assert T.count(1, 5, 1) == 1


def test_csv_export(tmp_path):
    T = seal(triples=[(0, 1, 2)] * 3 + [(1, 2, 0)])
    path = tmp_path / "tensor.csv"
    T.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "s_a,m,s_b,count"
    assert "0,1,2,3" in lines and "1,2,0,1" in lines
