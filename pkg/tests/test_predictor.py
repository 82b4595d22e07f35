import json

import numpy as np
import pytest

from protoscope.codebook import Codebook, build_assign_table
from protoscope.explorer import MotorSpace, decode_codes
from protoscope.predictor import (Canvas, canvas_from_json_dict, canvas_to_json,
                                  canvas_to_ppm, predict_next, reconstruct_canvas)
from protoscope.similarity import SimilarityParams
from protoscope.transitions import TensorAccumulator


def small_space():
    return MotorSpace(3)  # displacements in [-2, 2]^2, 25 motors


def make_codebook(n_states=6, seed=0):
    rng = np.random.default_rng(seed)
    centroids = rng.random((n_states, 9)) * 2 + 1
    return Codebook(centroids, build_assign_table(centroids))


def seal(K, M, triples):
    acc = TensorAccumulator(K, M)
    if len(triples):
        arr = np.asarray(triples)
        acc.add(arr[:, 0], arr[:, 1], arr[:, 2])
    return acc.seal()


def test_predict_next_unvisited_is_none():
    T = seal(4, 25, [])
    assert predict_next(T, 0, 3) is None


def test_predict_next_needs_support():
    T = seal(4, 25, [(0, 3, 2)] * 20)
    assert predict_next(T, 0, 3) is None  # exactly n_min is not enough
    T = seal(4, 25, [(0, 3, 2)] * 100)
    states, probs = predict_next(T, 0, 3)
    assert list(states) == [2] and probs[0] == 1.0


def test_canvas_empty_without_admitted_motors():
    cb = make_codebook()
    T = seal(cb.K, 25, [(0, 3, 2)] * 5)  # below n_min everywhere
    canvas = reconstruct_canvas(T, cb, 0, small_space())
    assert canvas.empty_mask.all()
    assert (canvas.certainty == 0).all()
    assert not canvas.ambiguous.any()


def canvas_oracle(T, cb, state, space, params):
    """Slow per-pixel recomputation of the canvas contract."""
    p = space.anchors_per_axis
    size = 2 * p + 1
    contribs = [[[] for _ in range(size)] for _ in range(size)]
    for m in range(space.n_move):
        total = T.total(state, m)
        if total <= params.n_min:
            continue
        states, counts = T.successors(state, m)
        peak = int(np.argmax(counts))
        p_max = counts[peak] / total
        if p_max <= params.p_sim:
            continue
        patch = cb.centroid_patch(int(states[peak]))
        dr, dc = space.displacement(m)
        for r in range(3):
            for c in range(3):
                contribs[p - 1 + dr + r][p - 1 + dc + c].append((p_max, patch[r, c]))
    values = np.full((size, size), np.nan)
    certainty = np.zeros((size, size))
    ambiguous = np.zeros((size, size), dtype=bool)
    for r in range(size):
        for c in range(size):
            entries = contribs[r][c]
            if not entries:
                continue
            wsum = sum(w for w, _ in entries)
            values[r, c] = sum(w * v for w, v in entries) / wsum
            certainty[r, c] = max(w for w, _ in entries)
            confident = [v for w, v in entries if w >= 0.5]
            if confident and max(confident) - min(confident) >= 1.0:
                ambiguous[r, c] = True
    return values, certainty, ambiguous


def test_canvas_matches_slow_oracle():
    rng = np.random.default_rng(1)
    cb = make_codebook(8, seed=2)
    space = small_space()
    params = SimilarityParams(n_min=5, p_sim=0.2)
    triples = np.column_stack([rng.integers(0, 8, 30000),
                               rng.integers(0, space.n_move, 30000),
                               rng.integers(0, 8, 30000) % 3])
    T = seal(8, space.n_move, triples)
    for state in range(4):
        canvas = reconstruct_canvas(T, cb, state, space, params)
        values, certainty, ambiguous = canvas_oracle(T, cb, state, space, params)
        assert np.allclose(canvas.values, values, equal_nan=True)
        assert np.allclose(canvas.certainty, certainty)
        assert np.array_equal(canvas.ambiguous, ambiguous)


def test_canvas_values_are_convex_combinations():
    rng = np.random.default_rng(3)
    cb = make_codebook(8, seed=4)
    space = small_space()
    triples = np.column_stack([rng.integers(0, 8, 40000),
                               rng.integers(0, space.n_move, 40000),
                               rng.integers(0, 8, 40000) % 4])
    T = seal(8, space.n_move, triples)
    canvas = reconstruct_canvas(T, cb, 1, space, SimilarityParams(n_min=5, p_sim=0.1))
    filled = ~canvas.empty_mask
    assert filled.any()
    assert canvas.values[filled].min() >= cb.centroids.min() - 1e-12
    assert canvas.values[filled].max() <= cb.centroids.max() + 1e-12
    assert (canvas.certainty[filled] > 0).all()
    assert (canvas.certainty[~filled] == 0).all()


def test_canvas_is_deterministic():
    rng = np.random.default_rng(5)
    cb = make_codebook(6, seed=6)
    space = small_space()
    triples = np.column_stack([rng.integers(0, 6, 20000),
                               rng.integers(0, space.n_move, 20000),
                               rng.integers(0, 6, 20000) % 2])
    T = seal(6, space.n_move, triples)
    a = reconstruct_canvas(T, cb, 0, space)
    b = reconstruct_canvas(T, cb, 0, space)
    assert np.array_equal(a.values, b.values, equal_nan=True)
    assert np.array_equal(a.certainty, b.certainty)


def test_ambiguity_flag_logic():
    # Two movements confidently predict conflicting values on shared pixels.
    centroids = np.vstack([np.full(9, 1.0), np.full(9, 3.0), np.full(9, 2.0)])
    cb = Codebook(centroids, build_assign_table(centroids))
    space = small_space()
    m_null = space.motor_index((0, 0), (0, 0))
    m_right = space.motor_index((0, 0), (0, 1))
    triples = ([(2, m_null, 0)] * 80 + [(2, m_null, 1)] * 20
               + [(2, m_right, 1)] * 70 + [(2, m_right, 0)] * 30)
    T = seal(3, space.n_move, triples)
    canvas = reconstruct_canvas(T, cb, 2, space, SimilarityParams(n_min=10, p_sim=0.3))
    origin = canvas.origin
    # overlap columns see 0.8-confident value 1 and 0.7-confident value 3
    assert canvas.ambiguous[origin[0], origin[1] + 1]
    assert canvas.ambiguous[origin[0], origin[1] + 2]
    assert not canvas.ambiguous[origin[0], origin[1]]        # single contribution
    assert not canvas.ambiguous[origin[0], origin[1] + 3]
    assert canvas.certainty[origin[0], origin[1]] == pytest.approx(0.8)


def test_canvas_json_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    cb = make_codebook(5, seed=8)
    space = small_space()
    triples = np.column_stack([rng.integers(0, 5, 10000),
                               rng.integers(0, space.n_move, 10000),
                               rng.integers(0, 5, 10000) % 2])
    T = seal(5, space.n_move, triples)
    canvas = reconstruct_canvas(T, cb, 0, space, SimilarityParams(n_min=5, p_sim=0.2))
    path = tmp_path / "canvas.json"
    canvas_to_json(canvas, path)
    with open(path) as f:
        back = canvas_from_json_dict(json.load(f))
    assert np.array_equal(back.values, canvas.values, equal_nan=True)
    assert np.array_equal(back.certainty, canvas.certainty)
    assert np.array_equal(back.ambiguous, canvas.ambiguous)


def test_canvas_ppm_render(tmp_path):
    values = np.full((7, 7), np.nan)
    certainty = np.zeros((7, 7))
    ambiguous = np.zeros((7, 7), dtype=bool)
    values[3, 3] = 1.0
    certainty[3, 3] = 1.0
    values[3, 4] = 3.0
    certainty[3, 4] = 0.5
    ambiguous[3, 4] = True
    canvas = Canvas(0, values, certainty, ambiguous, (2, 2))
    path = tmp_path / "canvas.ppm"
    canvas_to_ppm(canvas, path, scale=2)
    raw = path.read_bytes()
    assert raw.startswith(b"P6\n14 14\n255\n")
    assert len(raw) == len(b"P6\n14 14\n255\n") + 14 * 14 * 3
    # deterministic bytes
    canvas_to_ppm(canvas, tmp_path / "canvas2.ppm", scale=2)
    assert raw == (tmp_path / "canvas2.ppm").read_bytes()
