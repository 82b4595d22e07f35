"""Scenario presets, the end-to-end pipeline, ground-truth scoring,
parameter sweeps and file exports.

A run is fully determined by (scenario config, seed): pass 1 streams the
exploration to a patch-code histogram, the codebook is fitted on it, pass
2 replays the identical stream to fill the transition tensor and the
ground-truth vote tables, then the similarity matrices are built,
clustered across cluster counts, scored against provenance, and rendered.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .codebook import Codebook, fit_codebook
from .engine import simulate_chunks
from .explorer import MotorSpace, motor_space_for, n_codes
from .gridworld import GridConfig, PROV_ENV, PROV_MIXED, config_replace, init_world
from .imageio import to_gray, write_pgm
from .predictor import Canvas, canvas_from_json_dict, canvas_to_json, canvas_to_ppm, reconstruct_canvas
from .similarity import SimilarityParams, build_lambda_s, build_lambda_sm, similarity_to_csv
from .spectral import (KNEE_CENTERED, NcutCurve, SpectralParams, cut_gap,
                       knee_from_curve, ncut_curve_to_csv)
from .transitions import TensorAccumulator


class ConfigError(ValueError):
    """Bad scenario name, parameter, or config file."""


@dataclass
class ScenarioConfig:
    name: str = "default"
    grid: GridConfig = field(default_factory=GridConfig)
    n_step: int = 30_000_000
    codebook_k: int = 250
    similarity: SimilarityParams = field(default_factory=SimilarityParams)
    spectral: SpectralParams = field(default_factory=SpectralParams)
    cluster_on: str = "sm"  # "sm" or "s": which similarity is clustered
    sweep_param: str | None = None
    sweep_values: tuple | None = None

    def __post_init__(self):
        if self.cluster_on not in ("sm", "s"):
            raise ConfigError(f"cluster_on must be 'sm' or 's', got {self.cluster_on!r}")
        if self.n_step < 1:
            raise ConfigError("n_step must be >= 1")


_SWEEP_PROBS = (0.0, 0.1, 0.2, 0.4, 0.8, 1.0)

PRESETS: dict[str, dict] = {
    "default": {},
    "no_motor": {"cluster_on": "s"},
    "sweep_n_obj": {"sweep_param": "n_obj", "sweep_values": (1, 2, 3, 4, 5, 6)},
    "sweep_p_obj": {"sweep_param": "p_obj", "sweep_values": _SWEEP_PROBS},
    "sweep_p_env": {"sweep_param": "p_env", "sweep_values": _SWEEP_PROBS},
    "sweep_p_abs": {"sweep_param": "p_abs", "sweep_values": _SWEEP_PROBS},
    "linked": {"grid": {"linked": True}},
    "identical": {"grid": {"identical": True}},
    "rotation": {"grid": {"rotation_enabled": True}},
    "small_objects": {"grid": {"small_objects": True}},
}


def make_scenario(name: str = "default", **overrides) -> ScenarioConfig:
    """Build a preset scenario, optionally overriding nested fields.

    ``overrides`` may contain scalar ScenarioConfig fields plus dicts for
    the ``grid``, ``similarity`` and ``spectral`` blocks.
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown scenario {name!r}; known: {sorted(PRESETS)}")
    merged: dict = {}
    for source in (PRESETS[name], overrides):
        for key, value in source.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
    try:
        grid = GridConfig(**merged.pop("grid", {}))
        similarity = SimilarityParams(**merged.pop("similarity", {}))
        spectral = SpectralParams(**merged.pop("spectral", {}))
        return ScenarioConfig(name=name, grid=grid, similarity=similarity,
                              spectral=spectral, **merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def apply_sweep_value(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    """Copy the config with one swept parameter changed."""
    grid_fields = {f.name for f in dataclasses.fields(GridConfig)}
    try:
        if parameter in grid_fields:
            caster = int if parameter.startswith(("n_", "obj_", "width", "height", "alphabet")) else float
            if isinstance(getattr(config.grid, parameter), bool):
                caster = bool
            return dataclasses.replace(config, grid=config_replace(config.grid, **{parameter: caster(value)}))
        if parameter == "n_step":
            return dataclasses.replace(config, n_step=int(value))
        if parameter in ("n_min", "p_sim"):
            kw = {parameter: (int if parameter == "n_min" else float)(value)}
            return dataclasses.replace(config, similarity=dataclasses.replace(config.similarity, **kw))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value {value!r} for parameter {parameter!r}: {exc}") from exc
    raise ConfigError(f"{parameter!r} is not a sweepable config field")


# --- ground-truth collection --------------------------------------------------

# State-label encoding shared with reports: PROV_ENV / PROV_MIXED / object id.
_TAG_COLS = 2  # ENV, MIXED, then one column per object


class GroundTruthVotes:
    """Visit-weighted provenance votes per state, collected during pass 2."""

    def __init__(self, K: int, n_obj: int, n_anchors: int):
        self.K = K
        self.n_obj = n_obj
        self.n_anchors = n_anchors
        self.tag_votes = np.zeros((K, _TAG_COLS + n_obj), dtype=np.int64)
        self.offset_votes = np.zeros((K, max(n_obj, 1) * 64), dtype=np.int64)
        self.anchor_votes = np.zeros((K, n_anchors), dtype=np.int64)

    def add(self, states, tags, offsets, anchors) -> None:
        states = np.asarray(states, dtype=np.int64)
        tags = np.asarray(tags)
        cols = np.where(tags == PROV_ENV, 0, np.where(tags == PROV_MIXED, 1, tags + _TAG_COLS))
        width = self.tag_votes.shape[1]
        self.tag_votes += np.bincount(states * width + cols,
                                      minlength=self.K * width).reshape(self.K, width)
        obj = offsets >= 0
        if obj.any():
            ow = self.offset_votes.shape[1]
            self.offset_votes += np.bincount(
                states[obj] * ow + offsets[obj].astype(np.int64),
                minlength=self.K * ow).reshape(self.K, ow)
        self.anchor_votes += np.bincount(
            states * self.n_anchors + np.asarray(anchors, dtype=np.int64),
            minlength=self.K * self.n_anchors).reshape(self.K, self.n_anchors)

    def finalize(self) -> "GroundTruthSummary":
        # Majority tag per state; ties resolve in column order ENV, MIXED,
        # then objects. Never-visited states fall back to ENV.
        best = np.argmax(self.tag_votes, axis=1)
        labels = np.where(best == 0, PROV_ENV, np.where(best == 1, PROV_MIXED, best - _TAG_COLS))
        mass = self.tag_votes.sum(axis=1)

        offsets = []
        for s in range(self.K):
            row = self.offset_votes[s]
            if row.sum() == 0:
                offsets.append(None)
            else:
                packed = int(np.argmax(row))
                offsets.append((packed >> 6, (packed >> 3) & 7, packed & 7))
        anchors = np.where(self.anchor_votes.sum(axis=1) > 0,
                           np.argmax(self.anchor_votes, axis=1), -1)
        return GroundTruthSummary(labels.astype(np.int64), mass, offsets,
                                  anchors.astype(np.int64), self.tag_votes.copy())


@dataclass
class GroundTruthSummary:
    state_labels: np.ndarray            # PROV_ENV / PROV_MIXED / object id
    visit_mass: np.ndarray
    majority_offset: list               # (obj, u_row, u_col) or None per state
    majority_anchor: np.ndarray         # flat anchor id or -1
    tag_votes: np.ndarray               # (K, 2 + n_obj)

    @property
    def object_vote_mass(self) -> np.ndarray:
        """Total OBJECT-tagged visit mass per object."""
        return self.tag_votes[:, _TAG_COLS:].sum(axis=0)


def label_states_ground_truth(replay_chunks, codebook: Codebook, n_obj: int,
                              n_anchors: int) -> GroundTruthSummary:
    """Vote each visited patch's provenance onto its assigned state.

    ``replay_chunks`` is an iterable of engine StreamChunk records with
    provenance collected (pass-2 replay).
    """
    votes = GroundTruthVotes(codebook.K, n_obj, n_anchors)
    for ch in replay_chunks:
        if ch.prov is None:
            raise ValueError("replay chunks must carry provenance")
        end = None if ch.is_last else -1
        states = codebook.assign(ch.codes[:end])
        votes.add(states, ch.prov[:end], ch.obj_offset[:end], ch.anchors[:end])
    return votes.finalize()


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Adjusted Rand index between two labelings of the same elements."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("labelings must have equal length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    na, nb = ai.max() + 1, bi.max() + 1
    table = np.bincount(ai * nb + bi, minlength=na * nb).reshape(na, nb)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    total = comb2(len(a))
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


# --- cluster scoring ----------------------------------------------------------

_LABEL_NONE = -99  # canonical "no label" marker in reports


def score_clusters(labels: np.ndarray, gt: GroundTruthSummary, W: np.ndarray) -> list[dict]:
    """Visit-weighted majority label, purity and density stats per cluster."""
    degrees = W.sum(axis=1)
    stats = []
    for c in sorted(int(c) for c in np.unique(labels) if c >= 0):
        members = np.flatnonzero(labels == c)
        mass = gt.visit_mass[members]
        total = int(mass.sum())
        label_values = gt.state_labels[members]
        # Canonical tie order: ENV, MIXED, then objects ascending.
        order = [PROV_ENV, PROV_MIXED] + list(range(gt.tag_votes.shape[1] - _TAG_COLS))
        mass_by = {lab: int(mass[label_values == lab].sum()) for lab in order}
        majority = max(order, key=lambda lab: mass_by[lab])
        purity = mass_by[majority] / total if total > 0 else 0.0
        sub = W[np.ix_(members, members)]
        n = len(members)
        intra = float((sub.sum() - np.trace(sub)) / (n * (n - 1))) if n > 1 else 0.0
        object_mass = int(gt.tag_votes[members, _TAG_COLS:].sum())
        stats.append({
            "cluster": c,
            "n_states": n,
            "visit_mass": total,
            "majority_label": int(majority),
            "purity": float(purity),
            "object_vote_mass": object_mass,
            "object_purity": object_mass / total if total > 0 else 0.0,
            "intra_mean_similarity": intra,
            "top_state": int(members[np.argmax(degrees[members])]),
        })
    return stats


def inter_cluster_mean(labels: np.ndarray, W: np.ndarray) -> float:
    """Mean similarity over pairs of labeled states in different clusters."""
    kept = labels >= 0
    idx = np.flatnonzero(kept)
    if len(idx) < 2:
        return 0.0
    sub = W[np.ix_(idx, idx)]
    lab = labels[idx]
    total_off = sub.sum() - np.trace(sub)
    pairs_off = len(idx) * (len(idx) - 1)
    intra_sum = 0.0
    intra_pairs = 0
    for c in np.unique(lab):
        m = lab == c
        block = sub[np.ix_(m, m)]
        intra_sum += block.sum() - np.trace(block)
        intra_pairs += int(m.sum()) * (int(m.sum()) - 1)
    inter_pairs = pairs_off - intra_pairs
    if inter_pairs <= 0:
        return 0.0
    return float((total_off - intra_sum) / inter_pairs)


def canvas_object_agreement(canvas: Canvas, mask: np.ndarray, pixels: np.ndarray,
                            offset: tuple[int, int, int],
                            min_certainty: float = 0.5) -> dict:
    """Compare confident canvas pixels against the true object stamp.

    ``offset`` is the state's (object, u_row, u_col) window alignment: the
    reference window's top-left sits at that offset inside the object box.
    Confident pixels falling outside the stamp count as mismatches.
    """
    _, ur, uc = offset
    n_conf = 0
    n_match = 0
    h, w = canvas.values.shape
    for r in range(h):
        for c in range(w):
            if np.isnan(canvas.values[r, c]) or canvas.certainty[r, c] < min_certainty:
                continue
            n_conf += 1
            br = ur + (r - canvas.origin[0])
            bc = uc + (c - canvas.origin[1])
            if 0 <= br < mask.shape[0] and 0 <= bc < mask.shape[1] and mask[br, bc]:
                predicted = int(np.floor(canvas.values[r, c] + 0.5))
                if predicted == int(pixels[br, bc]):
                    n_match += 1
    return {"n_confident": n_conf, "n_match": n_match,
            "agreement": n_match / n_conf if n_conf else float("nan")}


def canvas_grid_agreement(canvas: Canvas, grid: np.ndarray, anchor: tuple[int, int],
                          min_certainty: float = 0.5) -> dict:
    """Compare confident, unambiguous canvas pixels against a fixed grid,
    aligning the reference window at ``anchor``."""
    n_conf = 0
    n_match = 0
    h, w = canvas.values.shape
    for r in range(h):
        for c in range(w):
            if (np.isnan(canvas.values[r, c]) or canvas.certainty[r, c] < min_certainty
                    or canvas.ambiguous[r, c]):
                continue
            gr = anchor[0] + (r - canvas.origin[0])
            gc = anchor[1] + (c - canvas.origin[1])
            if not (0 <= gr < grid.shape[0] and 0 <= gc < grid.shape[1]):
                continue
            n_conf += 1
            if int(np.floor(canvas.values[r, c] + 0.5)) == int(grid[gr, gc]):
                n_match += 1
    return {"n_confident": n_conf, "n_match": n_match,
            "agreement": n_match / n_conf if n_conf else float("nan")}


# --- the end-to-end run ---------------------------------------------------------

#: file names written by export_artifacts (plus one recon pair per cluster)
REPORT_FILE = "report.json"

# Keys excluded from the determinism hash: wall-clock and filesystem facts.
_HASH_EXCLUDED = ("timings", "artifacts", "out_dir")


@dataclass
class ExperimentReport:
    """Complete record of one scenario run; everything an export needs."""

    data: dict

    @property
    def n_star(self) -> int:
        return self.data["n_star"]

    @property
    def ari(self) -> float:
        return self.data["ari"]

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.data["labels"], dtype=np.int64)

    @property
    def cluster_stats(self) -> list[dict]:
        return self.data["cluster_stats"]

    @property
    def similarity(self) -> np.ndarray:
        return np.asarray(self.data["similarity"], dtype=np.float64)

    @property
    def ncut_curve(self) -> dict[int, float]:
        return {int(k): v for k, v in self.data["ncut_curve"].items()}

    def canonical_json(self) -> str:
        payload = {k: v for k, v in self.data.items() if k not in _HASH_EXCLUDED}
        return json.dumps(payload, sort_keys=True)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.data, f, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        with open(path) as f:
            return cls(json.load(f))


def _config_echo(config: ScenarioConfig) -> dict:
    return {
        "grid": dataclasses.asdict(config.grid),
        "n_step": config.n_step,
        "codebook_k": config.codebook_k,
        "similarity": dataclasses.asdict(config.similarity),
        "spectral": dataclasses.asdict(config.spectral),
        "cluster_on": config.cluster_on,
    }


def run_scenario(config: ScenarioConfig, seed: int, out_dir=None) -> ExperimentReport:
    """Execute one full scenario run and (optionally) export its artifacts."""
    try:
        return _run_scenario_inner(config, seed, out_dir)
    except ConfigError:
        raise
    except Exception as exc:
        raise RuntimeError(f"scenario {config.name!r} seed {seed} failed: {exc}") from exc


def _run_scenario_inner(config: ScenarioConfig, seed: int, out_dir) -> ExperimentReport:
    grid = config.grid
    space = motor_space_for(grid)
    timings: dict[str, float] = {}
    t_total = time.perf_counter()

    # Pass 1: patch-code histogram.
    t0 = time.perf_counter()
    hist = np.zeros(n_codes(grid.alphabet_size), dtype=np.int64)
    for ch in simulate_chunks(grid, config.n_step, seed):
        hist += np.bincount(ch.codes[:-1], minlength=len(hist))
        if ch.is_last:
            hist[ch.codes[-1]] += 1
    timings["pass1_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    codebook = fit_codebook(hist, n_clusters=config.codebook_k,
                            seed=rngmod.derive_seed(seed, "kmeans"),
                            alphabet=grid.alphabet_size)
    timings["codebook_s"] = time.perf_counter() - t0

    # Pass 2: identical replay -> tensor counts + provenance votes.
    t0 = time.perf_counter()
    acc = TensorAccumulator(codebook.K, space.n_total)
    votes = GroundTruthVotes(codebook.K, grid.n_obj, grid.anchors_per_axis ** 2)
    for ch in simulate_chunks(grid, config.n_step, seed, collect_provenance=True):
        states = codebook.assign(ch.codes)
        acc.add(states[:-1], ch.motors, states[1:])
        end = None if ch.is_last else -1
        votes.add(states[:end], ch.prov[:end], ch.obj_offset[:end], ch.anchors[:end])
    tensor = acc.seal()
    gt = votes.finalize()
    timings["pass2_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lam_sm = build_lambda_sm(tensor, config.similarity)
    lam_s = build_lambda_s(tensor)
    W = lam_sm if config.cluster_on == "sm" else lam_s
    timings["similarity_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    curve = cut_gap(W, seed=seed, params=config.spectral)
    n_star = curve.n_star
    labels = curve.labels_by_n.get(n_star)
    if labels is None:  # degenerate graph: nothing clusterable
        labels = np.full(codebook.K, -1, dtype=np.int64)
    timings["spectral_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    stats = score_clusters(labels, gt, W)
    inter_mean = inter_cluster_mean(labels, W)
    kept = labels >= 0
    ari = adjusted_rand_index(labels[kept], gt.state_labels[kept]) if kept.any() else float("nan")
    self_rate = tensor.self_transition_rate(space.null_motor)

    # One reconstruction canvas per cluster, for its highest-degree state.
    objects = init_world(rngmod.stream(seed, "world-init"), grid).objects
    canvases = {}
    for entry in stats:
        canvas = reconstruct_canvas(tensor, codebook, entry["top_state"], space, config.similarity)
        record = {"cluster": entry["cluster"], "state": entry["top_state"],
                  "canvas": canvas.to_json_dict(), "object_agreement": None}
        offset = gt.majority_offset[entry["top_state"]]
        if offset is not None:
            obj = objects[offset[0]]
            agreement = canvas_object_agreement(canvas, obj.mask, obj.pixels, offset)
            record["object_agreement"] = {"object": offset[0],
                                          "offset": [offset[1], offset[2]], **agreement}
        canvases[str(entry["cluster"])] = record
    timings["scoring_s"] = time.perf_counter() - t0
    timings["total_s"] = time.perf_counter() - t_total

    data = {
        "schema": 1,
        "scenario": config.name,
        "seed": int(seed),
        "config": _config_echo(config),
        "n_star": int(n_star),
        "n_star_verbatim": int(curve.n_star_verbatim),
        "n_star_centered": int(curve.n_star_centered),
        "knee_convention": config.spectral.knee,
        "ncut_curve": {str(k): v for k, v in sorted(curve.ncut.items())},
        "delta_curve": {str(k): v for k, v in sorted(curve.delta.items())},
        "delta_centered": {str(k): v for k, v in sorted(curve.delta_centered.items())},
        "labels": labels.tolist(),
        "excluded": curve.excluded.tolist(),
        "cluster_stats": stats,
        "inter_cluster_mean_similarity": inter_mean,
        "ari": float(ari),
        "self_transition_null_motor": float(self_rate),
        "null_motor": int(space.null_motor),
        "n_motors": int(space.n_total),
        "state_labels": gt.state_labels.tolist(),
        "state_visit_mass": gt.visit_mass.tolist(),
        "state_majority_offset": [list(o) if o is not None else None for o in gt.majority_offset],
        "state_majority_anchor": gt.majority_anchor.tolist(),
        "object_vote_mass": gt.object_vote_mass.tolist(),
        "objects": [{"mask": o.mask.astype(int).tolist(), "pixels": o.pixels.tolist()}
                    for o in objects],
        "canvases": canvases,
        "similarity": [[float(v) for v in row] for row in W],
        "similarity_kind": config.cluster_on,
        "timings": timings,
        "artifacts": [],
    }
    report = ExperimentReport(data)
    if out_dir is not None:
        export_artifacts(report, out_dir)
    return report


# --- exports --------------------------------------------------------------------


def cluster_permutation(labels: np.ndarray) -> np.ndarray:
    """State order grouping clusters together (excluded states last)."""
    labels = np.asarray(labels)
    sort_key = np.where(labels < 0, np.iinfo(np.int32).max, labels)
    return np.lexsort((np.arange(len(labels)), sort_key))


def export_artifacts(report: ExperimentReport, out_dir) -> list[str]:
    """Write report.json, curve/matrix CSVs, the clustered heatmap and the
    per-cluster reconstruction renders. Pure function of the report: a
    re-export produces byte-identical files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = report.data

    names = ["report.json", "ncut.csv", "similarity.csv", "heatmap.pgm"]
    for key in sorted(data["canvases"], key=int):
        names += [f"recon_{key}.ppm", f"recon_{key}.json"]
    data["artifacts"] = names
    data["out_dir"] = str(out)

    try:
        report.save(out / REPORT_FILE)

        curve = NcutCurve(
            ncut={int(k): v for k, v in data["ncut_curve"].items()},
            delta={int(k): v for k, v in data["delta_curve"].items()},
            delta_centered={int(k): v for k, v in data["delta_centered"].items()},
            n_star_verbatim=data["n_star_verbatim"],
            n_star_centered=data["n_star_centered"],
            convention=data["knee_convention"],
        )
        ncut_curve_to_csv(curve, out / "ncut.csv")

        W = report.similarity
        similarity_to_csv(W, out / "similarity.csv")

        perm = cluster_permutation(report.labels)
        write_pgm(out / "heatmap.pgm", to_gray(W[np.ix_(perm, perm)]))

        for key in sorted(data["canvases"], key=int):
            canvas = canvas_from_json_dict(data["canvases"][key]["canvas"])
            canvas_to_ppm(canvas, out / f"recon_{key}.ppm")
            canvas_to_json(canvas, out / f"recon_{key}.json")
    except OSError as exc:
        raise RuntimeError(f"export to {out} failed: {exc}") from exc
    return names


def render_report_dir(in_dir) -> list[str]:
    """Re-render all artifacts from an existing report.json."""
    report = ExperimentReport.load(Path(in_dir) / REPORT_FILE)
    return export_artifacts(report, in_dir)


# --- sweeps ---------------------------------------------------------------------


def _sweep_cell(config: ScenarioConfig, parameter: str, value, seed: int, out_dir):
    cell_config = apply_sweep_value(config, parameter, value)
    cell_dir = None
    if out_dir is not None:
        cell_dir = Path(out_dir) / f"{parameter}={value}-s{seed}"
    return run_scenario(cell_config, seed, cell_dir)


def sweep(config: ScenarioConfig, parameter: str, values, seeds,
          out_dir=None, workers: int = 1) -> list[ExperimentReport]:
    """Run the cross product of values x seeds; never skips a cell.

    Cells are independent and may run in parallel; results come back in
    (value-major, seed-minor) order regardless of worker count.
    """
    values = list(values)
    seeds = list(seeds)
    for v in values:  # validate every cell's config before any heavy work
        apply_sweep_value(config, parameter, v)
    cells = [(v, s) for v in values for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_cell, config, parameter, v, s, out_dir)
                       for v, s in cells]
            reports = [f.result() for f in futures]
    else:
        reports = [_sweep_cell(config, parameter, v, s, out_dir) for v, s in cells]
    if out_dir is not None:
        write_sweep_summary(reports, parameter, Path(out_dir) / "summary.csv")
    return reports


def write_sweep_summary(reports: list[ExperimentReport], parameter: str, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([parameter, "seed", "n_star", "n_star_verbatim",
                         "n_star_centered", "ari", "purities"])
        for r in reports:
            d = r.data
            value = d["config"]["grid"].get(parameter, d["config"].get(parameter))
            purities = ";".join(f"{c['purity']:.4f}" for c in d["cluster_stats"])
            writer.writerow([value, d["seed"], d["n_star"], d["n_star_verbatim"],
                             d["n_star_centered"], f"{d['ari']:.6f}", purities])
