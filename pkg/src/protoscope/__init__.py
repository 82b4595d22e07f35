"""protoscope: proto-object discovery from random sensorimotor exploration.

A random agent moves a 3x3 sensor over a stochastic gridworld containing
rigid, movable pixel structures. Its sensorimotor transitions are
quantized, counted, turned into a state similarity graph, and spectrally
clustered; densely connected subgraphs are the agent's internal handle on
the proto-objects, usable for predictive reconstruction.
"""

from .codebook import Codebook, PatchKMeans, build_assign_table, fit_codebook
from .explorer import (ExploreConfig, MotorSpace, N_CODES, decode_code,
                       decode_codes, encode_patch, explore_stream,
                       motor_space_for, read_triplet_cache, write_triplet_cache)
from .gridworld import (GridConfig, PROV_ENV, PROV_MIXED, ProtoObject,
                        WorldState, generate_object, init_world, provenance,
                        read_patch, render_composite, render_provenance,
                        rotate_objects, step_world)
from .harness import (ExperimentReport, ScenarioConfig, adjusted_rand_index,
                      export_artifacts, label_states_ground_truth,
                      make_scenario, run_scenario, sweep)
from .predictor import Canvas, predict_next, reconstruct_canvas
from .similarity import (MODE_ARGMAX, MODE_SUM_OVER_E, SimilarityParams,
                         build_lambda_s, build_lambda_sm)
from .spectral import (Clustering, NcutCurve, NcutSpectralClustering,
                       SpectralParams, cut_gap, ncut, spectral_cluster)
from .transitions import TensorAccumulator, TransitionTensor, accumulate

__version__ = "0.1.0"

__all__ = [
    "Canvas", "Clustering", "Codebook", "ExperimentReport", "ExploreConfig",
    "GridConfig", "MODE_ARGMAX", "MODE_SUM_OVER_E", "MotorSpace", "N_CODES",
    "NcutCurve", "NcutSpectralClustering", "PROV_ENV", "PROV_MIXED",
    "PatchKMeans", "ProtoObject", "ScenarioConfig", "SimilarityParams",
    "SpectralParams", "TensorAccumulator", "TransitionTensor", "WorldState",
    "accumulate", "adjusted_rand_index", "build_assign_table",
    "build_lambda_s", "build_lambda_sm", "cut_gap", "decode_code",
    "decode_codes", "encode_patch", "explore_stream", "export_artifacts",
    "fit_codebook", "generate_object", "init_world",
    "label_states_ground_truth", "make_scenario", "motor_space_for", "ncut",
    "predict_next", "provenance", "read_patch", "read_triplet_cache",
    "reconstruct_canvas", "render_composite", "render_provenance",
    "rotate_objects", "run_scenario", "spectral_cluster", "step_world",
    "sweep", "write_triplet_cache",
]
