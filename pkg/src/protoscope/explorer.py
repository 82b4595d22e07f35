"""Patch and motor encodings, exploration config, triplet stream and cache.

A sensation is a 3x3 window of trinary pixels, packed row-major into one
integer (first pixel most significant). A motor command is a relative
sensor displacement packed the same way over both axes; the optional
rotate action gets the single index after all displacements.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from .gridworld import GridConfig, PATCH_SIDE

PATCH_CELLS = PATCH_SIDE * PATCH_SIDE

# Digit weights, first pixel most significant.
POW3 = (3 ** np.arange(PATCH_CELLS - 1, -1, -1)).astype(np.int64)
N_CODES = 3 ** PATCH_CELLS  # 19683


def n_codes(alphabet: int = 3) -> int:
    return alphabet ** PATCH_CELLS


def encode_patch(patch, alphabet: int = 3) -> int:
    """Pack 9 pixel values (row-major, each in 1..alphabet) into one code."""
    arr = np.asarray(patch, dtype=np.int64).reshape(-1)
    if arr.shape != (PATCH_CELLS,):
        raise ValueError(f"patch must have {PATCH_CELLS} values")
    if arr.min() < 1 or arr.max() > alphabet:
        raise ValueError(f"patch values must be in 1..{alphabet}")
    weights = (alphabet ** np.arange(PATCH_CELLS - 1, -1, -1)).astype(np.int64)
    return int(((arr - 1) * weights).sum())


def decode_code(code: int, alphabet: int = 3) -> np.ndarray:
    """Inverse of encode_patch; returns the 9 pixel values row-major."""
    return decode_codes(np.asarray([code]), alphabet=alphabet)[0]


def decode_codes(codes, alphabet: int = 3, dtype=np.float64) -> np.ndarray:
    """Vectorized decode: (n,) codes -> (n, 9) pixel values."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.min(initial=0) < 0 or codes.max(initial=0) >= n_codes(alphabet):
        raise ValueError("code out of range")
    weights = (alphabet ** np.arange(PATCH_CELLS - 1, -1, -1)).astype(np.int64)
    return ((codes[:, None] // weights[None, :]) % alphabet + 1).astype(dtype)


@dataclass(frozen=True)
class MotorSpace:
    """Bijective encoding of sensor displacements (plus optional rotate).

    With P anchor positions per axis, displacements span [-(P-1), P-1] on
    each axis, giving (2P-1)^2 movement commands. The rotate action, when
    enabled, is the extra index n_move.
    """

    anchors_per_axis: int
    rotation_enabled: bool = False

    @property
    def n_move(self) -> int:
        return (2 * self.anchors_per_axis - 1) ** 2

    @property
    def rotate_index(self) -> Optional[int]:
        return self.n_move if self.rotation_enabled else None

    @property
    def n_total(self) -> int:
        return self.n_move + (1 if self.rotation_enabled else 0)

    @property
    def n_actions(self) -> int:
        """Distinct policy choices: one per target anchor, plus rotate."""
        p = self.anchors_per_axis
        return p * p + (1 if self.rotation_enabled else 0)

    def motor_index(self, from_anchor: tuple[int, int], to_anchor: tuple[int, int]) -> int:
        p = self.anchors_per_axis
        for a in (from_anchor, to_anchor):
            if not (0 <= a[0] < p and 0 <= a[1] < p):
                raise ValueError(f"anchor {a} outside the {p}x{p} lattice")
        dr = to_anchor[0] - from_anchor[0]
        dc = to_anchor[1] - from_anchor[1]
        return (dr + p - 1) * (2 * p - 1) + (dc + p - 1)

    def displacement(self, motor: int) -> tuple[int, int]:
        """Inverse of motor_index; undefined for the rotate index."""
        p = self.anchors_per_axis
        if not 0 <= motor < self.n_move:
            raise ValueError(f"motor {motor} has no displacement")
        span = 2 * p - 1
        return (motor // span - (p - 1), motor % span - (p - 1))

    @property
    def null_motor(self) -> int:
        return self.motor_index((0, 0), (0, 0))


def motor_space_for(grid: GridConfig) -> MotorSpace:
    return MotorSpace(grid.anchors_per_axis, grid.rotation_enabled)


@dataclass
class ExploreConfig:
    n_step: int = 30_000_000
    seed: int = 0
    grid: GridConfig = field(default_factory=GridConfig)

    def __post_init__(self):
        if self.n_step < 1:
            raise ValueError("n_step must be >= 1")


TripletSink = Callable[[np.ndarray, np.ndarray, np.ndarray], None]


def explore_stream(config: ExploreConfig, sink: TripletSink) -> None:
    """Run the exploration and feed (code_t, motor, code_next) array chunks
    to ``sink`` in stream order. Deterministic given config.seed; calling it
    twice replays the identical stream (this is how the two passes work).
    """
    from .engine import simulate_chunks

    for chunk in simulate_chunks(config.grid, config.n_step, config.seed):
        sink(chunk.codes[:-1], chunk.motors, chunk.codes[1:])


# --- optional binary triplet cache (debugging aid) ---------------------------

CACHE_MAGIC = b"SMT1"


def write_triplet_cache(path, chunks: Iterable[tuple[np.ndarray, np.ndarray, np.ndarray]]) -> int:
    """Write (code_t, motor, code_next) chunks as little-endian u16 triples.

    Returns the number of triplets written.
    """
    count = 0
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(struct.pack("<I", 0))  # patched once the count is known
        for ct, m, cn in chunks:
            rec = np.empty((len(m), 3), dtype="<u2")
            rec[:, 0] = ct
            rec[:, 1] = m
            rec[:, 2] = cn
            f.write(rec.tobytes())
            count += len(m)
        f.seek(len(CACHE_MAGIC))
        f.write(struct.pack("<I", count))
    return count


def read_triplet_cache(path, chunk_size: int = 1 << 18) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (code_t, motor, code_next) chunks from a cache file."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CACHE_MAGIC:
            raise ValueError(f"not a triplet cache (magic {magic!r})")
        (count,) = struct.unpack("<I", f.read(4))
        remaining = count
        while remaining > 0:
            n = min(remaining, chunk_size)
            raw = f.read(n * 6)
            if len(raw) != n * 6:
                raise ValueError("truncated triplet cache")
            rec = np.frombuffer(raw, dtype="<u2").reshape(n, 3)
            yield (
                rec[:, 0].astype(np.int64),
                rec[:, 1].astype(np.int64),
                rec[:, 2].astype(np.int64),
            )
            remaining -= n
