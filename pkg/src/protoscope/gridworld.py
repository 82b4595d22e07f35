"""Stochastic gridworld with movable, occluding proto-objects.

The world is a small grid of trinary pixels. Proto-objects are rigid pixel
stamps that relocate (or vanish) at random, occluding the environment and
each other by id order. All randomness flows through explicit generators,
so trajectories are a pure function of (seed, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

# Provenance tags for a sensor window. Nonnegative values mean "fully
# covered by that object id (topmost)".
PROV_ENV = -1
PROV_MIXED = -2

PATCH_SIDE = 3


@dataclass
class GridConfig:
    width: int = 20
    height: int = 20
    alphabet_size: int = 3
    n_obj: int = 2
    obj_size_min: int = 5
    obj_size_max: int = 7
    fill_fraction_min: float = 0.6
    p_env: float = 0.05
    p_obj: float = 0.1
    p_abs: float = 0.2
    linked: bool = False
    identical: bool = False
    rotation_enabled: bool = False
    small_objects: bool = False

    def __post_init__(self):
        if self.small_objects:
            self.obj_size_min = 2
            self.obj_size_max = 2
        if min(self.width, self.height) < PATCH_SIDE:
            raise ValueError("grid must be at least 3x3 to fit the sensor window")
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        for name in ("p_env", "p_obj", "p_abs"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if not 1 <= self.obj_size_min <= self.obj_size_max <= min(self.width, self.height):
            raise ValueError("object size bounds must satisfy 1 <= min <= max <= grid side")
        if not 0.0 < self.fill_fraction_min <= 1.0:
            raise ValueError("fill_fraction_min must be in (0, 1]")
        if not 0 <= self.n_obj <= 8:
            raise ValueError("n_obj must be in [0, 8]")
        if self.linked and self.n_obj < 2:
            raise ValueError("linked mode needs at least two objects")
        if self.linked and self.rotation_enabled:
            raise ValueError("linked and rotation_enabled cannot be combined")
        if self.rotation_enabled and self.width != self.height:
            raise ValueError("rotation requires a square grid")

    @property
    def anchors_per_axis(self) -> int:
        return self.width - PATCH_SIDE + 1


@dataclass
class ProtoObject:
    """Rigid stamp: mask + pixel values over its bounding box.

    ``anchor`` is the grid cell of the box's top-left corner, or None when
    the object is currently absent from the world.
    """

    obj_id: int
    mask: np.ndarray    # bool, shape (box_h, box_w)
    pixels: np.ndarray  # int8, shape (box_h, box_w), values 1..alphabet
    anchor: Optional[tuple[int, int]]

    @property
    def box_h(self) -> int:
        return self.mask.shape[0]

    @property
    def box_w(self) -> int:
        return self.mask.shape[1]

    @property
    def present(self) -> bool:
        return self.anchor is not None

    def copy(self) -> "ProtoObject":
        return ProtoObject(self.obj_id, self.mask.copy(), self.pixels.copy(), self.anchor)


@dataclass
class StepEvents:
    """What the dynamics actually did in one step (for diagnostics/tests)."""

    env_redrawn: bool
    moved: tuple[bool, ...]


@dataclass
class WorldState:
    env_grid: np.ndarray           # int8, shape (height, width)
    objects: list[ProtoObject]
    step_index: int = 0
    # Fixed anchor offsets of each object relative to the rigid group's
    # bounding hull; only populated in linked mode.
    linked_offsets: Optional[list[tuple[int, int]]] = None
    last_events: Optional[StepEvents] = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.env_grid.shape

    def copy(self) -> "WorldState":
        return WorldState(
            self.env_grid.copy(),
            [o.copy() for o in self.objects],
            self.step_index,
            None if self.linked_offsets is None else list(self.linked_offsets),
            self.last_events,
        )


def _frontier_cells(mask: np.ndarray) -> list[tuple[int, int, int]]:
    """Cells outside the mask that touch it 4-adjacently, with touch counts.

    Enumerated in row-major order so accretion is deterministic.
    """
    h, w = mask.shape
    out = []
    for r in range(h):
        for c in range(w):
            if mask[r, c]:
                continue
            n = 0
            if r > 0 and mask[r - 1, c]:
                n += 1
            if r + 1 < h and mask[r + 1, c]:
                n += 1
            if c > 0 and mask[r, c - 1]:
                n += 1
            if c + 1 < w and mask[r, c + 1]:
                n += 1
            if n:
                out.append((r, c, n))
    return out


def _sides_touched(mask: np.ndarray) -> bool:
    return bool(mask[0].any() and mask[-1].any() and mask[:, 0].any() and mask[:, -1].any())


def generate_object(rng: np.random.Generator, config: GridConfig, obj_id: int = 0) -> ProtoObject:
    """Grow one proto-object stamp and place it uniformly in the grid.

    The mask accretes from the box center, preferring cells that touch the
    blob on several sides (keeps shapes compact but irregular), until the
    target cell count is reached and all four box sides are touched.
    """
    lo, hi = config.obj_size_min, config.obj_size_max
    box_h = int(rng.integers(lo, hi + 1))
    box_w = int(rng.integers(lo, hi + 1))
    area = box_h * box_w
    target = int(rng.integers(math.ceil(config.fill_fraction_min * area), area + 1))

    mask = np.zeros((box_h, box_w), dtype=bool)
    mask[box_h // 2, box_w // 2] = True
    while mask.sum() < target or not _sides_touched(mask):
        frontier = _frontier_cells(mask)
        weights = np.array([n * n * n for _, _, n in frontier], dtype=np.float64)
        pick = int(rng.choice(len(frontier), p=weights / weights.sum()))
        r, c, _ = frontier[pick]
        mask[r, c] = True

    pixels = rng.integers(1, config.alphabet_size + 1, size=(box_h, box_w), dtype=np.int8)
    anchor = draw_anchor(rng, config, box_h, box_w)
    return ProtoObject(obj_id, mask, pixels, anchor)


def n_anchor_positions(config: GridConfig, box_h: int, box_w: int) -> int:
    return (config.height - box_h + 1) * (config.width - box_w + 1)


def decode_anchor(index: int, config: GridConfig, box_h: int, box_w: int) -> tuple[int, int]:
    ncols = config.width - box_w + 1
    return (index // ncols, index % ncols)


def draw_anchor(rng: np.random.Generator, config: GridConfig, box_h: int, box_w: int) -> tuple[int, int]:
    return decode_anchor(int(rng.integers(0, n_anchor_positions(config, box_h, box_w))), config, box_h, box_w)


def _group_hull(objects: list[ProtoObject], offsets: list[tuple[int, int]]) -> tuple[int, int]:
    hull_h = max(off[0] + o.box_h for o, off in zip(objects, offsets))
    hull_w = max(off[1] + o.box_w for o, off in zip(objects, offsets))
    return hull_h, hull_w


def init_world(rng: np.random.Generator, config: GridConfig) -> WorldState:
    """Draw the initial environment and proto-objects (world-init stream)."""
    env = rng.integers(1, config.alphabet_size + 1, size=(config.height, config.width), dtype=np.int8)
    objects: list[ProtoObject] = []
    for j in range(config.n_obj):
        if config.identical and j > 0:
            first = objects[0]
            anchor = draw_anchor(rng, config, first.box_h, first.box_w)
            objects.append(ProtoObject(j, first.mask.copy(), first.pixels.copy(), anchor))
        else:
            objects.append(generate_object(rng, config, obj_id=j))

    linked_offsets = None
    if config.linked:
        anchors = [o.anchor for o in objects]
        base = (min(a[0] for a in anchors), min(a[1] for a in anchors))
        linked_offsets = [(a[0] - base[0], a[1] - base[1]) for a in anchors]
        hull_h, hull_w = _group_hull(objects, linked_offsets)
        if hull_h > config.height or hull_w > config.width:
            # Rigid hull must fit the grid; re-anchor the group compactly.
            raise AssertionError("unreachable: individual boxes already fit the grid")

    return WorldState(env, objects, 0, linked_offsets)


@dataclass
class DynamicsDraws:
    """Raw random outcomes consumed by one dynamics step.

    In linked mode the arrays have length 1 and describe the rigid group.
    """

    env_event: bool
    moved: np.ndarray      # bool
    absent: np.ndarray     # bool
    pos_index: np.ndarray  # int
    env_values: Optional[np.ndarray]  # (height, width) int8 when env_event


def draw_dynamics(rng: np.random.Generator, state: WorldState, config: GridConfig) -> DynamicsDraws:
    """Consume one step's dynamics randomness in a fixed order.

    Move/absence/position outcomes are drawn unconditionally so the stream
    layout does not depend on earlier outcomes; environment pixel values
    are drawn only when the redraw event fires.
    """
    env_event = bool(rng.random() < config.p_env)
    n = 1 if config.linked else len(state.objects)
    moved = rng.random(n) < config.p_obj
    absent = rng.random(n) < config.p_abs
    if config.linked:
        hull_h, hull_w = _group_hull(state.objects, state.linked_offsets)
        bounds = [n_anchor_positions(config, hull_h, hull_w)]
    else:
        bounds = [n_anchor_positions(config, o.box_h, o.box_w) for o in state.objects]
    pos_index = np.array([int(rng.integers(0, b)) for b in bounds], dtype=np.int64)
    env_values = None
    if env_event:
        env_values = rng.integers(1, config.alphabet_size + 1, size=state.shape, dtype=np.int8)
    return DynamicsDraws(env_event, moved, absent, pos_index, env_values)


def apply_dynamics(state: WorldState, draws: DynamicsDraws, config: GridConfig) -> WorldState:
    """Advance the world one step given already-drawn outcomes.

    The environment redraw replaces every pixel (objects keep occluding).
    A move event redraws the object's placement: absent with p_abs, else a
    uniform valid anchor (which may coincide with the old one). Objects
    without a move event keep placement and presence exactly. In linked
    mode one shared event relocates (or hides) the whole rigid group.
    """
    new = state.copy()
    new.step_index = state.step_index + 1
    if draws.env_event:
        new.env_grid = draws.env_values.copy()

    if config.linked:
        if draws.moved[0]:
            if draws.absent[0]:
                for o in new.objects:
                    o.anchor = None
            else:
                hull_h, hull_w = _group_hull(new.objects, new.linked_offsets)
                ncols = config.width - hull_w + 1
                base = (int(draws.pos_index[0]) // ncols, int(draws.pos_index[0]) % ncols)
                for o, off in zip(new.objects, new.linked_offsets):
                    o.anchor = (base[0] + off[0], base[1] + off[1])
        moved_tuple = tuple([bool(draws.moved[0])] * len(new.objects))
    else:
        for j, o in enumerate(new.objects):
            if draws.moved[j]:
                if draws.absent[j]:
                    o.anchor = None
                else:
                    o.anchor = decode_anchor(int(draws.pos_index[j]), config, o.box_h, o.box_w)
        moved_tuple = tuple(bool(m) for m in draws.moved)

    new.last_events = StepEvents(bool(draws.env_event), moved_tuple)
    return new


def step_world(state: WorldState, rng: np.random.Generator, config: GridConfig) -> WorldState:
    """One step of stochastic dynamics (world-dynamics stream)."""
    return apply_dynamics(state, draw_dynamics(rng, state, config), config)


def rotate_objects(state: WorldState) -> WorldState:
    """Rotate every proto-object stamp 90 degrees clockwise in place.

    Box dimensions swap; a present object's anchor is clamped so the
    rotated box stays inside the grid. Environment pixels are untouched.
    """
    new = state.copy()
    height, width = new.shape
    for o in new.objects:
        o.mask = np.rot90(o.mask, k=-1).copy()
        o.pixels = np.rot90(o.pixels, k=-1).copy()
        if o.anchor is not None:
            r = min(o.anchor[0], height - o.box_h)
            c = min(o.anchor[1], width - o.box_w)
            o.anchor = (r, c)
    return new


def render_composite(state: WorldState) -> np.ndarray:
    """Visible grid: environment overdrawn by present objects, higher id on top."""
    comp = state.env_grid.copy()
    for o in state.objects:
        if o.anchor is None:
            continue
        r, c = o.anchor
        view = comp[r:r + o.box_h, c:c + o.box_w]
        view[o.mask] = o.pixels[o.mask]
    return comp


def render_provenance(state: WorldState) -> np.ndarray:
    """Per-cell topmost owner: object id, or PROV_ENV where uncovered."""
    prov = np.full(state.shape, PROV_ENV, dtype=np.int8)
    for o in state.objects:
        if o.anchor is None:
            continue
        r, c = o.anchor
        view = prov[r:r + o.box_h, c:c + o.box_w]
        view[o.mask] = o.obj_id
    return prov


def _check_window(state: WorldState, anchor: tuple[int, int]):
    r, c = anchor
    h, w = state.shape
    if not (0 <= r <= h - PATCH_SIDE and 0 <= c <= w - PATCH_SIDE):
        raise ValueError(f"window anchor {anchor} leaves the grid")


def read_patch(state: WorldState, anchor: tuple[int, int]) -> np.ndarray:
    """The 9 visible values under the 3x3 window at ``anchor``, row-major."""
    _check_window(state, anchor)
    r, c = anchor
    return render_composite(state)[r:r + PATCH_SIDE, c:c + PATCH_SIDE].reshape(-1).copy()


def provenance(state: WorldState, anchor: tuple[int, int]) -> int:
    """Ground-truth tag of the window: object id, PROV_ENV, or PROV_MIXED."""
    _check_window(state, anchor)
    r, c = anchor
    win = render_provenance(state)[r:r + PATCH_SIDE, c:c + PATCH_SIDE]
    lo, hi = int(win.min()), int(win.max())
    return lo if lo == hi else PROV_MIXED


def config_replace(config: GridConfig, **overrides) -> GridConfig:
    """Copy a config with field overrides (revalidates invariants)."""
    return replace(config, **overrides)
