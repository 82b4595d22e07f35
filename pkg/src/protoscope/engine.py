"""Chunk-vectorized exploration engine.

Simulates the random policy and world dynamics in fixed-size chunks of
transitions, emitting patch codes, motor indices and (optionally) ground
truth provenance as flat arrays. Step semantics are identical to the
scalar operations in :mod:`protoscope.gridworld` (the test suite checks
this against :func:`simulate_scalar`): within one transition the agent
senses, acts (a rotate action applies immediately), the stochastic
dynamics advance the world, and the next sensation is read.

The random draw layout per chunk is fixed (policy actions; then per-group
move/absence/position arrays; then environment redraw values), so a seed
replays the identical stream on every pass regardless of what consumers do
with it. The world is piecewise constant between change events, so each
chunk renders one composite grid per "epoch" and every sensation is nine
gathered cells from its epoch's composite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import rng as rngmod
from .explorer import MotorSpace, motor_space_for, POW3, encode_patch
from .gridworld import (
    GridConfig,
    DynamicsDraws,
    PROV_ENV,
    PROV_MIXED,
    WorldState,
    apply_dynamics,
    init_world,
    n_anchor_positions,
    provenance,
    read_patch,
    rotate_objects,
    _group_hull,
)

CHUNK = 1 << 18

# Packed ground-truth offset for OBJECT-tagged sensations:
# (obj_id * 8 + u_row) * 8 + u_col, -1 elsewhere. Box sides <= 7 keep both
# in-object window offsets below 8.
OFFSET_NONE = -1


@dataclass
class StreamChunk:
    start: int               # global index of the first transition
    codes: np.ndarray        # int16 (L+1,): sensations at t0 .. t0+L
    motors: np.ndarray       # int32 (L,): motor of transition t0+i
    anchors: np.ndarray      # int32 (L+1,): flat sensor anchors (r*P + c)
    prov: Optional[np.ndarray]        # int8 (L+1,): object id, PROV_ENV or PROV_MIXED
    obj_offset: Optional[np.ndarray]  # int16 (L+1,): packed window offset or -1
    is_last: bool

    @property
    def n_transitions(self) -> int:
        return len(self.motors)


@dataclass
class _ChunkDraws:
    act: np.ndarray       # int32 (L,)
    env_ev: np.ndarray    # bool (L,)
    mv: np.ndarray        # bool (G, L)
    ab: np.ndarray        # bool (G, L)
    pos: np.ndarray       # int32 (G, L)
    env_vals: np.ndarray  # int8 (n_env, H, W)


class _Stamps:
    """Per-object stamp data for all four orientations."""

    def __init__(self, state: WorldState, cfg: GridConfig):
        self.box_h = []   # [obj][orient]
        self.box_w = []
        self.rel_flat = []  # [obj][orient] int64 (n_cells,): dr*W + dc of mask cells
        self.vals = []      # [obj][orient] int8 (n_cells,)
        W = cfg.width
        for o in state.objects:
            mask, pix = o.mask, o.pixels
            bhs, bws, rels, vals = [], [], [], []
            for _ in range(4):
                rr, cc = np.nonzero(mask)
                bhs.append(mask.shape[0])
                bws.append(mask.shape[1])
                rels.append((rr.astype(np.int64) * W + cc).astype(np.int64))
                vals.append(pix[rr, cc].astype(np.int8))
                mask = np.rot90(mask, k=-1)
                pix = np.rot90(pix, k=-1)
            self.box_h.append(bhs)
            self.box_w.append(bws)
            self.rel_flat.append(rels)
            self.vals.append(vals)


class _Carry:
    """Mutable between-chunk world state."""

    def __init__(self, state: WorldState, cfg: GridConfig, anchor: int):
        n = cfg.n_obj
        self.env = state.env_grid.copy()
        self.pres = np.zeros(n, dtype=bool)
        self.r0 = np.zeros(n, dtype=np.int16)
        self.c0 = np.zeros(n, dtype=np.int16)
        for j, o in enumerate(state.objects):
            if o.anchor is not None:
                self.pres[j] = True
                self.r0[j], self.c0[j] = o.anchor
        self.orient = 0
        self.anchor = anchor


def _draw_chunk(pol: np.random.Generator, dyn: np.random.Generator, L: int,
                cfg: GridConfig, space: MotorSpace, pos_bounds: list[int]) -> _ChunkDraws:
    """Fixed per-chunk draw layout shared by the vectorized engine and the
    scalar twin. ``pos_bounds`` holds one anchor-count per move group."""
    act = pol.integers(0, space.n_actions, size=L, dtype=np.int32)
    env_ev = dyn.random(L) < cfg.p_env
    G = len(pos_bounds)
    mv = np.empty((G, L), dtype=bool)
    ab = np.empty((G, L), dtype=bool)
    pos = np.empty((G, L), dtype=np.int32)
    for g, bound in enumerate(pos_bounds):
        mv[g] = dyn.random(L) < cfg.p_obj
        ab[g] = dyn.random(L) < cfg.p_abs
        pos[g] = dyn.integers(0, bound, size=L, dtype=np.int32)
    n_env = int(env_ev.sum())
    env_vals = dyn.integers(1, cfg.alphabet_size + 1,
                            size=(n_env, cfg.height, cfg.width), dtype=np.int8)
    return _ChunkDraws(act, env_ev, mv, ab, pos, env_vals)


def _pos_bounds(state: WorldState, cfg: GridConfig) -> list[int]:
    if cfg.linked:
        hull_h, hull_w = _group_hull(state.objects, state.linked_offsets)
        return [n_anchor_positions(cfg, hull_h, hull_w)]
    # Anchor counts are orientation-invariant on the (square) rotation grid.
    return [n_anchor_positions(cfg, o.box_h, o.box_w) for o in state.objects]


def _resolve_epochs_fast(carry: _Carry, draws: _ChunkDraws, btr: np.ndarray,
                         cfg: GridConfig, stamps: _Stamps, offsets):
    """Vectorized per-epoch world resolution; valid only without rotation."""
    E = len(btr) + 1
    n = cfg.n_obj
    orient = np.zeros(E, dtype=np.int8)
    env_id = np.zeros(E, dtype=np.int32)
    env_id[1:] = np.cumsum(draws.env_ev[btr])
    pres = np.empty((n, E), dtype=bool)
    r0 = np.empty((n, E), dtype=np.int16)
    c0 = np.empty((n, E), dtype=np.int16)

    def fill(j: int, g: int, base_r: int, base_c: int):
        mv_b = draws.mv[g][btr]
        src = np.maximum.accumulate(np.where(mv_b, np.arange(1, E), 0))
        src = np.concatenate(([0], src))
        out_pres = np.concatenate(([carry.pres[j]], ~draws.ab[g][btr]))
        ncols = cfg.width - stamps.box_w[j][0] + 1 if not cfg.linked else None
        if cfg.linked:
            hull_w = offsets["hull_w"]
            ncols = cfg.width - hull_w + 1
        p = draws.pos[g][btr]
        out_r = np.concatenate(([carry.r0[j]], (p // ncols + base_r).astype(np.int16)))
        out_c = np.concatenate(([carry.c0[j]], (p % ncols + base_c).astype(np.int16)))
        pres[j] = out_pres[src]
        r0[j] = out_r[src]
        c0[j] = out_c[src]

    if cfg.linked:
        for j in range(n):
            off_r, off_c = offsets["rel"][j]
            fill(j, 0, off_r, off_c)
    else:
        for j in range(n):
            fill(j, j, 0, 0)
    return orient, env_id, pres, r0, c0


def _resolve_epochs_general(carry: _Carry, draws: _ChunkDraws, btr: np.ndarray,
                            rot: np.ndarray, cfg: GridConfig, stamps: _Stamps, offsets):
    """Boundary-by-boundary resolution; handles rotation (and everything else)."""
    E = len(btr) + 1
    n = cfg.n_obj
    H, W = cfg.height, cfg.width
    orient = np.empty(E, dtype=np.int8)
    env_id = np.empty(E, dtype=np.int32)
    pres = np.empty((n, E), dtype=bool)
    r0 = np.empty((n, E), dtype=np.int16)
    c0 = np.empty((n, E), dtype=np.int16)

    o = int(carry.orient)
    cur_pres = carry.pres.copy()
    cur_r = carry.r0.astype(np.int64).copy()
    cur_c = carry.c0.astype(np.int64).copy()
    envc = 0
    orient[0] = o
    env_id[0] = 0
    pres[:, 0] = cur_pres
    r0[:, 0] = cur_r
    c0[:, 0] = cur_c

    mv, ab, pos, env_ev = draws.mv, draws.ab, draws.pos, draws.env_ev
    for e, t in enumerate(btr, start=1):
        if rot[t]:
            o = (o + 1) % 4
            for j in range(n):
                if cur_pres[j]:
                    cur_r[j] = min(cur_r[j], H - stamps.box_h[j][o])
                    cur_c[j] = min(cur_c[j], W - stamps.box_w[j][o])
        if env_ev[t]:
            envc += 1
        if cfg.linked:
            if mv[0, t]:
                if ab[0, t]:
                    cur_pres[:] = False
                else:
                    hull_w = offsets["hull_w"]
                    ncols = W - hull_w + 1
                    base_r, base_c = divmod(int(pos[0, t]), ncols)
                    for j in range(n):
                        cur_pres[j] = True
                        cur_r[j] = base_r + offsets["rel"][j][0]
                        cur_c[j] = base_c + offsets["rel"][j][1]
        else:
            for j in range(n):
                if mv[j, t]:
                    if ab[j, t]:
                        cur_pres[j] = False
                    else:
                        cur_pres[j] = True
                        ncols = W - stamps.box_w[j][o] + 1
                        cur_r[j], cur_c[j] = divmod(int(pos[j, t]), ncols)
        orient[e] = o
        env_id[e] = envc
        pres[:, e] = cur_pres
        r0[:, e] = cur_r
        c0[:, e] = cur_c
    return orient, env_id, pres, r0, c0


def simulate_chunks(cfg: GridConfig, n_step: int, seed: int,
                    collect_provenance: bool = False,
                    chunk: int = CHUNK) -> Iterator[StreamChunk]:
    """Yield the exploration stream as StreamChunk records.

    Both passes of a run call this with the same arguments and receive
    bit-identical arrays.
    """
    if n_step < 1:
        raise ValueError("n_step must be >= 1")
    space = motor_space_for(cfg)
    P = cfg.anchors_per_axis
    P2 = P * P
    H, W = cfg.height, cfg.width
    HW = H * W
    n = cfg.n_obj

    init_rng = rngmod.stream(seed, "world-init")
    dyn = rngmod.stream(seed, "world-dynamics")
    pol = rngmod.stream(seed, "policy")

    state0 = init_world(init_rng, cfg)
    stamps = _Stamps(state0, cfg)
    offsets = None
    if cfg.linked:
        hull_h, hull_w = _group_hull(state0.objects, state0.linked_offsets)
        offsets = {"rel": state0.linked_offsets, "hull_h": hull_h, "hull_w": hull_w}
    pos_bounds = _pos_bounds(state0, cfg)

    start_anchor = int(pol.integers(0, P2))
    carry = _Carry(state0, cfg, start_anchor)

    win_off = [(dr, dc) for dr in range(3) for dc in range(3)]
    pow3 = POW3.astype(np.int16)

    done = 0
    while done < n_step:
        L = min(chunk, n_step - done)
        draws = _draw_chunk(pol, dyn, L, cfg, space, pos_bounds)
        rot = (draws.act == P2) if cfg.rotation_enabled else np.zeros(L, dtype=bool)
        moved_any = draws.mv.any(axis=0) if n else np.zeros(L, dtype=bool)
        chg = draws.env_ev | moved_any | rot
        btr = np.flatnonzero(chg)
        E = len(btr) + 1

        if cfg.rotation_enabled:
            orient, env_id, pres, r0, c0 = _resolve_epochs_general(
                carry, draws, btr, rot, cfg, stamps, offsets)
        else:
            orient, env_id, pres, r0, c0 = _resolve_epochs_fast(
                carry, draws, btr, cfg, stamps, offsets)

        # Composite (and provenance) grid per epoch.
        env_stack = np.concatenate([carry.env.reshape(1, HW),
                                    draws.env_vals.reshape(-1, HW)], axis=0)
        comp = env_stack.take(env_id, axis=0)
        prov = np.full((E, HW), PROV_ENV, dtype=np.int8) if collect_provenance else None
        for j in range(n):
            for o in (range(4) if cfg.rotation_enabled else (0,)):
                sel = pres[j] & (orient == o)
                idx_e = np.flatnonzero(sel)
                if idx_e.size == 0:
                    continue
                base = (idx_e.astype(np.int64) * HW
                        + r0[j, sel].astype(np.int64) * W + c0[j, sel])
                flat = base[:, None] + stamps.rel_flat[j][o][None, :]
                comp.reshape(-1)[flat] = stamps.vals[j][o][None, :]
                if prov is not None:
                    prov.reshape(-1)[flat] = np.int8(j)

        # Sensor anchors for sensations t0..t0+L.
        a = np.empty(L + 1, dtype=np.int32)
        a[0] = carry.anchor
        if cfg.rotation_enabled:
            idx = np.maximum.accumulate(np.where(draws.act < P2, np.arange(1, L + 1), 0))
            a[1:] = np.where(idx > 0, draws.act[np.maximum(idx - 1, 0)], carry.anchor)
        else:
            a[1:] = draws.act
        ar = a // P
        ac = a % P

        motors = ((ar[1:] - ar[:-1] + P - 1).astype(np.int32) * (2 * P - 1)
                  + (ac[1:] - ac[:-1] + P - 1))
        if cfg.rotation_enabled:
            motors[rot] = space.rotate_index

        eid = np.empty(L + 1, dtype=np.int64)
        eid[0] = 0
        np.cumsum(chg, out=eid[1:])

        cell_base = eid * HW + ar.astype(np.int64) * W + ac
        comp_flat = comp.reshape(-1)
        codes = np.zeros(L + 1, dtype=np.int16)
        for k, (dr, dc) in enumerate(win_off):
            cells = comp_flat.take(cell_base + (dr * W + dc))
            codes += (cells.astype(np.int16) - 1) * pow3[k]

        tags = off = None
        if collect_provenance:
            prov_flat = prov.reshape(-1)
            mn = prov_flat.take(cell_base)
            mx = mn.copy()
            for dr, dc in win_off[1:]:
                cells = prov_flat.take(cell_base + (dr * W + dc))
                np.minimum(mn, cells, out=mn)
                np.maximum(mx, cells, out=mx)
            tags = np.where(mn == mx, mn, np.int8(PROV_MIXED)).astype(np.int8)
            off = np.full(L + 1, OFFSET_NONE, dtype=np.int16)
            sel = tags >= 0
            if sel.any():
                k_obj = tags[sel].astype(np.int64)
                e_sel = eid[sel]
                ur = ar[sel] - r0[k_obj, e_sel]
                uc = ac[sel] - c0[k_obj, e_sel]
                off[sel] = ((k_obj * 8 + ur) * 8 + uc).astype(np.int16)

        # Carry world and sensor into the next chunk.
        carry.env = env_stack[env_id[-1]].reshape(H, W).copy()
        carry.pres = pres[:, -1].copy()
        carry.r0 = r0[:, -1].copy()
        carry.c0 = c0[:, -1].copy()
        carry.orient = int(orient[-1])
        carry.anchor = int(a[-1])

        yield StreamChunk(done, codes, motors, a, tags, off, done + L >= n_step)
        done += L


def unpack_offsets(off: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split packed object offsets into (obj_id, u_row, u_col); -1 stays -1."""
    obj = np.where(off >= 0, off >> 6, -1)
    ur = np.where(off >= 0, (off >> 3) & 7, -1)
    uc = np.where(off >= 0, off & 7, -1)
    return obj, ur, uc


def simulate_scalar(cfg: GridConfig, n_step: int, seed: int,
                    collect_provenance: bool = False,
                    chunk: int = CHUNK):
    """Slow scalar twin of simulate_chunks, built on the gridworld ops.

    Consumes the same per-chunk draws and returns the whole stream at once:
    (codes, motors, anchors, prov, obj_offset). Only for tests and small n.
    """
    space = motor_space_for(cfg)
    P = cfg.anchors_per_axis
    P2 = P * P

    init_rng = rngmod.stream(seed, "world-init")
    dyn = rngmod.stream(seed, "world-dynamics")
    pol = rngmod.stream(seed, "policy")

    state = init_world(init_rng, cfg)
    pos_bounds = _pos_bounds(state, cfg)
    anchor = int(pol.integers(0, P2))

    codes, motors, anchors, tags, offs = [], [], [], [], []

    def sense():
        r, c = divmod(anchor, P)
        codes.append(encode_patch(read_patch(state, (r, c)), cfg.alphabet_size))
        anchors.append(anchor)
        if collect_provenance:
            tag = provenance(state, (r, c))
            tags.append(tag)
            if tag >= 0:
                orr, occ = state.objects[tag].anchor
                offs.append((tag * 8 + (r - orr)) * 8 + (c - occ))
            else:
                offs.append(OFFSET_NONE)

    done = 0
    while done < n_step:
        L = min(chunk, n_step - done)
        draws = _draw_chunk(pol, dyn, L, cfg, space, pos_bounds)
        envc = 0
        for i in range(L):
            sense()
            act = int(draws.act[i])
            if cfg.rotation_enabled and act == P2:
                motors.append(space.rotate_index)
                state = rotate_objects(state)
            else:
                r0, c0 = divmod(anchor, P)
                r1, c1 = divmod(act, P)
                motors.append(space.motor_index((r0, c0), (r1, c1)))
                anchor = act
            env_vals = None
            if draws.env_ev[i]:
                env_vals = draws.env_vals[envc]
                envc += 1
            dd = DynamicsDraws(bool(draws.env_ev[i]), draws.mv[:, i],
                               draws.ab[:, i], draws.pos[:, i], env_vals)
            state = apply_dynamics(state, dd, cfg)
        done += L
    sense()
    return (np.asarray(codes, dtype=np.int16),
            np.asarray(motors, dtype=np.int32),
            np.asarray(anchors, dtype=np.int32),
            np.asarray(tags, dtype=np.int8) if collect_provenance else None,
            np.asarray(offs, dtype=np.int16) if collect_provenance else None)
