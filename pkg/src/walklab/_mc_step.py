"""Path-stepping kernels for the killed walk.

Two interchangeable implementations of the same per-path semantics:

* a numba ``@njit`` per-path loop (default when numba imports cleanly), and
* a vectorized pure-numpy twin.

Set ``WALKLAB_DISABLE_NUMBA=1`` to force the numpy path. Both consume the
same counter-based random stream (a splitmix64 mix of an affine counter,
keyed per path), so exit points, exit times, and visit counts are
bit-identical between the two and independent of execution order.

``benchmarks/bench_mc.py`` times one against the other.
"""

from __future__ import annotations

import os

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 1.0 / float(1 << 53)


def _env_disabled() -> bool:
    return os.environ.get("WALKLAB_DISABLE_NUMBA", "").strip().lower() in (
        "1", "true", "yes", "on",
    )

try:
    if _env_disabled():
        raise ImportError("numba disabled by WALKLAB_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - exercised via the env flag
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _stream_state(seed, path):
    return _mix64(seed ^ _mix64((np.uint64(path) + np.uint64(1)) * _GOLDEN))


@njit(cache=True)
def _walk_paths_nb(start, steps, box_lo, box_shape, cell_row, cumw,
                   n_paths, cap, seed, target_cell):
    """Per-path loop: sample steps from the per-cell cumulative tables until
    the walk leaves the stop region or hits the cap. When ``target_cell`` is
    nonnegative, counts visits to it strictly before exit (start included)."""
    d = start.shape[0]
    m = steps.shape[0]
    exits = np.zeros((n_paths, d), dtype=np.int64)
    times = np.zeros(n_paths, dtype=np.int64)
    trunc = np.zeros(n_paths, dtype=np.bool_)
    visits = np.zeros(n_paths, dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64)
    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * box_shape[k + 1]
    start_cell = np.int64(0)
    for k in range(d):
        start_cell += (start[k] - box_lo[k]) * strides[k]
    for p in range(n_paths):
        s = _stream_state(seed, p)
        for k in range(d):
            pos[k] = start[k]
        row = cell_row[start_cell]
        if target_cell >= 0 and start_cell == target_cell:
            visits[p] = 1
        t = np.int64(0)
        while True:
            if t >= cap:
                trunc[p] = True
                for k in range(d):
                    exits[p, k] = pos[k]
                times[p] = t
                break
            s = s + _GOLDEN
            u = float(_mix64(s) >> np.uint64(11)) * _U53
            j = 0
            while j < m - 1 and u >= cumw[row, j]:
                j += 1
            cell = np.int64(0)
            inside = True
            for k in range(d):
                pos[k] = pos[k] + steps[j, k]
                off = pos[k] - box_lo[k]
                if off < 0 or off >= box_shape[k]:
                    inside = False
                else:
                    cell += off * strides[k]
            t += 1
            if inside and cell_row[cell] >= 0:
                row = cell_row[cell]
                if target_cell >= 0 and cell == target_cell:
                    visits[p] += 1
            else:
                for k in range(d):
                    exits[p, k] = pos[k]
                times[p] = t
                break
    return exits, times, trunc, visits


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _walk_paths_np(start, steps, box_lo, box_shape, cell_row, cumw,
                   n_paths, cap, seed, target_cell):
    """Vectorized twin of the numba loop: advances every live path one step
    per sweep, drawing from the same per-path streams."""
    d = start.shape[0]
    m = steps.shape[0]
    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * box_shape[k + 1]

    idx = np.arange(n_paths, dtype=np.uint64)
    state = _mix64_np(np.uint64(seed) ^ _mix64_np((idx + np.uint64(1)) * _GOLDEN))
    pos = np.tile(start, (n_paths, 1))
    start_cell = int((start - box_lo) @ strides)
    row = np.full(n_paths, cell_row[start_cell], dtype=np.int64)
    visits = np.zeros(n_paths, dtype=np.int64)
    if target_cell >= 0 and start_cell == target_cell:
        visits[:] = 1

    exits = np.zeros((n_paths, d), dtype=np.int64)
    times = np.zeros(n_paths, dtype=np.int64)
    trunc = np.zeros(n_paths, dtype=bool)
    alive = np.ones(n_paths, dtype=bool)
    t = 0
    while alive.any():
        if t >= cap:
            trunc[alive] = True
            exits[alive] = pos[alive]
            times[alive] = t
            break
        ai = np.flatnonzero(alive)
        state[ai] += _GOLDEN
        u = (_mix64_np(state[ai]) >> np.uint64(11)).astype(np.float64) * _U53
        crows = cumw[row[ai]]
        j = np.minimum((u[:, None] >= crows).sum(axis=1), m - 1)
        pos[ai] += steps[j]
        t += 1
        off = pos[ai] - box_lo
        inbox = np.all((off >= 0) & (off < box_shape), axis=1)
        cell = np.where(inbox, off @ strides, 0)
        rows_new = np.where(inbox, cell_row[cell], -1)
        stays = rows_new >= 0
        row[ai[stays]] = rows_new[stays]
        if target_cell >= 0:
            hit = stays & (cell == target_cell) & inbox
            visits[ai[hit]] += 1
        done = ai[~stays]
        exits[done] = pos[done]
        times[done] = t
        alive[done] = False
    return exits, times, trunc, visits


def walk_paths(start, steps, box_lo, box_shape, cell_row, cumw,
               n_paths, cap, seed, target_cell=-1):
    """Dispatch to the compiled kernel or the numpy twin."""
    args = (
        np.asarray(start, dtype=np.int64),
        np.asarray(steps, dtype=np.int64),
        np.asarray(box_lo, dtype=np.int64),
        np.asarray(box_shape, dtype=np.int64),
        np.asarray(cell_row, dtype=np.int64),
        np.asarray(cumw, dtype=np.float64),
        int(n_paths),
        int(cap),
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        int(target_cell),
    )
    if NUMBA_ENABLED:
        return _walk_paths_nb(*args)
    return _walk_paths_np(*args)
