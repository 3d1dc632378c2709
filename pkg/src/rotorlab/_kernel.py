"""Compiled inner loops for the dense-grid fast path."""

import numba
import numpy as np

BUDGET_SPENT = 0
PASSED_TARGET = 1
LEFT_GRID = 2

FNV_OFFSET = np.uint64(0xCBF29CE484222325)
FNV_PRIME = np.uint64(0x100000001B3)


@numba.njit(cache=True)
def run_dense(pos, labels, modified, uses, instrument, succ, radius, strides,
              target, budget, counters):
    """Step while the walker sits inside the dense grid.

    ``counters`` is ``[step_count, origin_visits, max_norm_seen]`` and is
    updated in place. Returns ``(steps_taken, status)``.
    """
    d = pos.shape[0]
    idx = 0
    for i in range(d):
        idx += (pos[i] + radius) * strides[i]
    taken = 0
    while taken < budget:
        c = labels[idx]
        labels[idx] = succ[c]
        modified[idx] = 1
        if instrument:
            uses[idx, c] += 1
        if c < d:
            pos[c] += 1
            idx += strides[c]
        else:
            pos[c - d] -= 1
            idx -= strides[c - d]
        taken += 1
        counters[0] += 1
        norm = 0
        for i in range(d):
            a = abs(pos[i])
            if a > norm:
                norm = a
        if norm == 0:
            counters[1] += 1
        if norm > counters[2]:
            counters[2] = norm
        if norm > target:
            return taken, PASSED_TARGET
        if norm > radius:
            return taken, LEFT_GRID
    return taken, BUDGET_SPENT


@numba.njit(cache=True)
def fnv1a64(data):
    h = FNV_OFFSET
    for i in range(data.shape[0]):
        h ^= np.uint64(data[i])
        h *= FNV_PRIME
    return h
