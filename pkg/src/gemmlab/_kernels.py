"""Compiled GEMM kernels under a work-group / work-item dispatch model.

All matrices are flat row-major buffers of order ``n``. Operand layouts are
expressed as strides so one kernel body serves every flavour::

    A'[i, k] = a[i * a_si + k * a_sk]
    B'[k, j] = b[k * b_sk + j * b_sj]

Work-groups are independent (disjoint regions of ``out``) and are spread
over threads with ``prange``. Every variant accumulates each output element
over ``k`` in ascending order in the operand precision, so all of them are
bit-identical to the reference loop.
"""

import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # avoid probing an incompatible TBB first (emits a warning on import)
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@njit(cache=True)
def reference(a, b, c, out, n, alpha, beta, a_si, a_sk, b_sk, b_sj):
    for i in range(n):
        for j in range(n):
            acc = out.dtype.type(0)
            for k in range(n):
                acc += a[i * a_si + k * a_sk] * b[k * b_sk + j * b_sj]
            out[i * n + j] = alpha * acc + beta * c[i * n + j]


@njit(cache=True, parallel=True)
def naive(a, b, c, out, n, alpha, beta, a_si, a_sk, b_sk, b_sj, s_j, s_i):
    groups_j = n // s_j
    groups_i = n // s_i
    for g in prange(groups_i * groups_j):
        gi = g // groups_j
        gj = g % groups_j
        for wi in range(s_i):
            i = gi * s_i + wi
            for wj in range(s_j):
                j = gj * s_j + wj
                acc = out.dtype.type(0)
                for k in range(n):
                    acc += a[i * a_si + k * a_sk] * b[k * b_sk + j * b_sj]
                out[i * n + j] = alpha * acc + beta * c[i * n + j]


@njit(cache=True, parallel=True)
def coarsened(a, b, c, out, n, alpha, beta, a_si, a_sk, b_sk, b_sj, d_j, d_i, s_j, s_i):
    groups_j = n // (d_j * s_j)
    groups_i = n // (d_i * s_i)
    for g in prange(groups_i * groups_j):
        gi = g // groups_j
        gj = g % groups_j
        acc = np.empty(d_i * d_j, dtype=out.dtype)
        for wi in range(s_i):
            i0 = (gi * s_i + wi) * d_i
            for wj in range(s_j):
                j0 = (gj * s_j + wj) * d_j
                acc[:] = 0
                for k in range(n):
                    for ii in range(d_i):
                        av = a[(i0 + ii) * a_si + k * a_sk]
                        for jj in range(d_j):
                            acc[ii * d_j + jj] += av * b[k * b_sk + (j0 + jj) * b_sj]
                for ii in range(d_i):
                    for jj in range(d_j):
                        idx = (i0 + ii) * n + j0 + jj
                        out[idx] = alpha * acc[ii * d_j + jj] + beta * c[idx]


@njit(cache=True, parallel=True)
def tiled(a, b, c, out, n, alpha, beta, a_si, a_sk, b_sk, b_sj, d_j, d_i, s_j, s_i, depth):
    rows = d_i * s_i
    cols = d_j * s_j
    groups_j = n // cols
    groups_i = n // rows
    for g in prange(groups_i * groups_j):
        gi = g // groups_j
        gj = g % groups_j
        row0 = gi * rows
        col0 = gj * cols
        acc = np.zeros(rows * cols, dtype=out.dtype)
        a_tile = np.empty(rows * depth, dtype=out.dtype)
        b_tile = np.empty(depth * cols, dtype=out.dtype)
        for k0 in range(0, n, depth):
            kd = min(depth, n - k0)
            # cooperative load: element e of each staged block is fetched by
            # work-item e % (s_i * s_j); the assignment does not change the data
            for r in range(rows):
                src = (row0 + r) * a_si + k0 * a_sk
                for kk in range(kd):
                    a_tile[r * depth + kk] = a[src + kk * a_sk]
            for kk in range(kd):
                src = (k0 + kk) * b_sk + col0 * b_sj
                for col in range(cols):
                    b_tile[kk * cols + col] = b[src + col * b_sj]
            # barrier: the whole tile is staged before any work-item consumes it.
            # Work-items then advance through k in lockstep; each (r, col) slot
            # belongs to work-item (col // d_j, r // d_i).
            for kk in range(kd):
                for r in range(rows):
                    av = a_tile[r * depth + kk]
                    base = r * cols
                    for col in range(cols):
                        acc[base + col] += av * b_tile[kk * cols + col]
        for r in range(rows):
            for col in range(cols):
                idx = (row0 + r) * n + col0 + col
                out[idx] = alpha * acc[r * cols + col] + beta * c[idx]
