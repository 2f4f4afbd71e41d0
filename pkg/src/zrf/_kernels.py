"""Compiled inner loops shared by field evaluation and the Monte Carlo runs.

Every trigonometric sum is written as ``sum_p A_p cos(h L_p) + B_p sin(h L_p)``
with per-sample coefficients ``A, B`` and per-grid tables ``cos(h L), sin(h L)``.
Sums run over primes in ascending order with an error-free TwoSum accumulator,
one independent accumulator per grid point, so results do not depend on how
trials or grid blocks are split between workers.
"""

import math

import numpy as np
from numba import njit

# grid points and primes per table block; rotation steps between exact re-anchors
BLOCK = 512
PRIME_BLOCK = 256
ANCHOR_EVERY = 32
FUSED_MAX_ROWS = 2


@njit(cache=True, nogil=True)
def uniform_tables(log_p, lo, step, j0, C, S, Ct, St, rc, rs):
    """Fill C, S [p, j] with cos/sin of ``(lo + (j0+j)*step) * log_p``.

    Entries are rebuilt from ``math.cos``/``math.sin`` at every multiple of
    ANCHOR_EVERY and advanced by complex rotation in between. Ct, St are
    [j, p] scratch buffers; rc, rs hold cos/sin of ``step * log_p``.
    """
    n, m = C.shape
    for j in range(m):
        if j % ANCHOR_EVERY == 0:
            h = lo + (j0 + j) * step
            for i in range(n):
                ang = h * log_p[i]
                Ct[j, i] = math.cos(ang)
                St[j, i] = math.sin(ang)
        else:
            for i in range(n):
                c = Ct[j - 1, i]
                s = St[j - 1, i]
                Ct[j, i] = c * rc[i] - s * rs[i]
                St[j, i] = s * rc[i] + c * rs[i]
    for i in range(n):
        for j in range(m):
            C[i, j] = Ct[j, i]
            S[i, j] = St[j, i]


@njit(cache=True, nogil=True)
def direct_tables(log_p, grid, C, S):
    n, m = C.shape
    for i in range(n):
        for j in range(m):
            a = grid[j] * log_p[i]
            C[i, j] = math.cos(a)
            S[i, j] = math.sin(a)


@njit(cache=True, nogil=True)
def accumulate(A, B, i0, C, S, acc, err):
    """acc[t, j] += sum_i A[t,i0+i] C[i,j] + B[t,i0+i] S[i,j] with TwoSum error terms."""
    nt = A.shape[0]
    n, m = C.shape
    for t in range(nt):
        s = acc[t]
        e = err[t]
        for i in range(n):
            a = A[t, i0 + i]
            b = B[t, i0 + i]
            for j in range(m):
                x = a * C[i, j] + b * S[i, j]
                u = s[j] + x
                z = u - s[j]
                e[j] += (s[j] - (u - z)) + (x - z)
                s[j] = u


@njit(cache=True, nogil=True)
def _fused_rows(A, B, log_p, lo, step, j0, m, rc, rs):
    # same recurrence and summation order as uniform_tables + accumulate,
    # without materializing the tables; suited to very few rows
    nt = A.shape[0]
    n = log_p.size
    out = np.empty((nt, m))
    zc = np.empty(n)
    zs = np.empty(n)
    for j in range(m):
        if j % ANCHOR_EVERY == 0:
            h = lo + (j0 + j) * step
            for i in range(n):
                ang = h * log_p[i]
                zc[i] = math.cos(ang)
                zs[i] = math.sin(ang)
        else:
            for i in range(n):
                c = zc[i]
                s = zs[i]
                zc[i] = c * rc[i] - s * rs[i]
                zs[i] = s * rc[i] + c * rs[i]
        for t in range(nt):
            s = 0.0
            e = 0.0
            for i in range(n):
                x = A[t, i] * zc[i] + B[t, i] * zs[i]
                u = s + x
                z = u - s
                e += (s - (u - z)) + (x - z)
                s = u
            out[t, j] = s + e
    return out


@njit(cache=True, nogil=True)
def _block_values(A, B, log_p, lo, step, grid, j0, m, uniform):
    nt = A.shape[0]
    n = log_p.size
    if uniform and nt <= FUSED_MAX_ROWS:
        rc = np.empty(n)
        rs = np.empty(n)
        for i in range(n):
            rc[i] = math.cos(step * log_p[i])
            rs[i] = math.sin(step * log_p[i])
        return _fused_rows(A, B, log_p, lo, step, j0, m, rc, rs)
    acc = np.zeros((nt, m))
    err = np.zeros((nt, m))
    pb = min(PRIME_BLOCK, n)
    C = np.empty((pb, m))
    S = np.empty((pb, m))
    Ct = np.empty((m, pb))
    St = np.empty((m, pb))
    rc = np.empty(n)
    rs = np.empty(n)
    if uniform:
        for i in range(n):
            rc[i] = math.cos(step * log_p[i])
            rs[i] = math.sin(step * log_p[i])
    for i0 in range(0, n, PRIME_BLOCK):
        i1 = min(i0 + PRIME_BLOCK, n)
        w = i1 - i0
        if uniform:
            uniform_tables(log_p[i0:i1], lo, step, j0, C[:w], S[:w], Ct[:, :w], St[:, :w],
                           rc[i0:i1], rs[i0:i1])
        else:
            direct_tables(log_p[i0:i1], grid[j0:j0 + m], C[:w], S[:w])
        accumulate(A, B, i0, C[:w], S[:w], acc, err)
    return acc + err


@njit(cache=True, nogil=True)
def uniform_grid_max(A, B, log_p, lo, step, npts):
    """Per-row maximum and first argmax index over the uniform grid ``lo + j*step``."""
    nt = A.shape[0]
    best = np.full(nt, -np.inf)
    arg = np.zeros(nt, dtype=np.int64)
    dummy = np.empty(0)
    for j0 in range(0, npts, BLOCK):
        m = min(BLOCK, npts - j0)
        vals = _block_values(A, B, log_p, lo, step, dummy, j0, m, True)
        for t in range(nt):
            for j in range(m):
                if vals[t, j] > best[t]:
                    best[t] = vals[t, j]
                    arg[t] = j0 + j
    return best, arg


@njit(cache=True, nogil=True)
def uniform_grid_values(A, B, log_p, lo, step, npts):
    nt = A.shape[0]
    out = np.empty((nt, npts))
    dummy = np.empty(0)
    for j0 in range(0, npts, BLOCK):
        m = min(BLOCK, npts - j0)
        out[:, j0:j0 + m] = _block_values(A, B, log_p, lo, step, dummy, j0, m, True)
    return out


@njit(cache=True, nogil=True)
def grid_values(A, B, log_p, grid):
    nt = A.shape[0]
    npts = grid.size
    out = np.empty((nt, npts))
    for j0 in range(0, npts, BLOCK):
        m = min(BLOCK, npts - j0)
        out[:, j0:j0 + m] = _block_values(A, B, log_p, 0.0, 0.0, grid, j0, m, False)
    return out


@njit(cache=True, nogil=True)
def compensated_sum(x):
    s = 0.0
    e = 0.0
    for i in range(x.size):
        u = s + x[i]
        z = u - s
        e += (s - (u - z)) + (x[i] - z)
        s = u
    return s + e
