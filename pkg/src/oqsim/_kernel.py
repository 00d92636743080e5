"""Compiled inner loops of the hierarchy propagator.

The right-hand side of the hierarchy splits into a block-diagonal local
part, handled by dense matmuls outside this module, and a sparse
neighbor-coupling part handled here.  Edges are stored as flat arrays
(dst, src, a, b) sorted by destination; the kernel accumulates

    dy[dst] += a * xu[src] + b * xw[src]

on top of the per-row decay term.  The same code compiles for the real
Hermitian-vector representation and for the complex fallback; numba
specializes on dtype.
"""

import numba
import numpy as np


@numba.njit(cache=True, fastmath=True)
def edge_apply(dy, y, xu, xw, decay, dst, src, a, b):
    n, nn = y.shape
    for i in range(n):
        d = decay[i]
        for j in range(nn):
            dy[i, j] -= d * y[i, j]
    for e in range(dst.shape[0]):
        i = dst[e]
        s = src[e]
        ae = a[e]
        be = b[e]
        if be == 0.0:
            for j in range(nn):
                dy[i, j] += ae * xu[s, j]
        else:
            for j in range(nn):
                dy[i, j] += ae * xu[s, j] + be * xw[s, j]


@numba.njit(cache=True, fastmath=True)
def lincomb(out, y, a, k):
    """out = y + a * k, single pass."""
    n, nn = y.shape
    for i in range(n):
        for j in range(nn):
            out[i, j] = y[i, j] + a * k[i, j]


@numba.njit(cache=True, fastmath=True)
def accum(acc, a, k):
    """acc += a * k, single pass."""
    n, nn = acc.shape
    for i in range(n):
        for j in range(nn):
            acc[i, j] += a * k[i, j]
