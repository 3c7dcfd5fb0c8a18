"""Fused evaluations of ``B = exp(logK + u_i + v_j + w)`` and Greenkhorn updates.

A single pass yields row sums, column sums and the total of ``exp(M - shift)``
without materializing ``B``. Entries more than ``UNDERFLOW`` below the shift
are skipped: they are below 1e-304 relative to the largest entry, and the
exponential's subnormal path is an order of magnitude slower.
"""

from __future__ import annotations

import math

import numpy as np

import numba

UNDERFLOW = 700.0
BLOCK_U, BLOCK_V, BLOCK_W = 0, 1, 2


def _max_exponent(logK, u, v, w):
    n, m = logK.shape
    top = -np.inf
    for i in range(n):
        ui = u[i]
        for j in range(m):
            top = max(top, logK[i, j] + ui + v[j])
    return top + w


def _scaled_sums(logK, u, v, w, shift):
    n, m = logK.shape
    row = np.zeros(n)
    col = np.zeros(m)
    off = w - shift
    total = 0.0
    for i in range(n):
        ui = u[i] + off
        acc = 0.0
        for j in range(m):
            x = logK[i, j] + ui + v[j]
            if x > -UNDERFLOW:
                e = math.exp(x)
                acc += e
                col[j] += e
        row[i] = acc
        total += acc
    return row, col, total


def _evaluate(logK, logK_max, u, v, w, r, c, s, limit):
    """Everything the solvers need at a dual point.

    Returns ``(ok, top, row, col, tot, log_tot, eu, ev, phi)``; ``ok`` is
    False (and ``top`` the offending exponent) on overflow.
    """
    n = u.shape[0]
    umax = u.max()
    vmax = v.max()
    empty = np.zeros(n)
    if umax > limit or vmax > limit:
        return False, max(umax, vmax), empty, empty, 0.0, 0.0, empty, empty, 0.0
    top = logK_max + umax + vmax + w
    if top > limit:
        top = _max_exponent(logK, u, v, w)
        if top > limit:
            return False, top, empty, empty, 0.0, 0.0, empty, empty, 0.0
    row, col, esum = _scaled_sums(logK, u, v, w, top)
    if esum < 1e-250:
        top = _max_exponent(logK, u, v, w)
        row, col, esum = _scaled_sums(logK, u, v, w, top)
    scale = math.exp(top)
    row *= scale
    col *= scale
    tot = esum * scale
    log_tot = top + math.log(esum)
    eu = np.exp(u)
    ev = np.exp(v)
    phi = tot + eu.sum() + ev.sum() - (u * r).sum() - (v * c).sum() - w * s
    return True, top, row, col, tot, log_tot, eu, ev, phi


def _rho_sum(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        acc += b[i] - a[i]
        if a[i] > 0.0:
            acc += a[i] * math.log(a[i] / b[i])
    return acc


def _choose_block(row, col, tot, log_tot, eu, ev, r, c, s, greedy, counter):
    if not greedy:
        return counter % 3
    gu = _rho_sum(r, row + eu)
    gv = _rho_sum(c, col + ev)
    # log_tot stays finite when tot underflows
    gw = tot - s + s * (math.log(s) - log_tot) if s > 0.0 else tot
    if gu >= gv and gu >= gw:
        return BLOCK_U
    if gv >= gw:
        return BLOCK_V
    return BLOCK_W


_jit = numba.njit(cache=True, nogil=True)
_max_exponent = _jit(_max_exponent)
_scaled_sums = _jit(_scaled_sums)
evaluate = _jit(_evaluate)
_rho_sum = _jit(_rho_sum)
choose_block = _jit(_choose_block)


def warm_up() -> None:
    """Trigger JIT compilation so that later timings exclude it."""
    z = np.zeros(2)
    one = np.ones(2)
    K = np.zeros((2, 2))
    evaluate(K, 0.0, z, z, 0.0, one, one, 1.0, 700.0)
    choose_block(one, one, 2.0, math.log(2.0), one, one, one, one, 1.0, True, 0)
