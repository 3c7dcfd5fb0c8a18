"""Rounding approximate plans onto exact transport polytopes."""

from __future__ import annotations

import numpy as np

from .core import PotInstance, TransportPlan
from .exceptions import UnbalancedMarginals


def _shrink_factors(sums, caps):
    # min(1, cap/sum); zero sums are left alone
    f = np.ones_like(sums)
    pos = sums > caps
    f[pos] = caps[pos] / sums[pos]
    return f


def round_balanced(X, r, c) -> np.ndarray:
    """Round ``X`` onto ``{P >= 0 : P1 = r, P^T1 = c}``.

    Rows are shrunk to fit ``r``, then columns to fit ``c``, and the leftover
    mass is added back as a rank-one matrix.
    """
    X = np.array(X, dtype=np.float64, copy=True)
    r = np.asarray(r, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if abs(r.sum() - c.sum()) > 1e-12 * max(1.0, r.sum()):
        raise UnbalancedMarginals(f"|r|_1={r.sum():.17g} != |c|_1={c.sum():.17g}")
    X *= _shrink_factors(X.sum(axis=1), r)[:, None]
    X *= _shrink_factors(X.sum(axis=0), c)[None, :]
    err_r = np.maximum(r - X.sum(axis=1), 0.0)
    err_c = np.maximum(c - X.sum(axis=0), 0.0)
    total = err_r.sum()
    if total > 0:
        X += np.outer(err_r, err_c) / total
    return X


def round_pot(X, instance: PotInstance) -> TransportPlan:
    """Round a nonnegative ``n x n`` matrix into ``U(r, c, s)``.

    Scale the total mass down to ``s``, clip rows to ``r`` and columns to
    ``c``, then spread the missing mass as a product of the remaining row and
    column capacities.
    """
    r, c, s = instance.r, instance.c, instance.s
    X = np.maximum(np.array(X, dtype=np.float64, copy=True), 0.0)
    total = X.sum()
    if total > s:
        X *= s / total
    X *= _shrink_factors(X.sum(axis=1), r)[:, None]
    X *= _shrink_factors(X.sum(axis=0), c)[None, :]
    deficit = s - X.sum()
    if deficit > 0:
        a = np.maximum(r - X.sum(axis=1), 0.0)
        b = np.maximum(c - X.sum(axis=0), 0.0)
        sa, sb = a.sum(), b.sum()
        if sa > 0 and sb > 0:
            X += deficit * np.outer(a / sa, b / sb)
    return TransportPlan.from_matrix(X, instance)
