"""Entropic POT dual: objective, gradient, the primal map B(z) and the error E.

The kernel ``K = exp(-C / gamma)`` is kept in log form. Entries of ``-C/gamma``
reach ``-1e4`` and below at small gamma, so the exponential is taken only
after the potentials have been added.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DualPoint, PotInstance
from .exceptions import DimensionMismatch, DualOverflowError, NonPositiveArgument

# largest exponent allowed before B(z) or e^u is declared an overflow
EXP_LIMIT = 700.0


@dataclass(frozen=True, eq=False)
class EntropicContext:
    """An instance together with a regularization strength.

    ``r``, ``c`` default to the instance marginals; ASPOT passes the mixed
    marginals instead.
    """

    instance: PotInstance
    gamma: float
    r: np.ndarray = None
    c: np.ndarray = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        r = self.instance.r if self.r is None else np.array(self.r, dtype=np.float64)
        c = self.instance.c if self.c is None else np.array(self.c, dtype=np.float64)
        if r.shape != (self.n,) or c.shape != (self.n,):
            raise DimensionMismatch("context marginals must match the instance size")
        logK = -self.instance.C / self.gamma
        for arr in (r, c, logK):
            arr.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "logK", logK)
        object.__setattr__(self, "logK_max", float(logK.max()))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def s(self) -> float:
        return self.instance.s

    def with_marginals(self, r, c) -> "EntropicContext":
        return EntropicContext(self.instance, self.gamma, r, c)


def _check(ctx: EntropicContext, z: DualPoint) -> None:
    if z.n != ctx.n:
        raise DimensionMismatch(f"dual point has n={z.n}, context has n={ctx.n}")


def _exp_checked(x: np.ndarray) -> np.ndarray:
    top = np.max(x, initial=-np.inf)
    if top > EXP_LIMIT:
        raise DualOverflowError(top, EXP_LIMIT)
    return np.exp(x)


def _b(logK, u, v, w):
    return _exp_checked(logK + u[:, None] + (v + w)[None, :])


def b_matrix(ctx: EntropicContext, z: DualPoint) -> np.ndarray:
    """``B_ij = exp(-C_ij/gamma + u_i + v_j + w)``."""
    _check(ctx, z)
    return _b(ctx.logK, z.u, z.v, z.w)


def _objective(ctx, u, v, w, B, eu, ev):
    return (B.sum() + eu.sum() + ev.sum()
            - u @ ctx.r - v @ ctx.c - w * ctx.s)


def dual_objective(ctx: EntropicContext, z: DualPoint) -> float:
    """phi(z) = |B(z)|_1 + sum e^u + sum e^v - <u, r> - <v, c> - w s."""
    _check(ctx, z)
    B = _b(ctx.logK, z.u, z.v, z.w)
    eu, ev = _exp_checked(z.u), _exp_checked(z.v)
    return float(_objective(ctx, z.u, z.v, z.w, B, eu, ev))


def _gradient(ctx, B, eu, ev):
    gu = B.sum(axis=1) + eu - ctx.r
    gv = B.sum(axis=0) + ev - ctx.c
    gw = B.sum() - ctx.s
    return gu, gv, gw


def dual_gradient(ctx: EntropicContext, z: DualPoint) -> DualPoint:
    """Gradient of :func:`dual_objective`, returned in the shape of a dual point."""
    _check(ctx, z)
    B = _b(ctx.logK, z.u, z.v, z.w)
    gu, gv, gw = _gradient(ctx, B, _exp_checked(z.u), _exp_checked(z.v))
    return DualPoint(gu, gv, gw)


def _error_from_gradient(gu, gv, gw) -> float:
    return float(abs(gw) + np.abs(gu).sum() + np.abs(gv).sum())


def feasibility_error(ctx: EntropicContext, z: DualPoint) -> float:
    """Mass gap plus l1 marginal residuals, with slacks ``e^u`` and ``e^v``.

    This is exactly ``|grad_w| + |grad_u|_1 + |grad_v|_1``.
    """
    g = dual_gradient(ctx, z)
    return _error_from_gradient(g.u, g.v, g.w)


def rho(a, b):
    """Divergence ``b - a + a log(a/b)``; works elementwise on arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.any(a <= 0) or np.any(b <= 0):
        raise NonPositiveArgument("rho needs strictly positive arguments")
    out = b - a + a * np.log(a / b)
    return float(out) if out.ndim == 0 else out
