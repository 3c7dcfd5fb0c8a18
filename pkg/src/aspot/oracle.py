"""Exact POT solutions on small instances via a dense two-phase simplex."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PotInstance, validate
from .exceptions import Infeasible, SizeLimitExceeded

PIVOT_TOL = 1e-10
MAX_ORACLE_N = 15


@dataclass(frozen=True, eq=False)
class LpForm:
    A_mat: np.ndarray
    b_vec: np.ndarray
    d_vec: np.ndarray


def lp_form(instance: PotInstance) -> LpForm:
    """Standard-form LP ``min <d, x> s.t. A x = b, x >= 0`` with ``x = (vec(X); p; q)``.

    ``vec`` stacks columns, so plan variable ``k = j * n + i`` is ``X[i, j]``.
    """
    n = instance.n
    nv = n * n
    A = np.zeros((2 * n + 1, nv + 2 * n))
    for j in range(n):
        for i in range(n):
            k = j * n + i
            A[i, k] = 1.0
            A[n + j, k] = 1.0
            A[2 * n, k] = 1.0
    A[np.arange(2 * n), nv + np.arange(2 * n)] = 1.0
    b = np.concatenate([instance.r, instance.c, [instance.s]])
    d = np.concatenate([instance.C.flatten(order="F"), np.zeros(2 * n)])
    return LpForm(A_mat=A, b_vec=b, d_vec=d)


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


def _run_simplex(T, basis, allowed):
    """Bland's-rule simplex on tableau ``T`` whose last row is the reduced cost row."""
    m = T.shape[0] - 1
    while True:
        costs = T[-1, :-1]
        entering = next((j for j in allowed if costs[j] < -PIVOT_TOL), None)
        if entering is None:
            return
        colv = T[:m, entering]
        rows = np.flatnonzero(colv > PIVOT_TOL)
        if rows.size == 0:
            raise Infeasible("LP is unbounded")
        ratios = T[rows, -1] / colv[rows]
        ties = rows[ratios <= ratios.min() + PIVOT_TOL]
        leave = min(ties, key=lambda i: basis[i])
        _pivot(T, leave, entering)
        basis[leave] = entering


def simplex(A, b, d):
    """Solve ``min d.x, A x = b, x >= 0`` exactly (up to pivot tolerance).

    Returns ``(value, x)``. Phase one minimizes the sum of artificials.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    m, nvar = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A, b = A * sign[:, None], b * sign

    T = np.zeros((m + 1, nvar + m + 1))
    T[:m, :nvar] = A
    T[:m, nvar:nvar + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :nvar] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(nvar, nvar + m))
    _run_simplex(T, basis, range(nvar + m))
    if -T[-1, -1] > 1e-9 * max(1.0, np.abs(b).sum()):
        raise Infeasible(f"phase one ended with infeasibility {-T[-1, -1]:.3g}")

    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= nvar:
            col = next((j for j in range(nvar) if abs(T[i, j]) > PIVOT_TOL), None)
            if col is not None:
                _pivot(T, i, col)
                basis[i] = col
    keep = [i for i in range(m) if basis[i] < nvar]
    T = np.vstack([T[keep][:, list(range(nvar)) + [nvar + m]], np.zeros(nvar + 1)])
    basis = [basis[i] for i in keep]

    T[-1, :nvar] = d
    for i, bj in enumerate(basis):
        T[-1] -= d[bj] * T[i]
    _run_simplex(T, basis, range(nvar))

    x = np.zeros(nvar)
    for i, bj in enumerate(basis):
        x[bj] = T[i, -1]
    x = np.maximum(x, 0.0)
    return float(d @ x), x


def solve_exact(instance: PotInstance):
    """Optimal value and an optimal vertex plan of the POT linear program."""
    validate(instance)
    n = instance.n
    if n > MAX_ORACLE_N:
        raise SizeLimitExceeded(f"oracle handles n <= {MAX_ORACLE_N}, got {n}")
    lp = lp_form(instance)
    value, x = simplex(lp.A_mat, lp.b_vec, lp.d_vec)
    X = x[: n * n].reshape((n, n), order="F")
    return value, X
