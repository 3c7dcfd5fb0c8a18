"""Dummy-node reduction of POT to a balanced OT problem on n + 1 points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PotInstance
from .exceptions import DimensionMismatch, PenaltyTooSmall


@dataclass(frozen=True, eq=False)
class ExtendedOtInstance:
    C_ext: np.ndarray
    r_ext: np.ndarray
    c_ext: np.ndarray
    penalty_A: float

    @property
    def size(self) -> int:
        return self.r_ext.shape[0]


def default_penalty(instance: PotInstance, epsilon: float) -> float:
    return 8.0 * instance.cost_max / epsilon


def extend(instance: PotInstance, penalty_A: float) -> ExtendedOtInstance:
    """Append a dummy row and column.

    The dummy source absorbs ``|c|_1 - s`` of target mass and the dummy target
    absorbs ``|r|_1 - s``; the dummy-to-dummy corner costs ``penalty_A``.
    """
    if not penalty_A > instance.cost_max:
        raise PenaltyTooSmall(
            f"penalty {penalty_A:g} must exceed max cost {instance.cost_max:g}")
    n = instance.n
    C_ext = np.zeros((n + 1, n + 1))
    C_ext[:n, :n] = instance.C
    C_ext[n, n] = penalty_A
    # clip float noise when s sits exactly on the smaller mass
    r_ext = np.append(instance.r, max(instance.mass_c - instance.s, 0.0))
    c_ext = np.append(instance.c, max(instance.mass_r - instance.s, 0.0))
    for arr in (C_ext, r_ext, c_ext):
        arr.setflags(write=False)
    return ExtendedOtInstance(C_ext=C_ext, r_ext=r_ext, c_ext=c_ext, penalty_A=float(penalty_A))


@dataclass(frozen=True)
class ExtractedBlock:
    X: np.ndarray
    dummy_col: np.ndarray  # flows from real sources into the dummy target
    dummy_row: np.ndarray  # flows from the dummy source into real targets
    corner: float


def extract_block(X_ext) -> ExtractedBlock:
    X_ext = np.asarray(X_ext, dtype=np.float64)
    if X_ext.ndim != 2 or X_ext.shape[0] != X_ext.shape[1] or X_ext.shape[0] < 2:
        raise DimensionMismatch(f"extended plan must be square with side >= 2, got {X_ext.shape}")
    n = X_ext.shape[0] - 1
    return ExtractedBlock(X=X_ext[:n, :n].copy(), dummy_col=X_ext[:n, n].copy(),
                          dummy_row=X_ext[n, :n].copy(), corner=float(X_ext[n, n]))
