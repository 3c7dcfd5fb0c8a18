"""Seeded generators for benchmark instances, test images and point clouds."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.spatial.transform import Rotation

from ..core import PotInstance


def scaling_instance(n: int, seed: int = 0, mass_x: float = 5.0, mass_y: float = 3.0,
                     s_frac: float = 0.2) -> PotInstance:
    """Random marginals of masses 5 and 3 on the line, squared-distance cost.

    The marginal entries double as the support points; the cost is scaled to
    a maximum of 1 and the budget is ``s_frac`` of the smaller mass.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    x *= mass_x / x.sum()
    y = rng.random(n)
    y *= mass_y / y.sum()
    C = (x[:, None] - y[None, :]) ** 2
    C /= C.max()
    return PotInstance(x, y, C, s_frac * min(mass_x, mass_y))


def random_instance(n: int, seed: int = 0, s_frac=None) -> PotInstance:
    """Small random POT instance with ``max C = 1`` and masses in [0.5, 1.5]."""
    rng = np.random.default_rng(seed)
    r = rng.random(n) + 0.05
    c = rng.random(n) + 0.05
    r *= rng.uniform(0.5, 1.5) / r.sum()
    c *= rng.uniform(0.5, 1.5) / c.sum()
    C = rng.random((n, n))
    C /= C.max()
    frac = rng.uniform(0.2, 0.9) if s_frac is None else s_frac
    return PotInstance(r, c, C, frac * min(r.sum(), c.sum()))


def smooth_image(seed: int, low: float = 0.0, high: float = 1.0,
                 shape=(48, 48), smoothness: float = 6.0) -> np.ndarray:
    """``H x W x 3`` uint8 image of smooth random color fields in ``[low, high]``."""
    rng = np.random.default_rng(seed)
    h, w = shape
    field = gaussian_filter(rng.normal(size=(h, w, 3)), sigma=(smoothness, smoothness, 0))
    field = (field - field.min()) / (field.max() - field.min())
    return np.rint((low + (high - low) * field) * 255).astype(np.uint8)


def overlapping_clouds(n: int = 200, overlap: float = 0.5, angle_deg: float = 30.0,
                       translation=(0.3, -0.2, 0.1), seed: int = 0):
    """A target cloud ``P`` and a moved cloud ``Q`` sharing ``overlap * n`` points.

    ``Q`` is the shared subset plus fresh points, rotated about z by
    ``angle_deg`` and shifted by ``translation``. Returns ``(P, Q, R0, t0)``
    with ``Q = Q0 R0^T + t0``.
    """
    rng = np.random.default_rng(seed)
    scale = np.array([1.0, 0.6, 0.3])
    P = rng.normal(size=(n, 3)) * scale
    shared = int(round(overlap * n))
    keep = rng.permutation(n)[:shared]
    fresh = rng.normal(size=(n - shared, 3)) * scale
    Q0 = np.vstack([P[keep], fresh])
    R0 = Rotation.from_euler("z", angle_deg, degrees=True).as_matrix()
    t0 = np.asarray(translation, dtype=np.float64)
    return P, Q0 @ R0.T + t0, R0, t0
