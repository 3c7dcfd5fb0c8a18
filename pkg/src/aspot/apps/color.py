"""Color transfer between images through partial transport of color histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image
from sklearn.cluster import kmeans_plusplus

from ..core import PotInstance, SolverConfig
from ..exceptions import EmptyInput
from ..solvers import solve

KMEANS_TOL = 1e-6
KMEANS_ROUNDS = 100
_CHUNK = 8192


@dataclass(frozen=True, eq=False)
class ColorHistogram:
    centroids: np.ndarray  # k x 3, RGB in [0, 1]
    weights: np.ndarray
    pixel_assignments: np.ndarray

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def scaled(self, factor: float) -> "ColorHistogram":
        return ColorHistogram(self.centroids, self.weights * factor, self.pixel_assignments)


def nearest_centroid(points, centroids):
    """Index of the closest centroid for every point, computed in chunks."""
    labels = np.empty(points.shape[0], dtype=np.intp)
    cc = (centroids ** 2).sum(axis=1)
    for lo in range(0, points.shape[0], _CHUNK):
        block = points[lo:lo + _CHUNK]
        d = cc[None, :] - 2.0 * block @ centroids.T
        labels[lo:lo + _CHUNK] = d.argmin(axis=1)
    return labels


def kmeans_quantize(points, k: int, seed: int = 0) -> ColorHistogram:
    """Lloyd's k-means from a seeded k-means++ start.

    Stops when no centroid moves more than 1e-6 or after 100 rounds. An empty
    cluster is re-seeded at the point farthest from its centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise EmptyInput("need a non-empty N x d array of points")
    N = points.shape[0]
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in [1, {N}], got {k}")
    centroids, _ = kmeans_plusplus(points, n_clusters=k, random_state=seed)
    labels = nearest_centroid(points, centroids)
    for _ in range(KMEANS_ROUNDS):
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, points)
        counts = np.bincount(labels, minlength=k)
        new = centroids.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        for j in np.flatnonzero(~filled):
            far = int(((points - new[labels]) ** 2).sum(axis=1).argmax())
            new[j] = points[far]
            labels[far] = j
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        labels = nearest_centroid(points, centroids)
        if shift < KMEANS_TOL:
            break
    weights = np.bincount(labels, minlength=k) / N
    return ColorHistogram(centroids=centroids, weights=weights, pixel_assignments=labels)


def normalize_pair(a: ColorHistogram, b: ColorHistogram):
    """Divide both histograms by the larger of their masses."""
    top = max(a.weights.sum(), b.weights.sum())
    return a.scaled(1.0 / top), b.scaled(1.0 / top)


def color_cost(source_colors, target_colors):
    """Squared distances between colors, divided by their maximum."""
    d = ((source_colors[:, None, :] - target_colors[None, :, :]) ** 2).sum(axis=-1)
    top = d.max()
    return d / top if top > 0 else d


def color_instance(source: ColorHistogram, target: ColorHistogram, s_frac: float) -> PotInstance:
    if source.k != target.k:
        raise ValueError("source and target histograms need the same number of colors")
    a, b = normalize_pair(source, target)
    s = s_frac * min(a.weights.sum(), b.weights.sum())
    return PotInstance(a.weights, b.weights, color_cost(a.centroids, b.centroids), s)


def barycentric_projection(X, target_colors, source_colors):
    """Plan-weighted mean of target colors per source color.

    Rows that carry no mass keep their source color.
    """
    X = np.asarray(X, dtype=np.float64)
    mass = X.sum(axis=1)
    out = np.array(source_colors, dtype=np.float64, copy=True)
    rows = mass > 0
    out[rows] = (X[rows] @ target_colors) / mass[rows, None]
    return out


def color_transfer(source_hist: ColorHistogram, target_hist: ColorHistogram,
                   s_frac: float = 0.2, solver: str = "aspot", config: SolverConfig = None):
    """Solve POT between two color histograms and recolor the source centroids.

    Returns ``(recolored_centroids, TransportPlan, ConvergenceTrace)``.
    """
    instance = color_instance(source_hist, target_hist, s_frac)
    plan, trace = solve(instance, solver, config)
    recolored = barycentric_projection(plan.X, target_hist.centroids, source_hist.centroids)
    return recolored, plan, trace


def image_pixels(image) -> np.ndarray:
    """``H x W x 3`` uint8 array to ``N x 3`` floats in [0, 1]."""
    arr = np.asarray(image)
    return arr.reshape(-1, 3).astype(np.float64) / 255.0


def recolor_image(shape, hist: ColorHistogram, recolored) -> np.ndarray:
    pixels = np.clip(recolored[hist.pixel_assignments], 0.0, 1.0)
    return np.rint(pixels * 255.0).astype(np.uint8).reshape(shape)


def read_ppm(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def write_ppm(path, image) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path, format="PPM")
