"""scikit-learn style wrappers around the solvers and pipelines."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import PotInstance, SolverConfig, validate
from .solvers import SOLVERS, solve
from .apps.color import (ColorHistogram, color_transfer, image_pixels, kmeans_quantize,
                         nearest_centroid, recolor_image)
from .apps.registration import RegistrationConfig, register_point_clouds


def _check_solver(name):
    if name not in SOLVERS:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}")


def _check_image(image):
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 image, got shape {arr.shape}")
    return arr


class PartialTransport(BaseEstimator):
    """Solve one POT instance; the fitted plan lives in ``plan_``.

    >>> est = PartialTransport(epsilon=0.1).fit(C, r, c, s)   # doctest: +SKIP
    >>> est.cost_, est.plan_.shape                            # doctest: +SKIP
    """

    def __init__(self, solver="aspot", epsilon=0.1, gamma=None, tol=None, p=1.0,
                 max_iter=10_000, block_rule="greedy"):
        self.solver = solver
        self.epsilon = epsilon
        self.gamma = gamma
        self.tol = tol
        self.p = p
        self.max_iter = max_iter
        self.block_rule = block_rule

    def _config(self):
        return SolverConfig(epsilon=self.epsilon, gamma_override=self.gamma, tol=self.tol,
                            max_iterations=self.max_iter, block_rule=self.block_rule,
                            tuning_exponent_p=self.p)

    def fit(self, C, r, c, s):
        _check_solver(self.solver)
        C = check_array(C, dtype=np.float64)
        r = check_array(r, dtype=np.float64, ensure_2d=False)
        c = check_array(c, dtype=np.float64, ensure_2d=False)
        return self.fit_instance(PotInstance(r, c, C, s))

    def fit_instance(self, instance: PotInstance):
        _check_solver(self.solver)
        validate(instance)
        plan, trace = solve(instance, self.solver, self._config())
        self.instance_ = instance
        self.plan_ = np.asarray(plan.X)
        self.cost_ = plan.cost(instance)
        self.trace_ = trace
        self.n_iter_ = trace.iterations
        return self


class RigidRegistration(TransformerMixin, BaseEstimator):
    """Learn the rigid map taking a source cloud onto a target cloud.

    ``fit(source, target)`` runs the registration loop; ``transform`` applies
    the fitted map to any ``N x 3`` array.
    """

    def __init__(self, alpha=0.4, gamma0=4.4e-3, anneal_rate=0.83, transform_threshold=1e-5,
                 max_registrations=60, solver="aspot"):
        self.alpha = alpha
        self.gamma0 = gamma0
        self.anneal_rate = anneal_rate
        self.transform_threshold = transform_threshold
        self.max_registrations = max_registrations
        self.solver = solver

    def fit(self, X, y):
        _check_solver(self.solver)
        Q = check_array(X, dtype=np.float64)
        P = check_array(y, dtype=np.float64)
        config = RegistrationConfig(alpha=self.alpha, gamma0=self.gamma0,
                                    anneal_rate=self.anneal_rate,
                                    transform_threshold=self.transform_threshold,
                                    max_registrations=self.max_registrations)
        result = register_point_clouds(P, Q, config, self.solver)
        self.result_ = result
        self.rotation_ = result.transform.R
        self.translation_ = result.transform.t
        self.n_registrations_ = result.registrations
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        return self.result_.transform.apply(check_array(X, dtype=np.float64))


class ColorTransfer(TransformerMixin, BaseEstimator):
    """Carry a target image's palette onto source images.

    ``fit(source_image, target_image)`` quantizes both images and solves the
    POT problem between their palettes. ``transform`` recolors any image by
    snapping its pixels to the nearest source color first.
    """

    def __init__(self, n_colors=64, s_frac=0.2, solver="aspot", epsilon=0.1, gamma=None,
                 tol=None, max_iter=10_000, seed=0):
        self.n_colors = n_colors
        self.s_frac = s_frac
        self.solver = solver
        self.epsilon = epsilon
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, X, y):
        _check_solver(self.solver)
        src = _check_image(X)
        tgt = _check_image(y)
        self.source_hist_ = kmeans_quantize(image_pixels(src), self.n_colors, self.seed)
        self.target_hist_ = kmeans_quantize(image_pixels(tgt), self.n_colors, self.seed)
        config = SolverConfig(epsilon=self.epsilon, gamma_override=self.gamma, tol=self.tol,
                              max_iterations=self.max_iter)
        recolored, plan, trace = color_transfer(self.source_hist_, self.target_hist_,
                                                self.s_frac, self.solver, config)
        self.recolored_centroids_ = recolored
        self.plan_ = np.asarray(plan.X)
        self.trace_ = trace
        return self

    def transform(self, X):
        check_is_fitted(self, "recolored_centroids_")
        img = _check_image(X)
        centroids = self.source_hist_.centroids
        labels = nearest_centroid(image_pixels(img), centroids)
        hist = ColorHistogram(centroids, self.source_hist_.weights, labels)
        return recolor_image(img.shape, hist, self.recolored_centroids_)
