import warnings

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from aspot import solve_exact
from aspot.apps import overlapping_clouds, rotation_angle_deg, smooth_image
from aspot.exceptions import NoConvergence
from aspot.estimators import ColorTransfer, PartialTransport, RigidRegistration

from conftest import make_instance


def test_partial_transport_fit():
    inst = make_instance(np.random.default_rng(3), 5)
    est = PartialTransport(epsilon=0.1).fit(inst.C, inst.r, inst.c, inst.s)
    opt, _ = solve_exact(inst)
    assert est.plan_.shape == (5, 5)
    assert opt - 1e-9 <= est.cost_ <= opt + 0.1
    assert est.n_iter_ == est.trace_.iterations


def test_partial_transport_params():
    est = PartialTransport(solver="sinkhorn", epsilon=0.2)
    assert est.get_params()["solver"] == "sinkhorn"
    assert clone(est).set_params(epsilon=0.3).epsilon == 0.3
    with pytest.raises(ValueError):
        PartialTransport(solver="nope").fit(np.ones((2, 2)), [0.5, 0.5], [0.5, 0.5], 0.5)


def test_rigid_registration_transform():
    P, Q, R0, _ = overlapping_clouds(n=60, angle_deg=20, seed=2)
    with pytest.raises(NotFittedError):
        RigidRegistration().transform(Q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergence)
        est = RigidRegistration(gamma0=0.05).fit(Q, P)
    assert rotation_angle_deg(est.rotation_ @ R0) <= 5.0
    np.testing.assert_allclose(est.transform(Q), Q @ est.rotation_.T + est.translation_)


def test_color_transfer_estimator():
    src = smooth_image(0, shape=(16, 16))
    tgt = smooth_image(1, 0.4, 1.0, shape=(16, 16))
    est = ColorTransfer(n_colors=8, s_frac=0.5).fit(src, tgt)
    out = est.transform(src)
    assert out.shape == src.shape and out.dtype == np.uint8
    assert est.recolored_centroids_.shape == (8, 3)
    with pytest.raises(ValueError):
        est.transform(np.zeros((4, 4)))

