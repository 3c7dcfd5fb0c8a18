import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from aspot.apps import (RegistrationConfig, RigidTransform, fit_rigid, overlapping_clouds,
                        read_xyz, register_point_clouds, registration_instance,
                        rotation_angle_deg, write_xyz)
from aspot.exceptions import DegenerateSvd, NoConvergence, ZeroMassPlan


def cloud(seed, n=30):
    return np.random.default_rng(seed).normal(size=(n, 3)) * [1.0, 0.6, 0.3]


def test_fit_identity():
    X = cloud(0)
    T = fit_rigid(np.eye(len(X)) / len(X), X, X)
    np.testing.assert_allclose(T.R, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(T.t, 0.0, atol=1e-12)


def test_fit_recovers_known_transform():
    X = cloud(1)
    R0 = Rotation.from_euler("xyz", [20, -35, 50], degrees=True).as_matrix()
    t0 = np.array([0.5, -1.0, 2.0])
    Y = X @ R0.T + t0
    # fit maps Y back onto X, i.e. the inverse of (R0, t0)
    T = fit_rigid(np.eye(len(X)), X, Y)
    np.testing.assert_allclose(T.R, R0.T, atol=1e-8)
    np.testing.assert_allclose(T.t, -R0.T @ t0, atol=1e-8)
    np.testing.assert_allclose(T.apply(Y), X, atol=1e-8)


def test_fit_reflection_yields_proper_rotation():
    X = cloud(2)
    Y = X * [1.0, 1.0, -1.0]
    T = fit_rigid(np.eye(len(X)), X, Y)
    assert np.linalg.det(T.R) == pytest.approx(1.0, abs=1e-9)
    assert T.is_proper()


def test_fit_errors():
    X = cloud(3)
    with pytest.raises(ZeroMassPlan):
        fit_rigid(np.zeros((len(X), len(X))), X, X)
    line = np.outer(np.arange(5.0), [1.0, 0.0, 0.0])
    with pytest.raises(DegenerateSvd):
        fit_rigid(np.eye(5), line, line)


@given(st.integers(0, 2**32 - 1))
def test_fit_always_proper(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(3, 9, size=2)
    pi = rng.random((m, n))
    try:
        T = fit_rigid(pi, rng.normal(size=(m, 3)), rng.normal(size=(n, 3)))
    except DegenerateSvd:
        return
    assert T.is_proper()


def test_transform_composition():
    a = RigidTransform(Rotation.from_euler("z", 30, degrees=True).as_matrix(), np.array([1.0, 0, 0]))
    b = RigidTransform(Rotation.from_euler("x", 45, degrees=True).as_matrix(), np.array([0, 2.0, 0]))
    Y = cloud(4, 5)
    np.testing.assert_allclose(a.then(b).apply(Y), b.apply(a.apply(Y)))
    assert rotation_angle_deg(a.R) == pytest.approx(30.0)


def test_registration_instance_padding():
    P, Q = cloud(5, 4), cloud(6, 6)
    inst = registration_instance(P, Q, 0.5)
    assert inst.n == 6
    np.testing.assert_allclose(inst.r, [1 / 6] * 4 + [0, 0])
    np.testing.assert_allclose(inst.c, [1 / 6] * 6)
    assert inst.s == pytest.approx(0.5 * 4 / 6)
    assert inst.C.max() == 1.0 and (inst.C[4:] == 1.0).all()


def test_config_validation():
    for kwargs in ({"alpha": 0.0}, {"alpha": 1.5}, {"gamma0": 0.0}, {"anneal_rate": 1.0},
                   {"transform_threshold": 0.0}, {"max_registrations": 0}):
        with pytest.raises(ValueError):
            RegistrationConfig(**kwargs)


def test_aligned_clouds_take_one_registration():
    P = cloud(7, 40)
    result = register_point_clouds(P, P.copy())
    assert result.registrations == 1 and result.converged
    assert result.steps[0].increment < 1e-5


def test_identical_clouds_full_mass_is_fixed_point():
    P = cloud(8, 40)
    result = register_point_clouds(P, P.copy(), RegistrationConfig(alpha=1.0))
    assert result.converged
    T = result.transform
    assert np.linalg.norm(T.R - np.eye(3)) + np.linalg.norm(T.t) < 1e-5


def test_budget_exhaustion_warns():
    P, Q, _, _ = overlapping_clouds(n=40, seed=1)
    with pytest.warns(NoConvergence):
        result = register_point_clouds(P, Q, RegistrationConfig(max_registrations=2))
    assert result.registrations == 2 and not result.converged
    assert result.steps[1].accumulated_iterations == sum(s.iterations for s in result.steps)
    assert result.steps[1].gamma == pytest.approx(result.steps[0].gamma * 0.83)


def test_recovers_rotation_on_small_clouds():
    P, Q, R0, t0 = overlapping_clouds(n=60, angle_deg=20, seed=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergence)
        result = register_point_clouds(P, Q, RegistrationConfig(gamma0=0.05))
    assert rotation_angle_deg(result.transform.R @ R0) <= 5.0


def test_rejects_bad_clouds():
    with pytest.raises(ValueError):
        register_point_clouds(np.zeros((5, 2)), np.zeros((5, 2)))
    with pytest.raises(ValueError):
        register_point_clouds(np.zeros((2, 3)), np.zeros((5, 3)))


def test_xyz_round_trip(tmp_path):
    P = cloud(9, 6)
    write_xyz(tmp_path / "p.xyz", P)
    np.testing.assert_allclose(read_xyz(tmp_path / "p.xyz"), P, rtol=1e-9)
    (tmp_path / "bad.xyz").write_text("1 2\n3 4\n")
    with pytest.raises(ValueError):
        read_xyz(tmp_path / "bad.xyz")


def test_result_csv():
    P = cloud(10, 20)
    text = register_point_clouds(P, P.copy()).to_csv()
    assert text.splitlines()[0] == "registration,iterations,accumulated_iterations,cost,increment,gamma"
    assert len(text.splitlines()) == 2
