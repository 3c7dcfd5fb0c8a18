"""Rigid 3-D point-cloud registration driven by partial transport plans."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import PotInstance, SolverConfig
from ..exceptions import DegenerateSvd, MaxIterationsExceeded, NoConvergence, ZeroMassPlan
from ..solvers import solve

ORTHO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """``y -> R y + t``."""

    R: np.ndarray
    t: np.ndarray

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, Y) -> np.ndarray:
        return np.asarray(Y) @ self.R.T + self.t

    def then(self, other: "RigidTransform") -> "RigidTransform":
        """Apply ``self`` first, then ``other``."""
        return RigidTransform(other.R @ self.R, other.R @ self.t + other.t)

    def is_proper(self, tol: float = ORTHO_TOL) -> bool:
        return (np.abs(self.R.T @ self.R - np.eye(3)).max() <= tol
                and abs(np.linalg.det(self.R) - 1.0) <= tol)


def rotation_angle_deg(R) -> float:
    """Angle of a rotation matrix, in degrees."""
    cos = (np.trace(R) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def fit_rigid(pi, X_pts, Y_pts) -> RigidTransform:
    """Weighted Procrustes: the rigid map sending ``Y_pts`` onto ``X_pts`` under plan ``pi``.

    ``pi[i, j]`` weights the pair ``(X_pts[i], Y_pts[j])``.
    """
    pi = np.asarray(pi, dtype=np.float64)
    X_pts = np.asarray(X_pts, dtype=np.float64)
    Y_pts = np.asarray(Y_pts, dtype=np.float64)
    total = pi.sum()
    if not total > 0:
        raise ZeroMassPlan("plan carries no mass")
    ux = pi.sum(axis=1) @ X_pts / total
    uy = pi.sum(axis=0) @ Y_pts / total
    Xc = X_pts - ux
    Yc = Y_pts - uy
    H = Xc.T @ pi @ Yc
    U, S, Vt = np.linalg.svd(H)
    if S[1] <= 1e-12 * max(S[0], 1e-300):
        raise DegenerateSvd(f"cross-covariance has rank < 2 (singular values {S})")
    # H = U S V^T maps Y-frame to X-frame; the rotation taking Y onto X is U D V^T
    D = np.diag([1.0, 1.0, np.linalg.det(U @ Vt)])
    R = U @ D @ Vt
    return RigidTransform(R, ux - R @ uy)


@dataclass(frozen=True)
class RegistrationConfig:
    alpha: float = 0.4
    gamma0: float = 4.4e-3
    anneal_rate: float = 0.83
    transform_threshold: float = 1e-5
    max_registrations: int = 60
    epsilon: float = 0.1
    # stopping tolerance of each inner POT solve
    tol: float = 1e-6
    max_iterations: int = 300

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if not 0 < self.anneal_rate < 1:
            raise ValueError("anneal_rate must lie in (0, 1)")
        if not self.transform_threshold > 0:
            raise ValueError("transform_threshold must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_registrations < 1:
            raise ValueError("max_registrations must be >= 1")


@dataclass(frozen=True)
class RegistrationStep:
    index: int
    iterations: int
    accumulated_iterations: int
    cost: float
    increment: float
    gamma: float


@dataclass
class RegistrationResult:
    transform: RigidTransform
    steps: list = field(default_factory=list)
    converged: bool = False

    @property
    def registrations(self) -> int:
        return len(self.steps)

    def to_csv(self) -> str:
        lines = ["registration,iterations,accumulated_iterations,cost,increment,gamma"]
        lines += [f"{s.index},{s.iterations},{s.accumulated_iterations},{s.cost!r},"
                  f"{s.increment!r},{s.gamma!r}" for s in self.steps]
        return "\n".join(lines) + "\n"


def registration_instance(P, Q_moved, alpha: float) -> PotInstance:
    """POT between clouds of sizes ``m`` and ``n``, padded to a square problem.

    Each point weighs ``1/max(m, n)``; padding points weigh nothing and sit at
    the maximal cost.
    """
    m, n = P.shape[0], Q_moved.shape[0]
    big = max(m, n)
    D = ((P[:, None, :] - Q_moved[None, :, :]) ** 2).sum(axis=-1)
    top = D.max()
    C = np.ones((big, big))
    C[:m, :n] = D / top if top > 0 else D
    r = np.zeros(big)
    c = np.zeros(big)
    r[:m] = 1.0 / big
    c[:n] = 1.0 / big
    s = alpha * min(m, n) / big
    return PotInstance(r, c, C, s)


def register_point_clouds(P, Q, config: RegistrationConfig = None, solver: str = "aspot",
                          solver_config: SolverConfig = None) -> RegistrationResult:
    """Align ``Q`` onto ``P`` by alternating POT plans and weighted Procrustes fits.

    The regularization starts at ``gamma0`` and shrinks by ``anneal_rate``
    after every registration. Stops once the incremental transform moves by
    less than ``transform_threshold`` (Frobenius change of R plus norm of t).
    """
    config = config or RegistrationConfig()
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.ndim != 2 or Q.ndim != 2 or P.shape[1] != 3 or Q.shape[1] != 3:
        raise ValueError("point clouds must be N x 3 arrays")
    if P.shape[0] < 3 or Q.shape[0] < 3:
        raise ValueError("need at least 3 points per cloud")
    m, n = P.shape[0], Q.shape[0]
    base = solver_config or SolverConfig(epsilon=config.epsilon, tol=config.tol,
                                         max_iterations=config.max_iterations)
    result = RegistrationResult(transform=RigidTransform.identity())
    gamma = config.gamma0
    accumulated = 0
    for k in range(1, config.max_registrations + 1):
        moved = result.transform.apply(Q)
        instance = registration_instance(P, moved, config.alpha)
        cfg = SolverConfig(**{**base.__dict__, "gamma_override": gamma})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxIterationsExceeded)
            plan, trace = solve(instance, solver, cfg)
        step = fit_rigid(plan.X[:m, :n], P, moved)
        result.transform = result.transform.then(step)
        increment = float(np.linalg.norm(step.R - np.eye(3)) + np.linalg.norm(step.t))
        accumulated += trace.iterations
        result.steps.append(RegistrationStep(index=k, iterations=trace.iterations,
                                             accumulated_iterations=accumulated,
                                             cost=plan.cost(instance), increment=increment,
                                             gamma=gamma))
        gamma *= config.anneal_rate
        if increment < config.transform_threshold:
            result.converged = True
            break
    if not result.converged:
        warnings.warn(f"registration did not settle within {config.max_registrations} rounds",
                      NoConvergence, stacklevel=2)
    return result


def read_xyz(path) -> np.ndarray:
    pts = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if pts.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns, got {pts.shape[1]}")
    return pts


def write_xyz(path, points) -> None:
    np.savetxt(path, np.asarray(points), fmt="%.10g")
