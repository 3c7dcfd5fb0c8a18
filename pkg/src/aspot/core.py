"""Problem instances, dual points, plans, solver configuration and run traces."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import DimensionMismatch, InvalidInstanceError, Violation

# slack allowed on s <= min(|r|_1, |c|_1); pipelines compute s as a product
BUDGET_SLACK = 1e-12
# relative tolerance for "exact" feasibility of rounded plans
FEASIBILITY_TOL = 1e-9


def _frozen(a, ndim=None):
    arr = np.array(a, dtype=np.float64, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PotInstance:
    """A partial OT problem: marginals ``r``, ``c``, cost ``C`` and budget ``s``.

    Construction copies the inputs into read-only float arrays but does not
    check the POT invariants; call :func:`validate` for that.
    """

    r: np.ndarray
    c: np.ndarray
    C: np.ndarray
    s: float

    def __post_init__(self):
        object.__setattr__(self, "r", _frozen(self.r, 1))
        object.__setattr__(self, "c", _frozen(self.c, 1))
        object.__setattr__(self, "C", _frozen(self.C, 2))
        object.__setattr__(self, "s", float(self.s))

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def mass_r(self) -> float:
        return float(self.r.sum())

    @property
    def mass_c(self) -> float:
        return float(self.c.sum())

    @property
    def cost_max(self) -> float:
        return float(np.abs(self.C).max()) if self.C.size else 0.0

    def cost(self, X) -> float:
        return float(np.sum(self.C * np.asarray(X)))

    def to_json(self) -> str:
        return json.dumps({"r": self.r.tolist(), "c": self.c.tolist(),
                           "C": self.C.tolist(), "s": self.s})

    @classmethod
    def from_json(cls, text: str) -> "PotInstance":
        doc = json.loads(text)
        missing = {"r", "c", "C", "s"} - set(doc)
        if missing:
            raise ValueError(f"instance document lacks keys {sorted(missing)}")
        return cls(r=doc["r"], c=doc["c"], C=doc["C"], s=doc["s"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "PotInstance":
        return cls.from_json(Path(path).read_text())


def validate(instance: PotInstance) -> PotInstance:
    """Return ``instance`` unchanged if every POT invariant holds.

    Raises :class:`InvalidInstanceError` listing all violations otherwise.
    """
    problems = []
    r, c, C = instance.r, instance.c, instance.C
    n = r.shape[0]
    if n < 1:
        problems.append(Violation("DimensionMismatch", "empty marginal"))
    if c.shape != (n,):
        problems.append(Violation("DimensionMismatch", f"len(c)={c.shape[0]} but len(r)={n}"))
    if C.shape != (n, n):
        problems.append(Violation("DimensionMismatch", f"C has shape {C.shape}, expected {(n, n)}"))
    for name, arr in (("r", r), ("c", c), ("C", C), ("s", np.array([instance.s]))):
        if not np.all(np.isfinite(arr)):
            problems.append(Violation("NonFiniteEntry", f"{name} has non-finite entries"))
        elif np.any(arr < 0):
            problems.append(Violation("NegativeEntry", f"{name} has negative entries"))
    if np.all(np.isfinite(r)) and np.all(np.isfinite(c)) and math.isfinite(instance.s):
        cap = min(r.sum(), c.sum()) if n else 0.0
        if instance.s > cap + BUDGET_SLACK:
            problems.append(Violation(
                "BudgetExceedsMass", f"s={instance.s:g} > min(|r|_1, |c|_1)={cap:g}"))
    if problems:
        raise InvalidInstanceError(problems)
    return instance


@dataclass(frozen=True, eq=False)
class DualPoint:
    """Dual potentials ``z = (u, v, w)``."""

    u: np.ndarray
    v: np.ndarray
    w: float

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u, 1))
        object.__setattr__(self, "v", _frozen(self.v, 1))
        object.__setattr__(self, "w", float(self.w))
        if self.u.shape != self.v.shape:
            raise DimensionMismatch("u and v must have equal length")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))
                and math.isfinite(self.w)):
            raise ValueError("dual point has non-finite entries")

    @classmethod
    def zeros(cls, n: int) -> "DualPoint":
        return cls(np.zeros(n), np.zeros(n), 0.0)

    @classmethod
    def from_vector(cls, x) -> "DualPoint":
        x = np.asarray(x, dtype=np.float64)
        n = (x.shape[0] - 1) // 2
        if x.shape != (2 * n + 1,):
            raise DimensionMismatch(f"flat dual vector must have odd length, got {x.shape}")
        return cls(x[:n], x[n:2 * n], x[2 * n])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.v, [self.w]])

    @property
    def n(self) -> int:
        return self.u.shape[0]


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """An ``n x n`` plan with its slacks against ``r`` and ``c``."""

    X: np.ndarray
    row_slack: np.ndarray
    col_slack: np.ndarray
    mass: float

    @classmethod
    def from_matrix(cls, X, instance: PotInstance) -> "TransportPlan":
        X = _frozen(X, 2)
        if X.shape != (instance.n, instance.n):
            raise DimensionMismatch(f"plan shape {X.shape} does not match n={instance.n}")
        if np.any(X < 0):
            raise ValueError("transport plan has negative entries")
        return cls(X=X,
                   row_slack=_frozen(instance.r - X.sum(axis=1)),
                   col_slack=_frozen(instance.c - X.sum(axis=0)),
                   mass=float(X.sum()))

    def cost(self, instance: PotInstance) -> float:
        return instance.cost(self.X)

    def to_json(self) -> str:
        return json.dumps({"X": self.X.tolist(), "mass": self.mass})


def plan_feasibility_gap(plan, instance: PotInstance) -> float:
    """Largest violation of ``X1 <= r``, ``X^T1 <= c`` and ``1^T X 1 = s``.

    ``plan`` may be a :class:`TransportPlan` or a bare matrix.
    """
    X = plan.X if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    if X.shape != (instance.n, instance.n):
        raise DimensionMismatch(f"plan shape {X.shape} does not match n={instance.n}")
    row = np.max(np.maximum(X.sum(axis=1) - instance.r, 0.0), initial=0.0)
    col = np.max(np.maximum(X.sum(axis=0) - instance.c, 0.0), initial=0.0)
    return float(max(row, col, abs(X.sum() - instance.s)))


class BlockRule(str, enum.Enum):
    GREEDY = "greedy"
    ROUND_ROBIN = "round-robin"


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 0.1
    gamma_override: Optional[float] = None
    # replaces the derived stopping tolerance (eps_tilde / eps') when set
    tol: Optional[float] = None
    max_iterations: int = 10_000
    block_rule: BlockRule = BlockRule.GREEDY
    tuning_exponent_p: float = 1.0
    deterministic: bool = True
    log_every: int = 1
    # rounded cost is recorded every ``round_every`` iterations; 0 disables it
    round_every: int = 0
    record_chain: bool = False

    def __post_init__(self):
        object.__setattr__(self, "block_rule", BlockRule(self.block_rule))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.gamma_override is not None and not self.gamma_override > 0:
            raise ValueError("gamma_override must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tuning_exponent_p >= 1:
            raise ValueError("tuning_exponent_p must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.round_every < 0:
            raise ValueError("round_every must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    t: int
    E: float
    phi: float
    rounded_cost: Optional[float]
    elapsed: float
    # (phi(z_grave), phi(z_hat), phi(z), phi(z_check_next)) for ASPOT runs
    chain: Optional[tuple] = None
    theta: Optional[float] = None


TRACE_HEADER = ("t", "E", "phi", "rounded_cost", "elapsed_s")


@dataclass
class ConvergenceTrace:
    """Per-iteration log of a solve.

    ``meta`` carries solver-specific facts (gamma, tolerance, which iterate
    the stopping error was measured at, convergence flag).
    """

    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.t <= self.records[-1].t:
            raise ValueError("trace iteration indices must be strictly increasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def iterations(self) -> int:
        return int(self.meta.get("iterations", self.records[-1].t if self.records else 0))

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name)
                         for r in self.records], dtype=float)

    def to_csv(self, include_time: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = TRACE_HEADER if include_time else TRACE_HEADER[:-1]
        writer.writerow(header)
        for rec in self.records:
            row = [rec.t, repr(float(rec.E)), repr(float(rec.phi)),
                   "" if rec.rounded_cost is None else repr(float(rec.rounded_cost))]
            if include_time:
                row.append(f"{rec.elapsed:.6f}")
            writer.writerow(row)
        return buf.getvalue()

    def write_csv(self, path, include_time: bool = True) -> None:
        Path(path).write_text(self.to_csv(include_time))

    @classmethod
    def from_csv(cls, text: str) -> "ConvergenceTrace":
        reader = csv.DictReader(io.StringIO(text))
        trace = cls()
        for row in reader:
            rc = row.get("rounded_cost", "")
            trace.append(TraceRecord(
                t=int(row["t"]), E=float(row["E"]), phi=float(row["phi"]),
                rounded_cost=float(rc) if rc not in ("", None) else None,
                elapsed=float(row.get("elapsed_s") or 0.0)))
        return trace
