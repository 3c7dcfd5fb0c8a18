"""Solver comparisons: iterations to a cost target, and runtime scaling."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .. import _kernels
from ..core import PotInstance, SolverConfig
from ..exceptions import MaxIterationsExceeded
from ..solvers import aspot_solve, feasible_sinkhorn_solve, tuned_sinkhorn_solve
from .synthetic import scaling_instance

# fixed configuration of the scaling benchmark
SCALING_GAMMA = 1e-3
SCALING_TOL = 1e-7
SCALING_MAX_ITER = 1500


def iterations_to_target(trace, target: float):
    """First logged iteration whose rounded cost is at most ``target``; None if never."""
    for rec in trace.records:
        if rec.rounded_cost is not None and rec.rounded_cost <= target:
            return rec.t
    return None


@dataclass(frozen=True)
class TunedComparison:
    target: float
    iterations: dict  # label -> iterations to target, None if unreached
    traces: dict

    def non_increasing(self, labels) -> bool:
        its = [self.iterations[k] for k in labels]
        if any(i is None for i in its):
            return False
        return all(a >= b for a, b in zip(its, its[1:]))


def tuned_comparison(instance: PotInstance, epsilon: float, target: float,
                     exponents=(1, 2, 4), max_iterations: int = 5000) -> TunedComparison:
    """Run tuned Sinkhorn for each ``p`` and the default-gamma Sinkhorn.

    The rounded cost is logged at every iteration. Labels are ``"p=<p>"`` and
    ``"classical"``.
    """
    cfg = SolverConfig(epsilon=epsilon, round_every=1, max_iterations=max_iterations)
    traces = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterationsExceeded)
        for p in exponents:
            traces[f"p={p:g}"] = tuned_sinkhorn_solve(instance, epsilon, p, cfg)[1]
        traces["classical"] = feasible_sinkhorn_solve(instance, cfg)[1]
    return TunedComparison(target=target,
                           iterations={k: iterations_to_target(t, target) for k, t in traces.items()},
                           traces=traces)


@dataclass(frozen=True)
class ScalingResult:
    sizes: tuple
    runtimes: tuple
    iterations: tuple
    slope: float

    def to_csv(self) -> str:
        rows = ["n,runtime_s,iterations"]
        rows += [f"{n},{t:.6f},{k}" for n, t, k in zip(self.sizes, self.runtimes, self.iterations)]
        return "\n".join(rows) + "\n"


def fit_slope(sizes, runtimes) -> float:
    """Least-squares slope of log(runtime) against log(n)."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if np.unique(sizes).size < 2:
        raise ValueError("need at least two distinct sizes to fit a slope")
    return float(np.polyfit(np.log(sizes), np.log(np.asarray(runtimes, dtype=np.float64)), 1)[0])


SCALING_SOLVERS = {
    "aspot": aspot_solve,
    "sinkhorn": feasible_sinkhorn_solve,
    "tuned-sinkhorn": lambda inst, cfg: tuned_sinkhorn_solve(inst, config=cfg),
}


def bench_scaling(sizes, seed: int = 0, solver: str = "aspot",
                  config: SolverConfig = None, repeats: int = 3) -> ScalingResult:
    """Wall time per size on the synthetic scaling family, plus the fitted slope.

    Sizes run sequentially after an untimed warm-up solve; each size keeps the
    best of ``repeats`` runs. The default configuration fixes gamma = 1e-3,
    tolerance 1e-7 and at most 1500 iterations.
    """
    sizes = tuple(int(n) for n in sizes)
    if len(set(sizes)) < 2:
        raise ValueError("need at least two distinct sizes to fit a slope")
    if solver not in SCALING_SOLVERS:
        raise ValueError(f"unknown solver {solver!r}")
    config = config or SolverConfig(gamma_override=SCALING_GAMMA, tol=SCALING_TOL,
                                    max_iterations=SCALING_MAX_ITER)
    # only the final record matters here; per-iteration logging would skew timings
    config = replace(config, log_every=config.max_iterations, round_every=0)
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    run = SCALING_SOLVERS[solver]
    _kernels.warm_up()
    runtimes, iterations = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterationsExceeded)
        run(scaling_instance(min(sizes), seed), config)
        for n in sizes:
            instance = scaling_instance(n, seed)
            best = np.inf
            for _ in range(repeats):
                start = time.perf_counter()
                _, trace = run(instance, config)
                best = min(best, time.perf_counter() - start)
            runtimes.append(best)
            iterations.append(trace.iterations)
    return ScalingResult(sizes, tuple(runtimes), tuple(iterations), fit_slope(sizes, runtimes))
