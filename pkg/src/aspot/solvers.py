"""Greenkhorn steps, accelerated Sinkhorn (ASPOT) and Sinkhorn baselines for POT."""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .core import (BlockRule, ConvergenceTrace, DualPoint, PotInstance, SolverConfig,
                   TraceRecord, TransportPlan, validate)
from .dual import EXP_LIMIT, EntropicContext, _check, _exp_checked
from .exceptions import (DegenerateInstance, DualOverflowError, MaxIterationsExceeded,
                         StepSizeUnderflow, ZeroEntropy)
from .extend import default_penalty, extend, extract_block
from .rounding import round_balanced, round_pot

logger = logging.getLogger(__name__)

MAX_STEP_HALVINGS = 60
# |A|_{1->2}^2 for the POT constraint matrix: each plan column has 3 unit entries
LP_NORM_SQ = 3.0

BLOCKS = ("u", "v", "w")


def entropy(x) -> float:
    """Shannon entropy ``-sum x log x`` with ``0 log 0 = 0``."""
    x = np.asarray(x, dtype=np.float64)
    pos = x[x > 0]
    return float(-(pos * np.log(pos)).sum())


def theta_next(theta: float) -> float:
    """Next momentum weight; satisfies ``theta_next / theta = sqrt(1 - theta_next)``."""
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    # theta*(sqrt(theta^2+4)-theta)/2 rewritten without cancellation
    return 2.0 * theta / (theta + math.sqrt(theta * theta + 4.0))


# ---------------------------------------------------------------------------
# dual evaluations on raw arrays

class _Point:
    """Potentials together with the sums of B(z) needed by every update.

    ``B`` itself is only built on request (rounding, final plan).
    """

    __slots__ = ("ctx", "u", "v", "w", "row", "col", "tot", "log_tot", "eu", "ev", "phi", "_B")

    def __init__(self, ctx: EntropicContext, u, v, w):
        u = np.ascontiguousarray(u, dtype=np.float64)
        v = np.ascontiguousarray(v, dtype=np.float64)
        w = float(w)
        ok, top, *rest = _kernels.evaluate(ctx.logK, ctx.logK_max, u, v, w,
                                           ctx.r, ctx.c, ctx.s, EXP_LIMIT)
        if not ok:
            raise DualOverflowError(top, EXP_LIMIT)
        self.row, self.col, self.tot, self.log_tot, self.eu, self.ev, self.phi = rest
        self.ctx = ctx
        self.u, self.v, self.w = u, v, w
        self._B = None

    @property
    def B(self):
        if self._B is None:
            self._B = np.exp(self.ctx.logK + self.u[:, None] + (self.v + self.w)[None, :])
        return self._B

    def gradient(self, ctx):
        return (self.row + self.eu - ctx.r, self.col + self.ev - ctx.c, self.tot - ctx.s)

    def error(self, ctx) -> float:
        gu, gv, gw = self.gradient(ctx)
        return float(abs(gw) + np.abs(gu).sum() + np.abs(gv).sum())

    def dual_point(self) -> DualPoint:
        return DualPoint(self.u, self.v, self.w)


def _select_block(ctx, p: _Point, rule: BlockRule, counter: int) -> str:
    code = _kernels.choose_block(p.row, p.col, p.tot, p.log_tot, p.eu, p.ev, ctx.r, ctx.c, ctx.s,
                                 rule is BlockRule.GREEDY, counter)
    return BLOCKS[code]


def _block_update(ctx, p: _Point, block: str):
    u, v, w = p.u, p.v, p.w
    if block == "u":
        u = u + np.log(ctx.r) - np.log(p.row + p.eu)
    elif block == "v":
        v = v + np.log(ctx.c) - np.log(p.col + p.ev)
    else:
        w = w + math.log(ctx.s) - p.log_tot
    return u, v, w


def _greenkhorn(ctx, p: _Point, rule: BlockRule, counter: int) -> _Point:
    block = _select_block(ctx, p, rule, counter)
    return _Point(ctx, *_block_update(ctx, p, block))


def greenkhorn_step(ctx: EntropicContext, z: DualPoint, rule=BlockRule.GREEDY,
                    t: int = 0) -> DualPoint:
    """Exactly minimize the dual over one block of ``z``.

    ``rule="round-robin"`` picks block ``t mod 3`` of ``(u, v, w)``; the greedy
    rule picks the block whose rho-divergence violation is largest.
    """
    _check(ctx, z)
    rule = BlockRule(rule)
    p = _Point(ctx, z.u, z.v, z.w)
    block = _select_block(ctx, p, rule, t)
    return DualPoint(*_block_update(ctx, p, block))


# ---------------------------------------------------------------------------
# setup and theoretical constants

@dataclass(frozen=True, eq=False)
class AspotSetup:
    gamma: float
    eps_tilde: float
    mixed_r: np.ndarray
    mixed_c: np.ndarray


def aspot_setup(instance: PotInstance, epsilon: float, gamma_override=None) -> AspotSetup:
    """Regularization, stopping tolerance and mixed marginals for ASPOT."""
    n = instance.n
    if n < 2:
        raise DegenerateInstance("ASPOT needs n >= 2 (gamma = eps / (4 log n))")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    gamma = epsilon / (4.0 * math.log(n)) if gamma_override is None else float(gamma_override)
    cmax = instance.cost_max
    eps_tilde = epsilon / (8.0 * cmax) if cmax > 0 else math.inf
    for mass in (instance.mass_r, instance.mass_c):
        if mass > 1:
            eps_tilde = min(eps_tilde, 8.0 * (mass - instance.s) / (mass - 1.0))
    if not (eps_tilde > 0) or not math.isfinite(gamma) or not gamma > 0:
        raise DegenerateInstance(f"degenerate setup: eps_tilde={eps_tilde}, gamma={gamma}")
    # with a zero cost matrix eps_tilde is infinite; cap the mixing weight at one
    mix = min(eps_tilde / 8.0, 1.0)
    mixed_r = (1.0 - mix) * instance.r + mix / n
    mixed_c = (1.0 - mix) * instance.c + mix / n
    return AspotSetup(gamma=gamma, eps_tilde=eps_tilde, mixed_r=mixed_r, mixed_c=mixed_c)


@dataclass(frozen=True)
class TheoryBounds:
    R: float
    L: float
    mu_f: float
    iteration_bound: float


def theory_bounds(instance: PotInstance, gamma: float, eps_prime: float,
                  r=None, c=None) -> TheoryBounds:
    """Dual radius, smoothness constants and the accelerated iteration bound.

    ``r``, ``c`` default to the instance marginals; ASPOT passes its mixed
    marginals so that the log term stays finite.
    """
    if not gamma > 0 or not eps_prime > 0:
        raise ValueError("gamma and eps_prime must be positive")
    r = instance.r if r is None else np.asarray(r, dtype=np.float64)
    c = instance.c if c is None else np.asarray(c, dtype=np.float64)
    mr, mc, s = float(r.sum()), float(c.sum()), instance.s
    top = max(mr, mc)
    if not top > s:
        raise DegenerateInstance("max(|r|_1, |c|_1) == s makes the dual radius infinite")
    smallest = min(r.min(), c.min())
    if not smallest > 0:
        raise DegenerateInstance("marginals need strictly positive entries for the dual radius")
    R = instance.cost_max * top / (gamma * (top - s)) - math.log(smallest)
    mu_f = gamma / (mr + mc - s)
    L = LP_NORM_SQ / mu_f
    bound = 1.0 + (12.0 * math.sqrt(14.0 * instance.n * L) * R / eps_prime) ** (2.0 / 3.0)
    return TheoryBounds(R=R, L=L, mu_f=mu_f, iteration_bound=bound)


# ---------------------------------------------------------------------------
# ASPOT

@dataclass(frozen=True, eq=False)
class AspotState:
    """Iterates of an ASPOT run: momentum ``z``, monotone ``z_check`` and schedule."""

    z: DualPoint
    z_check: DualPoint
    theta: float
    t: int
    gamma: float
    eps_tilde: float
    mixed_r: np.ndarray
    mixed_c: np.ndarray


def _zero_budget(instance, trace, start):
    trace.append(TraceRecord(t=0, E=0.0, phi=0.0, rounded_cost=0.0,
                             elapsed=time.perf_counter() - start))
    trace.meta.update(converged=True, iterations=0)
    return TransportPlan.from_matrix(np.zeros((instance.n, instance.n)), instance), trace


def _warn_max_iter(name, trace, max_iterations):
    warnings.warn(f"{name} stopped after {max_iterations} iterations "
                  f"with error {trace.records[-1].E:.3g}", MaxIterationsExceeded, stacklevel=3)


def aspot_solve(instance: PotInstance, config: SolverConfig = None):
    """Accelerated Sinkhorn for POT.

    Nesterov extrapolation on the dual, with Greenkhorn block steps as the
    coupling and correction steps. Stops once the feasibility error of the
    monotone iterate drops to ``eps_tilde``, then rounds ``B`` of that iterate
    onto ``U(r, c, s)``.

    Returns ``(TransportPlan, ConvergenceTrace)``.
    """
    config = config or SolverConfig()
    validate(instance)
    start = time.perf_counter()
    trace = ConvergenceTrace(meta={"solver": "aspot", "error_iterate": "z_check"})
    if instance.s == 0:
        return _zero_budget(instance, trace, start)

    setup = aspot_setup(instance, config.epsilon, config.gamma_override)
    ctx = EntropicContext(instance, setup.gamma, setup.mixed_r, setup.mixed_c)
    n = instance.n
    rule = config.block_rule
    mass = float(setup.mixed_r.sum() + setup.mixed_c.sum() - instance.s)
    base_step = setup.gamma / (3.0 * mass)
    tol = setup.eps_tilde if config.tol is None else config.tol
    trace.meta.update(gamma=setup.gamma, tolerance=tol, eps_tilde=setup.eps_tilde,
                      block_rule=rule.value)

    # momentum sequence, kept as separate (u, v, w) parts
    mu, mv, mw = np.zeros(n), np.zeros(n), 0.0
    check = _Point(ctx, mu, mv, mw)
    theta = 1.0
    t = 0
    gk_calls = 0
    halvings_total = 0
    E = check.error(ctx)

    def record(t, E, point, chain=None):
        if t % config.log_every:
            return
        rc = None
        if config.round_every and t % config.round_every == 0:
            rc = round_pot(point.B, instance).cost(instance)
        trace.append(TraceRecord(t=t, E=E, phi=point.phi, rounded_cost=rc,
                                 elapsed=time.perf_counter() - start, chain=chain,
                                 theta=theta))

    record(0, E, check)
    while E > tol and t < config.max_iterations:
        keep = 1.0 - theta
        bu = keep * check.u + theta * mu
        bv = keep * check.v + theta * mv
        bw = keep * check.w + theta * mw
        z_bar = _Point(ctx, bu, bv, bw)
        gu, gv, gw = z_bar.gradient(ctx)
        step = base_step / theta
        for _ in range(MAX_STEP_HALVINGS + 1):
            nu, nv, nw = bu - step * gu, bv - step * gv, bw - step * gw
            try:
                z_grave = _Point(ctx, bu + theta * (nu - mu), bv + theta * (nv - mv),
                                 bw + theta * (nw - mw))
                z_hat = _greenkhorn(ctx, z_grave, rule, gk_calls)
                break
            except DualOverflowError:
                step *= 0.5
                halvings_total += 1
        else:
            raise StepSizeUnderflow(f"step halved {MAX_STEP_HALVINGS} times at iteration {t}")
        gk_calls += 1
        mu, mv, mw = nu, nv, nw
        z_cur = z_hat if z_hat.phi < check.phi else check
        check = _greenkhorn(ctx, z_cur, rule, gk_calls)
        gk_calls += 1
        theta = theta_next(theta)
        t += 1
        E = check.error(ctx)
        chain = (z_grave.phi, z_hat.phi, z_cur.phi, check.phi) if config.record_chain else None
        record(t, E, check, chain)

    converged = E <= tol
    if trace.records[-1].t != t:
        trace.append(TraceRecord(t=t, E=E, phi=check.phi, rounded_cost=None,
                                 elapsed=time.perf_counter() - start, theta=theta))
    plan = round_pot(check.B, instance)
    trace.meta.update(
        converged=converged, iterations=t, final_error=E, step_halvings=halvings_total,
        state=AspotState(z=DualPoint(mu, mv, mw), z_check=check.dual_point(),
                         theta=theta, t=t, gamma=setup.gamma, eps_tilde=setup.eps_tilde,
                         mixed_r=setup.mixed_r, mixed_c=setup.mixed_c),
        cost=plan.cost(instance))
    if not converged:
        _warn_max_iter("ASPOT", trace, config.max_iterations)
    return plan, trace


# ---------------------------------------------------------------------------
# Sinkhorn on the dummy-node extension

def _log_marginal(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _sinkhorn_extended(instance, gamma, tol, penalty_A, config, name, meta):
    start = time.perf_counter()
    trace = ConvergenceTrace(meta={"solver": name, **meta})
    if instance.s == 0:
        return _zero_budget(instance, trace, start)
    ext = extend(instance, penalty_A)
    logK = -ext.C_ext / gamma
    log_r, log_c = _log_marginal(ext.r_ext), _log_marginal(ext.c_ext)
    m = ext.size
    u = np.zeros(m)
    v = np.zeros(m)
    trace.meta.update(gamma=gamma, tolerance=tol, penalty_A=ext.penalty_A)

    def evaluate(u, v):
        B = np.exp(logK + u[:, None] + v[None, :])
        err = (np.abs(B.sum(axis=1) - ext.r_ext).sum()
               + np.abs(B.sum(axis=0) - ext.c_ext).sum())
        # terms with zero marginal carry -inf potentials and contribute nothing
        lin = np.where(ext.r_ext > 0, u * ext.r_ext, 0.0).sum() \
            + np.where(ext.c_ext > 0, v * ext.c_ext, 0.0).sum()
        return B, float(err), float(B.sum() - lin)

    def rounded_cost(B):
        block = extract_block(round_balanced(B, ext.r_ext, ext.c_ext)).X
        return round_pot(block, instance).cost(instance)

    def record(t, B, err, phi):
        if t % config.log_every:
            return
        rc = rounded_cost(B) if config.round_every and t % config.round_every == 0 else None
        trace.append(TraceRecord(t=t, E=err, phi=phi, rounded_cost=rc,
                                 elapsed=time.perf_counter() - start))

    B, err, phi = evaluate(u, v)
    record(0, B, err, phi)
    t = 0
    with np.errstate(invalid="ignore"):
        while err > tol and t < config.max_iterations:
            u = log_r - logsumexp(logK + v[None, :], axis=1)
            v = log_c - logsumexp(logK + u[:, None], axis=0)
            t += 1
            B, err, phi = evaluate(u, v)
            record(t, B, err, phi)
    converged = err <= tol
    if trace.records[-1].t != t:
        trace.append(TraceRecord(t=t, E=err, phi=phi, rounded_cost=None,
                                 elapsed=time.perf_counter() - start))
    block = extract_block(round_balanced(B, ext.r_ext, ext.c_ext)).X
    plan = round_pot(block, instance)
    trace.meta.update(converged=converged, iterations=t, final_error=err,
                      cost=plan.cost(instance))
    if not converged:
        _warn_max_iter(name, trace, config.max_iterations)
    return plan, trace


def _penalty(instance, epsilon):
    # any A above max C works; a zero cost matrix still needs a positive corner
    return default_penalty(instance, epsilon) if instance.cost_max > 0 else 1.0


def feasible_sinkhorn_solve(instance: PotInstance, config: SolverConfig = None,
                            penalty_A: float = None):
    """Sinkhorn on the dummy-node extension with ASPOT's default gamma and tolerance.

    The converged extended plan is rounded onto its balanced polytope, its
    ``n x n`` block extracted and rounded onto ``U(r, c, s)``.
    """
    config = config or SolverConfig()
    validate(instance)
    setup = aspot_setup(instance, config.epsilon, config.gamma_override)
    A = _penalty(instance, config.epsilon) if penalty_A is None else penalty_A
    tol = setup.eps_tilde if config.tol is None else config.tol
    return _sinkhorn_extended(instance, setup.gamma, tol, A, config,
                              "sinkhorn", {})


@dataclass(frozen=True)
class TunedParameters:
    h_min: float
    gamma: float
    eps_prime: float


def tuned_parameters(instance: PotInstance, epsilon: float, p: float) -> TunedParameters:
    if not p >= 1:
        raise ValueError("p must be >= 1")
    h_min = min(entropy(instance.r), entropy(instance.c))
    if not h_min > 0:
        raise ZeroEntropy(f"min marginal entropy is {h_min:g}; tuned gamma needs it positive")
    gamma = (2.0 * epsilon / (49.0 * h_min)) ** (1.0 / p)
    return TunedParameters(h_min=h_min, gamma=gamma, eps_prime=h_min * gamma ** p)


def tuned_sinkhorn_solve(instance: PotInstance, epsilon: float = None, p: float = None,
                         config: SolverConfig = None, penalty_A: float = None):
    """Sinkhorn on the dummy-node extension with entropy-tuned regularization.

    ``gamma = (2 eps / (49 H_min))^(1/p)`` and the stopping tolerance is
    ``H_min gamma^p``.
    """
    config = config or SolverConfig()
    epsilon = config.epsilon if epsilon is None else epsilon
    p = config.tuning_exponent_p if p is None else p
    validate(instance)
    params = tuned_parameters(instance, epsilon, p)
    A = _penalty(instance, epsilon) if penalty_A is None else penalty_A
    tol = params.eps_prime if config.tol is None else config.tol
    return _sinkhorn_extended(instance, params.gamma, tol, A, config,
                              "tuned-sinkhorn", {"p": p, "h_min": params.h_min,
                                                 "eps_prime": params.eps_prime})


SOLVERS = {
    "aspot": aspot_solve,
    "sinkhorn": feasible_sinkhorn_solve,
    "tuned-sinkhorn": lambda inst, config=None: tuned_sinkhorn_solve(inst, config=config),
}


def solve(instance: PotInstance, solver: str = "aspot", config: SolverConfig = None):
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}") from None
    return fn(instance, config=config)
