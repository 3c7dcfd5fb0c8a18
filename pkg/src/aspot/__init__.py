"""Accelerated and classical Sinkhorn solvers for entropic partial optimal transport."""

from .core import (BlockRule, ConvergenceTrace, DualPoint, PotInstance, SolverConfig,
                   TraceRecord, TransportPlan, plan_feasibility_gap, validate)
from .dual import (EntropicContext, b_matrix, dual_gradient, dual_objective,
                   feasibility_error, rho)
from .extend import ExtendedOtInstance, extend, extract_block
from .oracle import lp_form, solve_exact
from .rounding import round_balanced, round_pot
from .solvers import (AspotState, TheoryBounds, aspot_setup, aspot_solve, entropy,
                      feasible_sinkhorn_solve, greenkhorn_step, solve, theory_bounds,
                      theta_next, tuned_sinkhorn_solve)

__version__ = "0.1.0"
