"""Weighted-sum-rate power allocation on multicarrier interference channels
by successive convex approximation (SCALE)."""

from .baselines import GridSpec, coordinate_grid_ascent, grid_oracle, trace_pob_2user, upa, waterfilling_single_user
from .generator import GeneratorParams, generate_scenario
from .gp import GPConfig, build_gp, gp_inner_solve, solve_convex, to_convex, wsr_loss_bound, xi_from_epsilon
from .lowcomplexity import inner_solve
from .model import Scenario, interference, is_feasible, logsinr_of_power, sinr, toy_set1, toy_set2, wsr
from .scale import IterationTrace, LowComplexity, ScaleConfig, alpha_update, kkt_residual, run_scale, surrogate_value

__all__ = [
    "GPConfig",
    "GeneratorParams",
    "GridSpec",
    "IterationTrace",
    "LowComplexity",
    "Scenario",
    "ScaleConfig",
    "alpha_update",
    "build_gp",
    "coordinate_grid_ascent",
    "generate_scenario",
    "gp_inner_solve",
    "grid_oracle",
    "inner_solve",
    "interference",
    "is_feasible",
    "kkt_residual",
    "logsinr_of_power",
    "run_scale",
    "sinr",
    "solve_convex",
    "surrogate_value",
    "to_convex",
    "toy_set1",
    "toy_set2",
    "trace_pob_2user",
    "upa",
    "waterfilling_single_user",
    "wsr",
    "wsr_loss_bound",
    "xi_from_epsilon",
]
