# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # GP inner solver and the power floor
#
# The surrogate maximization is a geometric program in log-power and
# log-interference. A log-barrier Newton method solves its convex form. The
# logarithms need strictly positive powers, so every power gets a floor
# `xi`; the WSR lost to the floor is at most `2 xi N K^2 max(w g / sigma^2)`.

# %%
import numpy as np

from scaledsm.baselines import GridSpec, grid_oracle
from scaledsm.gp import GPConfig, build_gp, gp_inner_solve_with_status, wsr_loss_bound, xi_from_epsilon
from scaledsm.model import toy_set1

s = toy_set1()
gp = build_gp(s, np.array([[3.0], [1.0]]), xi=0.05)
print(f"{gp.num_vars} variables, constraints: {gp.constraint_names}")
print(gp.dump())

# %% [markdown]
# ## Solving one surrogate

# %%
p, status = gp_inner_solve_with_status(s, np.array([[3.0], [1.0]]), GPConfig(xi=0.05))
print("power:", p.ravel(), " Newton steps:", status.newton_steps, " duality gap:", f"{status.duality_gap:.1e}")

# %% [markdown]
# ## The floor and its loss bound
#
# On this two-user instance the unfloored optimum switches link 2 off. The
# floored optimum must keep it at 0.05, which costs a little WSR, well inside
# the bound.

# %%
_, f = grid_oracle(s, GridSpec(points_per_var=2001))
_, f_xi = grid_oracle(s, GridSpec(points_per_var=2001, lower=0.05), refine=True)
print(f"f* = {f:.5f}, f*(0.05) = {f_xi:.5f}, loss {f - f_xi:.4f} <= bound {wsr_loss_bound(s, 0.05):.3f}")
for eps in (1e-2, 1e-4, 1e-6):
    print(f"tolerated loss {eps:g} -> floor {xi_from_epsilon(s, eps):.3g}")
