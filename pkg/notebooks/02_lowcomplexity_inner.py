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
# # Low-complexity inner solver
#
# For fixed surrogate coefficients the stationarity conditions give a closed
# form per power, `p = alpha / (mu + price)` clipped to `[0, mask]`, where
# the price collects the interference this link causes to others and `mu`
# is the budget multiplier found by bisection. Sweeping the update L times
# approximates the surrogate maximizer; L = 1 is often enough.

# %%
import numpy as np

from scaledsm import lowcomplexity as lc
from scaledsm.baselines import upa
from scaledsm.generator import GeneratorParams, generate_scenario
from scaledsm.model import wsr
from scaledsm.scale import LowComplexity, ScaleConfig, kkt_residual, run_scale

s = generate_scenario(GeneratorParams(N=32), seed=1)
print(f"K={s.K}, N={s.N}, UPA WSR = {wsr(s, upa(s)):.3f}")

# %% [markdown]
# ## One surrogate, many sweeps
#
# With `alpha = w` fixed, more sweeps do not necessarily shrink the KKT
# residual of that surrogate. The sweep is a fixed-point heuristic with no
# convergence guarantee when links are strongly coupled. Its value shows up in
# the outer loop below, not as an exact inner solver.

# %%
alpha = np.repeat(s.weight[:, None], s.N, axis=1)
for L in (1, 4, 16, 64):
    p, used = lc.inner_solve(s, alpha, s.zeros(), L=L)
    print(f"L={L:3d}  sweeps used={used:3d}  KKT residual for this alpha={kkt_residual(s, p, alpha=alpha):.2e}")

# %% [markdown]
# ## Whole SCALE runs for several L
#
# The outer loop recomputes alpha after each inner solve. Small L trades
# surrogate accuracy for speed, and the outer loop still ascends.

# %%
for L in (1, 4, 16):
    tr = run_scale(s, ScaleConfig(max_outer=8, inner=LowComplexity(L=L)))
    print(f"L={L:2d}  WSR by iteration:", np.round(tr.wsr, 3))
