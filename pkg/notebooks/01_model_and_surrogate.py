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
# # Weighted sum rate and its log-SINR lower bound
#
# A scenario holds the gains `g[k, l, n]` (receiver k, transmitter l,
# carrier n), noise, weights, budgets and masks. The WSR is concave in
# neither power nor log-power, but it is convex in the log-SINR coordinates,
# and the per-link log-SINR is concave in log-power. SCALE uses the tangent
# of that convex function to build a lower bound that is tight at the anchor.

# %%
import numpy as np

from scaledsm.model import logsinr_of_power, sinr, toy_set1, wsr, wsr_from_logsinr
from scaledsm.scale import alpha_update, surrogate_value

s = toy_set1()
p = np.array([[1.0], [1.0]])
print("SINR at full power:", sinr(s, p).ravel())
print("WSR at full power:", wsr(s, p))
print("WSR with link 2 silent:", wsr(s, [[1.0], [0.0]]), "= 3 log 2")

# %% [markdown]
# ## Surrogate coefficients
#
# `alpha = w SINR / (Gamma + SINR)` is the gradient of the WSR with respect
# to log-SINR. The surrogate below is exact at the anchor and never above the
# WSR elsewhere.

# %%
alpha = alpha_update(s, p)
print("alpha:", alpha.ravel())
rng = np.random.default_rng(0)
gaps = []
for _ in range(2000):
    q = rng.uniform(0.01, 1.0, (2, 1))
    gaps.append(wsr(s, q) - surrogate_value(s, alpha, p, q))
print(f"min(wsr - surrogate) over 2000 points: {min(gaps):.3e}")
print("gap at anchor:", wsr(s, p) - surrogate_value(s, alpha, p, p))

# %% [markdown]
# ## Convexity in log-SINR
#
# A midpoint check on random pairs: the value at the midpoint never exceeds
# the average of the endpoint values.

# %%
worst = np.inf
for _ in range(2000):
    a, b = rng.uniform(-8, 4, (2, 2, 1))
    worst = min(worst, 0.5 * (wsr_from_logsinr(s, a) + wsr_from_logsinr(s, b)) - wsr_from_logsinr(s, 0.5 * (a + b)))
print(f"smallest midpoint gap: {worst:.3e} (nonnegative means convex)")
print("log-SINR at full power:", logsinr_of_power(s, p).ravel())
