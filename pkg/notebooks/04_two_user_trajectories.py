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
# # Two-user examples: trajectories and region geometry
#
# Two links on one carrier, so the achievable log-SINR region is a planar
# set. Set 1 has its optimum at a corner with one link off. Set 2 has a local
# fixed point that a single-sweep inner solver escapes.

# %%
import numpy as np

from scaledsm import baselines as bl
from scaledsm.gp import GPConfig
from scaledsm.model import toy_set1, toy_set2
from scaledsm.scale import LowComplexity, ScaleConfig, run_scale

for name, s in (("set 1", toy_set1()), ("set 2", toy_set2())):
    _, f = bl.grid_oracle(s, bl.GridSpec(points_per_var=2001))
    _, f_xi = bl.grid_oracle(s, bl.GridSpec(points_per_var=2001, lower=0.05), refine=True)
    print(f"{name}: f* = {f:.4f}, f*(0.05) = {f_xi:.4f}")

# %% [markdown]
# ## Trajectories in log-SINR space

# %%
for name, s in (("set 1", toy_set1()), ("set 2", toy_set2())):
    for label, inner in (("gp xi=0.05", GPConfig(xi=0.05)), ("lc L=8", LowComplexity(L=8)), ("lc L=1", LowComplexity(L=1))):
        tr = run_scale(s, ScaleConfig(max_outer=20, inner=inner, outer_tol=0.0))
        last = tr.final
        print(f"{name} {label:11s} m={last.m:2d}  WSR={last.wsr:.4f}  phi=({last.phi[0, 0]:.2f}, {last.phi[1, 0]:.2f})")

# %% [markdown]
# ## Region convexity
#
# Without a floor the region is convex: every chord midpoint between outline
# points is achievable. With the floor, the lower edges bend and some chords
# leave the region.

# %%
s = toy_set1()
for lower in (0.0, 0.05):
    convex, fails = bl.convexity_probe_2user(s, lower, samples=300)
    print(f"lower={lower}: {'no chord failures' if convex else f'{len(fails)} failing midpoints'}")
pob = bl.trace_pob_2user(s, samples=2000)
print("Pareto boundary ends:", pob[0], pob[-1])
