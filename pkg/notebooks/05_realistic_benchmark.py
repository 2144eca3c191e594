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
# # Four links, many carriers: method comparison
#
# Scenarios come from the channel generator: path loss calibrated to 30 dB
# at 10 m with exponent 3, and frequency-selective fading from an 8-tap
# channel. This notebook runs a small batch. The full comparison is
# `dsm bench --generator params.json --seeds 1..100`.

# %%
import tempfile

import numpy as np

from scaledsm.experiment import ExperimentSpec, run_experiment
from scaledsm.generator import GeneratorParams

out = tempfile.mkdtemp()
spec = ExperimentSpec(methods=["gp", "lc:1", "lc:4", "upa"], out_dir=out, M=8,
                      generator=GeneratorParams(N=32), seeds=list(range(1, 6)))
report = run_experiment(spec)
print("errors:", report.errors)

# %% [markdown]
# ## Mean WSR against the number of outer iterations

# %%
print(f"{'method':>6} " + " ".join(f"M={m:<6d}" for m in range(1, 9)))
for method in ("gp", "lc:1", "lc:4"):
    print(f"{method:>6} " + " ".join(f"{report.mean_wsr(method, m):8.2f}" for m in range(1, 9)))
print(f"{'upa':>6} {report.mean_wsr('upa', 0):8.2f}")

# %% [markdown]
# ## Wall time per instance at M = 8

# %%
for row in report.summary:
    if row[1] in (0, 8):
        print(f"{row[0]:>6}  {row[4]:9.1f} ms")
