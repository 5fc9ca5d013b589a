# coding: utf-8
"""
==========================
Quickstart: a barycenter
==========================

Generate a few point clouds, compute their barycenter exactly and with the
resampling solver, and compare Frechet values.
"""

# %%
# Data
# ----
#
# Four noisy crescents with 60 points each, all uniform.

import numpy as np

from wbary import (DatasetSpec, SuaConfig, exact_barycenter, frechet_value,
                   generate, randomized_barycenter, sua_solve)

measures = generate(DatasetSpec("crescents", N=4, M=60, seed=1))
print([m.n_atoms for m in measures])

# %%
# Full-data solve
# ---------------
#
# SUA on all 60 points, then the resampled version with S = 15 and R = 4.
# The mean combination is a mixture of the repeats.

bary, value = sua_solve(measures, SuaConfig(restarts=5, seed=0))
print(f"SUA on full data   F = {value:.5f}")

cfg = SuaConfig(sample_size=15, repeats=4, seed=0)
approx, records = randomized_barycenter(measures, cfg, evaluate=True)
print(f"resampled mixture  F = {frechet_value(approx, measures):.5f}")
print("per repeat        ", np.round([r.frechet for r in records], 5))

# %%
# Exact reference on a small instance
# -----------------------------------
#
# The LP is only feasible for tiny inputs.

small = generate(DatasetSpec("crescents", N=3, M=5, seed=1))
_, lp_value = exact_barycenter(small, 2)
_, sua_value = sua_solve(small, SuaConfig(restarts=5, seed=0))
print(f"LP {lp_value:.8f}  SUA {sua_value:.8f}")
