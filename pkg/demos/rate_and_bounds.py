# coding: utf-8
"""
================================
Error versus sample size, bounds
================================

Relative Frechet error of resampled barycenters as S grows, next to the
covering-number bound on the gap.
"""

import numpy as np

from wbary import DatasetSpec, generate
from wbary.bounds import bound_report, frechet_gap_bound
from wbary.pipeline import reference_value, summarize, sweep

measures = generate(DatasetSpec("gaussian", N=4, M=128, seed=2))
ref, kind = reference_value(measures, restarts=5, seed=0)
print(f"reference F = {ref:.5f} ({kind})")

S_list = [8, 16, 32, 64]
rows = summarize(sweep(measures, S_list, reps=10, seed=0, reference=ref))
for S, R, mean, sd in rows:
    gap = frechet_gap_bound(measures, 2, S)
    print(f"S={S:3d}  rel. error {mean:.4f} +- {sd:.4f}   gap bound / F {gap / ref:8.2f}")

# %%
# Fitted slope of log error against log S; the bound decays like S^-1/2.

slope = np.polyfit(np.log(S_list), np.log([r[2] for r in rows]), 1)[0]
print(f"slope {slope:.2f}")

# %%
# All bounds at once.

print(bound_report(measures, 2, 64).as_dict())
