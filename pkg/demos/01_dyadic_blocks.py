"""
Dyadic blocks and critical Besov norms
======================================

Split a Gaussian into frequency annuli, look at the size of each block and
watch the low-pass truncations ``S_j u`` close in on ``u``.
"""

# %%
import numpy as np

from gchlab.spectral import (BesovParams, GridFunction, GridSpec, besov_norm,
                             block_lp_norms, low_cutoff, make_filter_bank)

grid = GridSpec(half_length=20.0, n_points=1024)
bank = make_filter_bank(grid)
print(f"blocks j = -1 .. {bank.j_max}, Nyquist {grid.nyquist:.1f}")

# the multipliers add up to one at every resolved frequency
print("partition of unity defect:", np.abs(bank.multipliers.sum(axis=0) - 1).max())

# %%
# A narrow Gaussian has content in most blocks.
u = GridFunction.from_callable(grid, lambda x: np.exp(-(x / 0.3) ** 2))
for j, n in zip(bank.indices, block_lp_norms(u.values, 2.0, bank)):
    print(f"  j = {j:2d}   ||Delta_j u||_2 = {n:.3e}")

# %%
# The critical norms B^{1/p}_{p,1} for a few p.
for p in (1.0, 2.0, 4.0):
    print(f"  p = {p:g}: {besov_norm(u, BesovParams.critical(p), bank):.6f}")

# %%
# Truncation error in the p = 2 critical norm. It only ever goes down.
par = BesovParams.critical(2.0)
for j in range(0, bank.j_max + 2):
    err = besov_norm(low_cutoff(u, j, bank) - u, par, bank)
    print(f"  ||S_{j} u - u|| = {err:.3e}")
