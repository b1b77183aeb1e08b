# %% [markdown]
# Which grant-free user the proposed scheme admits, and the high-SNR limit.

# %%
import numpy as np

from sgfnoma import SystemParams, estimate_admission
from sgfnoma.montecarlo import sample_admission_limit

np.set_printoptions(precision=4, suppress=True)

# %%
for r0 in (0.5, 1.5):
    print(f"r0 = {r0}")
    for x in (-10, 0, 10, 20, 30, 40, 60):
        P = 10 ** (x / 10)
        d = estimate_admission(SystemParams(P, P, r0, 0.9, 5), 10**6, seed=1)
        print(f"  {x:3d} dB", d.probs)
    # P(h_m < g/eps0 < h_{m+1}) for m = 1..M-1
    print("  limit ", sample_admission_limit(5, r0, 10**6, seed=2))
