# %% [markdown]
# Closed-form outage of the proposed scheme against the quadrature oracle,
# the high-SNR approximations and the upper bound.

# %%
import numpy as np

from sgfnoma import (SystemParams, outage_breakdown_quadrature, outage_diversity, outage_exact,
                     outage_highsnr, outage_quadrature, outage_upper_bound)

# %%
p = SystemParams(10, 10, 1, 0.9, 3)
exact = outage_exact(p)
print("terms Q_0..Q_{M+1}:", np.array(exact.q))
print("termwise quadrature:", np.array(outage_breakdown_quadrature(p).q))
print("total", exact.total, "quadrature", outage_quadrature(p))

# %%
print(" dB  M        exact       highsnr     (eps_s/P)^M      bound")
for m in (1, 2, 3, 5):
    for x in (10, 20, 30, 40, 50):
        P = 10 ** (x / 10)
        q = SystemParams(P, P, 1, 0.9, m)
        print(f"{x:3d} {m:2d}  {outage_exact(q).total:.4e}  {outage_highsnr(q):.4e}  "
              f"{outage_diversity(q):.4e}  {outage_upper_bound(q):.4e}")

# %%
# diversity order from the slope between 40 and 50 dB
for m in (1, 2, 3):
    lo = outage_exact(SystemParams(1e4, 1e4, 1, 0.9, m)).total
    hi = outage_exact(SystemParams(1e5, 1e5, 1, 0.9, m)).total
    print(m, np.log10(hi / lo))

# %%
# eps0 * epss >= 1: no closed form, the quadrature shows a floor
for x in (20, 30, 40, 50, 60):
    P = 10 ** (x / 10)
    print(x, outage_quadrature(SystemParams(P, P, 1.5, 1.0, 5)))
