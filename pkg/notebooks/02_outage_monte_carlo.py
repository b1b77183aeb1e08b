# %% [markdown]
# Monte Carlo outage and ergodic rate of the three schemes, equal powers.

# %%
import numpy as np

from sgfnoma import Scheme, SystemParams, simulate

SCHEMES = (Scheme.SCHEME_I, Scheme.SCHEME_II, Scheme.PROPOSED)
powers_db = np.arange(0, 41, 10)

# %%
for m in (1, 5):
    print(f"M = {m}")
    for x in powers_db:
        P = 10 ** (x / 10)
        s = simulate(SystemParams(P, P, 1.0, 0.9, m), 10**6, seed=1, schemes=SCHEMES, audit=True)
        cells = "  ".join(f"{sc.value}={s.outage(sc).value:.2e}" for sc in SCHEMES)
        print(f"  {x:3d} dB  {cells}  violations={s.transparency_violations[Scheme.PROPOSED]}")

# %%
# ergodic rate: Scheme II saturates, the proposed scheme keeps growing
for x in powers_db:
    P = 10 ** (x / 10)
    s = simulate(SystemParams(P, P, 1.0, 0.9, 5), 10**6, seed=2, schemes=SCHEMES)
    print(x, [round(s.ergodic_rate(sc).value, 3) for sc in SCHEMES])

# %%
# results do not depend on the number of workers
p = SystemParams(10, 10, 1, 0.9, 2)
a = simulate(p, 10**6, 7, workers=1).outage(Scheme.PROPOSED)
b = simulate(p, 10**6, 7, workers=4).outage(Scheme.PROPOSED)
print(a, a == b)
