# %% [markdown]
# Per-realization behaviour of the admission schemes on hand-picked channels.

# %%
import numpy as np

from sgfnoma import (ChannelRealization, SystemParams, classify_groups, run_oma_baseline,
                     run_proposed, run_scheme_i, run_scheme_ii, sample_channels, threshold_tau)

params = SystemParams(p0=10, ps=10, r0=1, rs=0.9, m_users=3)
ch = ChannelRealization(0.5, np.array([0.2, 0.3, 1.0]))

# %%
# tau caps the received grant-free power the grant-based user can tolerate
print("tau =", threshold_tau(ch.g2, params))
print(classify_groups(ch, params))

# %%
for run in (run_scheme_i, run_scheme_ii, run_proposed, run_oma_baseline):
    out = run(ch, params)
    print(f"{out.scheme.value:10s} user={out.admitted_user} stage={out.sic_stage.value:12s} "
          f"rate={out.gf_rate:.4f} gb_ok={out.gb_success}")

# %%
# A weak grant-based channel: Scheme I breaks the grant-based user, the proposed one does not
ch = ChannelRealization(0.11, np.array([0.05, 0.5, 0.9]))
print("OMA      gb_ok:", run_oma_baseline(ch, params).gb_success)
print("Scheme I gb_ok:", run_scheme_i(ch, params).gb_success)
print("Proposed gb_ok:", run_proposed(ch, params).gb_success)

# %%
rng = np.random.default_rng(0)
for _ in range(3):
    ch = sample_channels(3, rng)
    out = run_proposed(ch, params)
    print(np.round(ch.h2, 3), round(ch.g2, 3), out.admitted_user, round(out.gf_rate, 3))
