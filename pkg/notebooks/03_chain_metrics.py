# %% [markdown]
# # Spectral gap, entropy rate and recurrence
#
# How fast a chain forgets its start, how unpredictable its next step is,
# and how often each state comes back, for chains with more or less
# neutral-state inertia.

# %%
from lobmarkov.chainbuilder import STATE_NAMES
from lobmarkov.dtmc import Tpm
from lobmarkov.metrics import chain_metrics, tv_bound
from lobmarkov.synth import planted_tpm

for p55 in (0.3, 0.5, 0.7, 0.9):
    m = chain_metrics(Tpm(planted_tpm(p55)))
    print(f"p55={p55:.1f} gap={m.spectral_gap:.3f} relax={m.relaxation_time:.3f} "
          f"-ln|l2|={m.relaxation_rate_log:.3f} H={m.entropy_rate:.3f} nats "
          f"mu(S5)={m.mrt[4]:.2f}")

# %%
print(tv_bound(m.relaxation_time, 10))
print(dict(zip(STATE_NAMES, m.mrt.round(1).tolist())))
