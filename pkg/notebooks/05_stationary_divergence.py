# %% [markdown]
# # Long-run state mix and how it shifts across the day
#
# Stationary distributions of six interval chains and the Jensen-Shannon
# divergence (base 2) between every pair.

# %%
from lobmarkov.divergence import jsd_matrix, kld
from lobmarkov.dtmc import Tpm, stationary
from lobmarkov.synth import U_PROFILE, planted_tpm

intervals = [f"T{i}" for i in range(1, 7)]
dists = [stationary(Tpm(planted_tpm(p55))).pi for p55 in U_PROFILE]
for name, pi in zip(intervals, dists):
    print(name, pi.round(3))

# %%
m = jsd_matrix(dists, intervals)
for row in m.to_rows(4):
    print(" ".join(f"{c:>7}" for c in row))
print("KL(T1||T3) =", round(kld(dists[0], dists[2]), 5), "bits")
