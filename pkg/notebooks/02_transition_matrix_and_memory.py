# %% [markdown]
# # Transition matrix and serial dependence
#
# Count transitions, estimate the maximum-likelihood matrix, and check
# whether the next state depends on the current one (G-test) and whether
# raw percent changes are autocorrelated.

# %%
import numpy as np

from lobmarkov.chainbuilder import count_transitions
from lobmarkov.dtmc import Tpm, estimate_tpm, simulate, stationary
from lobmarkov.independence import acf, g_test
from lobmarkov.synth import planted_tpm

planted = planted_tpm(0.6)
pi = stationary(Tpm(planted)).pi
seq = simulate(planted, pi, 50_000, seed=1)
counts = count_transitions(seq)
tpm = estimate_tpm(counts)
print(np.round(tpm.p, 3))
print("max abs error:", np.abs(tpm.p - planted).max())

# %%
res = g_test(counts.n)
print(f"G={res.g:.1f} df={res.df} p={res.p_value:.2e} reject={res.reject}")

shuffled = np.random.default_rng(0).permutation(seq.states)
print("shuffled:", g_test(count_transitions(shuffled).n).p_value)

# %%
r = acf(seq.states.astype(float), 3)
print([round(v, 4) for v in r.values], "threshold", round(r.threshold, 4))
