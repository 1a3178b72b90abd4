# %% [markdown]
# # Positivity of E[ZZ*]
#
# Canonical words, the Boolean-run reductions, and the smallest eigenvalue of
# E[ZZ*] for random elements generated by self-adjoint face operators.

# %%
import numpy as np

from freeboolean import build_model, random_family
from freeboolean.experiments.moments import random_canonical
from freeboolean.experiments.positivity import positivity_check, psi

family = random_family(build_model(2, [1, 1, 1], 6), seed=7, self_adjoint=True)
model = family.model
rng = np.random.default_rng(0)

# %% [markdown]
# A Zbf word with a run of two Boolean factors collapses to one.

# %%
w = random_canonical(family, "Zbf", rng, [2, 1])
print(w.describe(), "->", psi(model, w).describe())

# %%
res = positivity_check(family, trials=30, seed=7)
for name, rep in res.reports().items():
    print(f"{name:28s} {rep.max_residual:.1e} {rep.details or ''}")
