# %% [markdown]
# # Central limit behaviour
#
# Normalised sums of N identically distributed free-Boolean summands: the
# covariance stays put and higher cumulants decay like N^(1 - n/2).

# %%
from freeboolean.experiments import CltConfig, clt_run

result = clt_run(CltConfig(d=2, pairs=1, Ns=(1, 4, 16, 64), seed=0))
for name, rep in result.reports.items():
    print(f"{name:18s} residual {rep.max_residual:.1e}  passed={rep.passed}")

# %%
print(result.csv())
