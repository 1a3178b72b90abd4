# %% [markdown]
# # Interval-noncrossing partitions
#
# A type map over {F, B} decides which noncrossing partitions survive: a B
# position sitting strictly inside a block has to join it.  The interior B
# positions cut the ground set into overlapping segments, and the lattice is
# the product of the noncrossing lattices of those segments.

# %%
from math import comb, prod

from freeboolean import Partition, enumerate_inc, inc_context, is_inc, moebius_matrix, moebius_product

chi = "FBFFFBB"
ctx = inc_context(chi)
elems = enumerate_inc(chi)
print(f"chi = {chi}: {len(elems)} partitions, segments {ctx.segments}")

catalan = lambda k: comb(2 * k, k) // (k + 1)
print("product of segment Catalan numbers:", prod(catalan(hi - lo + 1) for lo, hi in ctx.segments))

# %% [markdown]
# The B at position 2 is nested inside {1, 3}, so it must join that block.

# %%
for text in ("1,3/2", "1,2,3"):
    print(text, "allowed" if is_inc(Partition.from_string(text), "FBF") else "rejected")

# %% [markdown]
# ## Moebius function
#
# Inverting zeta over the whole lattice and multiplying noncrossing Moebius
# values segment by segment give the same integers.

# %%
chi = "FFF"
elems = enumerate_inc(chi)
mu = moebius_matrix(chi)
for a, s in enumerate(elems):
    for b, p in enumerate(elems):
        if mu[a, b]:
            assert moebius_product(s, p, chi) == mu[a, b]
            print(f"mu({s}, {p}) = {mu[a, b]}")
