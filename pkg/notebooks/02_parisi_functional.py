# The chain-wise Parisi functional and its minimum over all chains.

import numpy as np

from gremlab import Chain, enumerate_chains, global_parisi_min, minimize_parisi, parisi_grad, parisi_value
from gremlab.model import load_model

spec = load_model("notebooks/models/active.json")

# every chain is a species order; level k holds the subsets first covered at step k
for c in enumerate_chains(spec.n):
    print(c.describe())

# value and analytic gradient at an interior point
m = np.array([0.4, 0.8])
for c in enumerate_chains(spec.n):
    print(c.label(), "P =", parisi_value(spec, c, m), " grad =", parisi_grad(spec, c, m))

# each chain is minimised over 0 < m1 <= m2 <= 1 from several starts
for c in enumerate_chains(spec.n):
    p = minimize_parisi(spec, c)
    print(c.label(), "min", p.value, "at", p.m, "grad", p.grad)

# a positive derivative at the optimum forces the parameters before it to coincide
best = global_parisi_min(spec).best
print("best chain", best.chain.label(), "value", best.value)
print("chain (2,1) is degenerate:", minimize_parisi(spec, Chain((2, 1))).m)
