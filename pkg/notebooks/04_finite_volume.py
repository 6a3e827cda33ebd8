# Exact finite-N free energies and counts from reproducible disorder.

import math

import numpy as np

from gremlab import (
    count_in_ball,
    enumerate_chains,
    free_energy_chain,
    free_energy_exact,
    minimize_parisi,
    solve_gibbs,
)
from gremlab.model import load_model, product_measure

rem = load_model("notebooks/models/rem.json")
g = solve_gibbs(rem).value
print("REM limit g =", g)

# symbols are regenerated from (seed, subset, spin, sample), so nothing is stored
for N in (8, 12, 16):
    F = [free_energy_exact(rem, N, seed).F_N for seed in range(5)]
    print("N =", N, " mean F_N =", np.mean(F), " gap =", abs(np.mean(F) - g))

# coarse-grained chain models: in the limit each one bounds the exact model from above
# (here both chain limits coincide with g); at small N the seed noise is larger than
# the gap between them
spec = load_model("notebooks/models/pair.json")
print("pair model: g =", solve_gibbs(spec).value)
print("  exact  ", np.mean([free_energy_exact(spec, 10, s).F_N for s in range(5)]))
for c in enumerate_chains(2):
    print("  chain", c.label(), "limit", minimize_parisi(spec, c).value - math.log(2),
          "N=10 mean", np.mean([free_energy_chain(spec, c, 10, s).F_N for s in range(5)]))

# most configurations have empirical measures close to mu
M = count_in_ball(rem, 14, 0, product_measure(rem), 0.2)
print("count in the 0.2 ball:", M, " growth", math.log(M) / 14, "vs log 2", math.log(2))
