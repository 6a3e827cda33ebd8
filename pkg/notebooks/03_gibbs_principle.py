# The entropy-constrained Gibbs principle and the Gibbs measure of the best chain.

import math

from gremlab import audit_constraints, build_gibbs, global_parisi_min, solve_gibbs, unconstrained_tilt
from gremlab.entropy import check_constraints
from gremlab.model import load_model

spec = load_model("notebooks/models/active.json")

# the plain exponential tilt breaks the {1} cap for this model
tilt, annealed = unconstrained_tilt(spec)
print("tilt value", annealed)
for e in check_constraints(tilt, spec).entries:
    print("  subset", e.subset, "entropy", round(e.value, 4), "cap", round(e.cap, 4))

# constrained optimum: both {1} and {1,2} end up tight
res = solve_gibbs(spec)
print("g =", res.value, " active caps:", res.as_dict()["active_set"])

# the minimum of the Parisi functional sits exactly log 2 above g
gp = global_parisi_min(spec)
print("p - (g + log 2) =", gp.value - (res.value + math.log(2)))

# the Gibbs measure of the winning chain satisfies every cap
gs = build_gibbs(spec, gp.best.chain, gp.best.m)
print("min slack of the winning chain's measure:", audit_constraints(gs, spec).min_slack)
