"""Free energies of the nonhierarchical Perceptron GREM on finite alphabets.

The limiting free energy is computed twice, once from the chain-wise Parisi
functional (:mod:`gremlab.parisi`) and once from the entropy-constrained
Gibbs principle (:mod:`gremlab.variational`).  Exact enumeration of finite
systems (:mod:`gremlab.disorder`) supplies an independent check.
"""

from .chains import Chain, enumerate_chains, level_sets, swap_chain
from .disorder import count_in_ball, free_energy_chain, free_energy_exact
from .entropy import chain_rule_terms, check_constraints, marginal, pair_rate, rel_entropy
from .gibbs import audit_constraints, build_gibbs, flatten
from .model import (
    JointMeasure,
    ModelSpec,
    flat_index,
    load_model,
    make_spec,
    phi_table,
    product_measure,
    random_spec,
    unflat_index,
)
from .parisi import global_parisi_min, minimize_parisi, parisi_grad, parisi_value, phi_stack
from .report import emit, run_verify
from .variational import gibbs_objective, solve_gibbs, unconstrained_tilt

__version__ = "0.1.0"

__all__ = [
    "audit_constraints",
    "build_gibbs",
    "Chain",
    "chain_rule_terms",
    "check_constraints",
    "count_in_ball",
    "emit",
    "enumerate_chains",
    "flat_index",
    "flatten",
    "free_energy_chain",
    "free_energy_exact",
    "gibbs_objective",
    "global_parisi_min",
    "JointMeasure",
    "level_sets",
    "load_model",
    "make_spec",
    "marginal",
    "minimize_parisi",
    "ModelSpec",
    "pair_rate",
    "parisi_grad",
    "parisi_value",
    "phi_stack",
    "phi_table",
    "product_measure",
    "random_spec",
    "rel_entropy",
    "run_verify",
    "solve_gibbs",
    "swap_chain",
    "unconstrained_tilt",
    "unflat_index",
]
