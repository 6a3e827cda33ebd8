"""Generalized Gibbs measure of a chain: first-level law, kernels, flattening."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import Chain
from .entropy import ConstraintReport, check_constraints
from .model import JointMeasure, ModelSpec, n_coords
from .parisi import PhiStack, chain_axes, level_kernels, phi_stack


@dataclass
class GibbsStructure:
    chain: Chain
    m: np.ndarray
    gamma: np.ndarray
    kernels: list[np.ndarray]  # kernels[j - 2] for level j = 2..n, rows = sources
    level_marginals: list[np.ndarray]  # level_marginals[j - 1] is G_j over chain coords of levels 1..j
    stack: PhiStack
    alphabet_size: int

    @property
    def n(self) -> int:
        return self.chain.n

    def kernel(self, j: int) -> np.ndarray:
        return self.gamma[None, :] if j == 1 else self.kernels[j - 2]


def build_gibbs(spec: ModelSpec, chain: Chain, m) -> GibbsStructure:
    stack = phi_stack(spec, chain, m)
    Ks = [np.exp(lk) for lk in level_kernels(stack)]
    margs = []
    prev = np.ones(1)
    for K in Ks:
        prev = (prev[:, None] * K).reshape(-1)
        margs.append(prev)
    return GibbsStructure(chain, stack.m, Ks[0][0], Ks[1:], margs, stack, spec.alphabet_size)


def flatten(gs: GibbsStructure) -> JointMeasure:
    """Re-index the top-level marginal back to canonical coordinate order."""
    S, d = gs.alphabet_size, n_coords(gs.n)
    top = gs.level_marginals[-1].reshape((S,) * d)
    canonical = np.transpose(top, np.argsort(chain_axes(gs.chain)))
    return JointMeasure.from_tensor(gs.n, S, canonical)


def audit_constraints(gs: GibbsStructure, spec: ModelSpec, tol: float = 1e-8) -> ConstraintReport:
    """All subset caps evaluated on the flattened Gibbs measure."""
    return check_constraints(flatten(gs), spec, tol=tol)


def chain_audit(gs: GibbsStructure, spec: ModelSpec, tol: float = 1e-8) -> ConstraintReport:
    """Caps restricted to the chain's own nested sets A_1, ..., A_n."""
    return check_constraints(flatten(gs), spec, subsets=gs.chain.nested, tol=tol)
