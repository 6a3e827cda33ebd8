"""Relative entropies of joint measures and the per-subset entropy caps.

Coordinate sets are collections of subset masks.  Marginal tensors keep one
axis per named coordinate, in increasing mask order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .model import (
    JointMeasure,
    ModelSpec,
    all_subsets,
    n_coords,
    powerset_masks,
    product_measure,
    subset_label,
    subset_size,
)

LOG2 = float(np.log(2.0))
CONSTRAINT_TOL = 1e-8


def _coords(coords: Iterable[int], n: int) -> list[int]:
    cs = sorted(set(int(c) for c in coords))
    if not cs:
        raise ValueError("empty coordinate set")
    if cs[0] < 1 or cs[-1] >= 2**n:
        raise ValueError(f"coordinates {cs} are not subsets of the {n} species")
    return cs


def marginal(nu: JointMeasure, coords: Iterable[int]) -> np.ndarray:
    """Marginal of ``nu`` on the given subset coordinates (one axis each)."""
    cs = _coords(coords, nu.n)
    drop = tuple(c for c in range(n_coords(nu.n)) if c + 1 not in cs)
    return nu.tensor.sum(axis=drop) if drop else nu.tensor.copy()


def rel_entropy(nu, ref) -> float:
    """H(nu | ref) with 0 log 0 = 0 and +inf off the support of ``ref``."""
    p = np.asarray(getattr(nu, "weights", nu), dtype=float)
    q = np.asarray(getattr(ref, "weights", ref), dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    pos = p > 0
    if np.any(q[pos] <= 0):
        return float("inf")
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))


def _semidirect_reference(nu: JointMeasure, B: list[int], mu: JointMeasure) -> np.ndarray:
    """The tensor nu^(B) (x) mu^(B^c) in canonical axis order."""
    d = n_coords(nu.n)
    Bc = [c for c in range(1, d + 1) if c not in B]
    S = nu.alphabet_size
    nuB = marginal(nu, B)
    muBc = marginal(mu, Bc)
    shape_b = [S if c in B else 1 for c in range(1, d + 1)]
    shape_c = [S if c in Bc else 1 for c in range(1, d + 1)]
    return nuB.reshape(shape_b) * muBc.reshape(shape_c)


def chain_rule_terms(nu: JointMeasure, B: Iterable[int], mu: JointMeasure) -> tuple[float, float]:
    """(H(nu^(B) | mu^(B)), H(nu | nu^(B) (x) mu^(B^c))) for a product ``mu``."""
    cs = _coords(B, nu.n)
    first = rel_entropy(marginal(nu, cs), marginal(mu, cs))
    if len(cs) == n_coords(nu.n):
        return first, 0.0
    return first, rel_entropy(nu.tensor, _semidirect_reference(nu, cs, mu))


def subset_entropy(nu: JointMeasure, J: int, mu: JointMeasure) -> float:
    """H(nu^(P_J) | mu^(P_J)) where P_J are the nonempty subsets of J."""
    cs = powerset_masks(J)
    return rel_entropy(marginal(nu, cs), marginal(mu, cs))


def entropy_cap(J: int, n: int) -> float:
    return subset_size(J) / n * LOG2


@dataclass
class ConstraintEntry:
    subset: int
    value: float
    cap: float

    @property
    def slack(self) -> float:
        return self.cap - self.value

    def as_dict(self) -> dict:
        return {"subset": subset_label(self.subset), "value": self.value, "cap": self.cap, "slack": self.slack}


@dataclass
class ConstraintReport:
    entries: list[ConstraintEntry]
    tol: float = CONSTRAINT_TOL

    @property
    def feasible(self) -> bool:
        return all(e.slack >= -self.tol for e in self.entries)

    @property
    def min_slack(self) -> float:
        return min(e.slack for e in self.entries)

    def slack(self, J: int) -> float:
        return next(e.slack for e in self.entries if e.subset == J)

    def as_dict(self) -> dict:
        return {"feasible": self.feasible, "tol": self.tol, "entries": [e.as_dict() for e in self.entries]}


def check_constraints(nu: JointMeasure, spec: ModelSpec, subsets: Iterable[int] | None = None,
                      tol: float = CONSTRAINT_TOL) -> ConstraintReport:
    """Evaluate every cap H(nu^(P_J) | mu^(P_J)) <= (|J|/n) log 2."""
    mu = product_measure(spec)
    Js = all_subsets(spec.n) if subsets is None else list(subsets)
    entries = [ConstraintEntry(J, subset_entropy(nu, J, mu), entropy_cap(J, spec.n)) for J in Js]
    return ConstraintReport(entries, tol)


def total_variation(p, q) -> float:
    p = np.asarray(getattr(p, "weights", p), dtype=float).reshape(-1)
    q = np.asarray(getattr(q, "weights", q), dtype=float).reshape(-1)
    return 0.5 * float(np.abs(p - q).sum())


def pair_rate(nu: JointMeasure, theta: JointMeasure, A: int, spec: ModelSpec) -> float:
    """Joint rate of two empirical measures whose configurations share the species in A."""
    if nu.weights.shape != theta.weights.shape:
        raise ValueError("shape mismatch")
    if A < 1 or A >= 2**spec.n:
        raise ValueError("A must be a nonempty subset of the species")
    cs = powerset_masks(A)
    if total_variation(marginal(nu, cs), marginal(theta, cs)) > 1e-10:
        return float("inf")
    mu = product_measure(spec)
    head, tail_nu = chain_rule_terms(nu, cs, mu)
    _, tail_theta = chain_rule_terms(theta, cs, mu)
    return head + tail_nu + tail_theta
