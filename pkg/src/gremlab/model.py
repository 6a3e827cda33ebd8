"""Problem instances: species, subsets, alphabet, base laws and the interaction.

Subsets of the species set {1, ..., n} are integer bitmasks (bit j-1 set iff
species j belongs to the subset).  The 2^n - 1 nonempty subsets are ordered
by increasing mask, and every coordinate-indexed object in the package uses
that order: coordinate ``c`` of a joint tensor is the subset with mask
``c + 1``.  Flat indices are C-order mixed radix, first coordinate most
significant, so ``weights.reshape((S,) * d)`` gives one axis per subset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import phi as phi_dsl

MAX_SPECIES = 4
MAX_TENSOR_SIZE = 2**24


class ModelError(ValueError):
    pass


# -- subsets -----------------------------------------------------------------

def n_coords(n: int) -> int:
    return 2**n - 1


def all_subsets(n: int) -> list[int]:
    return list(range(1, 2**n))


def species_of(mask: int) -> list[int]:
    """1-based species in a subset, increasing."""
    return [j + 1 for j in range(mask.bit_length()) if mask >> j & 1]


def subset_mask(species: Sequence[int]) -> int:
    mask = 0
    for s in species:
        mask |= 1 << (s - 1)
    return mask


def subset_size(mask: int) -> int:
    return bin(mask).count("1")


def subset_label(mask: int) -> str:
    return "".join(str(s) for s in species_of(mask))


def parse_subset_label(label: str, n: int) -> int:
    digits = [int(c) for c in str(label)]
    if not digits or any(b <= a for a, b in zip(digits, digits[1:])) or digits[0] < 1 or digits[-1] > n:
        raise ModelError(f"bad subset key {label!r} for n={n}")
    return subset_mask(digits)


def powerset_masks(mask: int) -> list[int]:
    """Nonempty subsets of ``mask`` (the coordinates P_J), increasing."""
    return [m for m in range(1, mask + 1) if m & ~mask == 0]


# -- flat indexing ------------------------------------------------------------

def flat_index(symbols: Sequence[int], alphabet_size: int) -> int:
    idx = 0
    for s in symbols:
        s = int(s)
        if not 0 <= s < alphabet_size:
            raise ModelError(f"symbol {s} out of range for alphabet of size {alphabet_size}")
        idx = idx * alphabet_size + s
    return idx


def unflat_index(index: int, n: int, alphabet_size: int) -> tuple[int, ...]:
    d = n_coords(n)
    if not 0 <= index < alphabet_size**d:
        raise ModelError(f"flat index {index} out of range")
    out = []
    for _ in range(d):
        index, s = divmod(index, alphabet_size)
        out.append(s)
    return tuple(reversed(out))


def coordinate_grid(n: int, alphabet_size: int) -> np.ndarray:
    """Array of shape (S^d, d): row i holds the symbols of flat index i."""
    d = n_coords(n)
    return np.indices((alphabet_size,) * d).reshape(d, -1).T


# -- measures -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JointMeasure:
    """Dense probability tensor over S^(2^n - 1) in canonical coordinate order."""

    n: int
    alphabet_size: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.alphabet_size ** n_coords(self.n),):
            raise ModelError(f"weights of shape {w.shape} do not match n={self.n}, |S|={self.alphabet_size}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise ModelError("weights must be nonnegative and sum to 1")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def tensor(self) -> np.ndarray:
        return self.weights.reshape((self.alphabet_size,) * n_coords(self.n))

    @classmethod
    def from_tensor(cls, n: int, alphabet_size: int, tensor: np.ndarray) -> "JointMeasure":
        return cls(n, alphabet_size, np.asarray(tensor, dtype=float).reshape(-1))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    n: int
    alphabet_size: int
    mu: Mapping[int, np.ndarray]
    phi_table_: np.ndarray | None = None
    phi_expr: phi_dsl.PhiExpr | None = None
    alphabet_values: np.ndarray | None = None
    phi_source: str | None = None

    def __post_init__(self):
        n, S = self.n, self.alphabet_size
        if not 1 <= n <= MAX_SPECIES:
            raise ModelError(f"n must be in 1..{MAX_SPECIES}, got {n}")
        if S < 2:
            raise ModelError("alphabet needs at least two symbols")
        if S ** n_coords(n) > MAX_TENSOR_SIZE:
            raise ModelError(f"|S|^(2^n-1) = {S ** n_coords(n)} exceeds the dense-tensor guard 2^24")
        mu = {}
        for J in all_subsets(n):
            if J not in self.mu:
                raise ModelError(f"missing base law for subset {subset_label(J)}")
            p = np.asarray(self.mu[J], dtype=float)
            if p.shape != (S,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                raise ModelError(f"base law for subset {subset_label(J)} is not a probability vector on {S} symbols")
            p = p.copy()
            p.flags.writeable = False
            mu[J] = p
        if set(self.mu) - set(mu):
            raise ModelError("base laws given for subsets outside the power set")
        object.__setattr__(self, "mu", mu)
        values = np.arange(S, dtype=float) if self.alphabet_values is None else np.asarray(self.alphabet_values, float)
        if values.shape != (S,):
            raise ModelError("alphabet_values must have one entry per symbol")
        object.__setattr__(self, "alphabet_values", values)
        if (self.phi_table_ is None) == (self.phi_expr is None):
            raise ModelError("give exactly one of a phi table or a phi expression")
        if self.phi_expr is not None:
            bad = [m for m in phi_dsl.variables(self.phi_expr) if m >= 2**n]
            if bad:
                raise ModelError(
                    "expression references subset(s) outside the power set: "
                    + ", ".join(phi_dsl.Var(m).name for m in bad)
                )
            table = _tabulate(self.phi_expr, n, S, values)
        else:
            table = np.asarray(self.phi_table_, dtype=float).reshape(-1)
            if table.shape != (S ** n_coords(n),):
                raise ModelError(f"phi table must have {S ** n_coords(n)} entries, got {table.size}")
        if not np.all(np.isfinite(table)):
            raise ModelError("phi must be finite everywhere")
        table = table.copy()
        table.flags.writeable = False
        object.__setattr__(self, "phi_table_", table)

    @property
    def n_coords(self) -> int:
        return n_coords(self.n)

    @property
    def size(self) -> int:
        return self.alphabet_size**self.n_coords


def _tabulate(expr, n, S, values) -> np.ndarray:
    grid = coordinate_grid(n, S)
    env = {J: values[grid[:, J - 1]] for J in all_subsets(n)}
    out = phi_dsl.evaluate(expr, env)
    return np.broadcast_to(np.asarray(out, dtype=float), (grid.shape[0],)).copy()


def phi_table(spec: ModelSpec) -> np.ndarray:
    """Interaction function as a dense table in flat-index order."""
    return spec.phi_table_


def product_measure(spec: ModelSpec) -> JointMeasure:
    """The reference law mu = product of the base laws over all subsets."""
    w = np.ones(1)
    for J in all_subsets(spec.n):
        w = np.multiply.outer(w, spec.mu[J]).reshape(-1)
    return JointMeasure(spec.n, spec.alphabet_size, w)


def make_spec(n, mu, phi=None, *, expr=None, alphabet_size=None, alphabet_values=None) -> ModelSpec:
    """Convenience constructor.

    ``mu`` maps subset masks (or labels like ``"12"``) to probability vectors;
    a single vector is used for every subset.  ``phi`` is a table, ``expr`` an
    expression string.
    """
    if isinstance(mu, Mapping):
        mu = {(parse_subset_label(k, n) if isinstance(k, str) else int(k)): v for k, v in mu.items()}
    else:
        mu = {J: mu for J in all_subsets(n)}
    if alphabet_size is None:
        alphabet_size = len(next(iter(mu.values())))
    parsed = phi_dsl.parse(expr) if expr is not None else None
    return ModelSpec(n, alphabet_size, mu, phi_table_=phi, phi_expr=parsed,
                     alphabet_values=alphabet_values, phi_source=expr)


def spec_from_dict(data: Mapping) -> ModelSpec:
    n = int(data["n"])
    S = int(data["alphabet_size"])
    mu_raw = data["mu"]
    mu = {parse_subset_label(k, n): np.asarray(v, float) for k, v in mu_raw.items()}
    phi = data["phi"]
    if "expr" in phi and "table" in phi:
        raise ModelError("phi must carry either 'expr' or 'table', not both")
    if "expr" in phi:
        return ModelSpec(n, S, mu, phi_expr=phi_dsl.parse(phi["expr"]),
                         alphabet_values=data.get("alphabet_values"), phi_source=phi["expr"])
    if "table" in phi:
        return ModelSpec(n, S, mu, phi_table_=np.asarray(phi["table"], float),
                         alphabet_values=data.get("alphabet_values"))
    raise ModelError("phi must carry 'expr' or 'table'")


def spec_to_dict(spec: ModelSpec) -> dict:
    out = {
        "n": spec.n,
        "alphabet_size": spec.alphabet_size,
        "alphabet_values": [float(v) for v in spec.alphabet_values],
        "mu": {subset_label(J): [float(p) for p in spec.mu[J]] for J in all_subsets(spec.n)},
    }
    if spec.phi_expr is not None:
        out["phi"] = {"expr": spec.phi_source or phi_dsl.to_text(spec.phi_expr)}
    else:
        out["phi"] = {"table": [float(v) for v in spec.phi_table_]}
    return out


def load_model(path) -> ModelSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def random_spec(rng: np.random.Generator, n: int = 2, alphabet_size: int = 2, phi_scale: float = 2.0) -> ModelSpec:
    """Random instance: Dirichlet(1, ..., 1) base laws, phi uniform in [-scale, scale]."""
    mu = {J: rng.dirichlet(np.ones(alphabet_size)) for J in all_subsets(n)}
    table = rng.uniform(-phi_scale, phi_scale, size=alphabet_size ** n_coords(n))
    return ModelSpec(n, alphabet_size, mu, phi_table_=table)
