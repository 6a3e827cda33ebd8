"""Maximal chains of species subsets and their coarse-graining levels.

A chain 0 < A_1 < ... < A_n = I is stored as the species permutation
(a_1, ..., a_n) with A_k = {a_1, ..., a_k}.  Level k collects the subsets
first covered at step k, and ``level_of[J]`` is the unique such k.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .model import MAX_SPECIES, subset_label, subset_mask


@dataclass(frozen=True)
class Chain:
    perm: tuple[int, ...]
    nested: tuple[int, ...] = field(init=False, compare=False)
    levels: tuple[tuple[int, ...], ...] = field(init=False, compare=False, repr=False)
    level_of: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        perm = tuple(int(a) for a in self.perm)
        n = len(perm)
        if sorted(perm) != list(range(1, n + 1)):
            raise ValueError(f"{perm} is not a permutation of 1..{n}")
        object.__setattr__(self, "perm", perm)
        nested = tuple(subset_mask(perm[:k]) for k in range(1, n + 1))
        object.__setattr__(self, "nested", nested)
        levels = []
        prev = 0
        for A in nested:
            levels.append(tuple(J for J in range(1, A + 1) if J & ~A == 0 and J & ~prev != 0))
            prev = A
        object.__setattr__(self, "levels", tuple(levels))
        object.__setattr__(self, "level_of", {J: k + 1 for k, lev in enumerate(levels) for J in lev})

    @property
    def n(self) -> int:
        return len(self.perm)

    def A(self, k: int) -> int:
        """Nested set A_k as a mask (A_0 is the empty set)."""
        return 0 if k == 0 else self.nested[k - 1]

    def order(self) -> list[int]:
        """All subsets, level by level (increasing mask within a level)."""
        return [J for lev in self.levels for J in lev]

    def label(self) -> str:
        return "<".join(str(a) for a in self.perm)

    def describe(self) -> str:
        parts = [
            f"T{k + 1}={{" + ",".join("{" + subset_label(J) + "}" for J in lev) + "}"
            for k, lev in enumerate(self.levels)
        ]
        return f"{self.label()}  " + " ".join(parts)


def enumerate_chains(n: int) -> list[Chain]:
    """All n! maximal chains, lexicographic in the permutation."""
    if not 1 <= n <= MAX_SPECIES:
        raise ValueError(f"n must be in 1..{MAX_SPECIES}")
    return [Chain(p) for p in itertools.permutations(range(1, n + 1))]


def level_sets(chain: Chain):
    return chain.levels, dict(chain.level_of)


def swap_chain(chain: Chain, J: int) -> Chain:
    """Chain whose first |J| steps run through J, agreeing with ``chain`` from level k_J on.

    The species of J come first, then the remaining species of A_{k_J}, both
    in the order in which ``chain`` visits them, then the original tail.
    """
    k = chain.level_of[J]
    top = chain.A(k)
    if J & ~top:
        raise AssertionError("J must be contained in A_{k_J}")
    head = chain.perm[:k]
    js = [s for s in head if J >> (s - 1) & 1]
    rest = [s for s in head if not J >> (s - 1) & 1]
    return Chain(tuple(js + rest) + chain.perm[k:])
