"""Exact finite-volume free energies by enumerating all 2^N configurations.

The random symbols are never stored: each one is recomputed from its key
(seed, subset, composite spin index, sample index) by a stateless 64-bit
mixing function, so the same key always yields the same symbol and
different keys give independent draws.  A configuration ``a`` in
[0, 2^N) carries species spins alpha_j = bits (j-1)*b .. j*b - 1 of ``a``,
with b = N / n.

The free energy uses the normalised partition function
Z_N = 2^-N sum_a exp(H_N(a)), so a zero interaction gives F_N = 0.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .chains import Chain
from .model import JointMeasure, ModelSpec, all_subsets, species_of

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(k) for k in (30, 27, 31, 11))

DEFAULT_MAX_N = {1: 24, 2: 24, 3: 18, 4: 16}
CACHE_LIMIT = 2**22  # symbols per subset table kept in memory
CHUNK_ELEMS = 2**20  # configuration-samples per enumeration chunk


class BudgetExceeded(RuntimeError):
    pass


def mix64(z):
    """SplitMix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _absorb(h, x):
    with np.errstate(over="ignore"):
        return mix64(np.asarray(h, dtype=np.uint64) + np.asarray(x, dtype=np.uint64) + _GOLDEN)


def key_uniforms(seed: int, subset: int, alphas, samples) -> np.ndarray:
    """Uniform [0, 1) variates for the keys (seed, subset, alpha, i), shape (len(alphas), len(samples))."""
    h = _absorb(_absorb(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), subset), np.asarray(alphas, dtype=np.uint64))
    h = _absorb(h[:, None], np.asarray(samples, dtype=np.uint64)[None, :])
    return (h >> _S11).astype(np.float64) * (1.0 / 2**53)


def _inverse_cdf(u, law) -> np.ndarray:
    cdf = np.cumsum(np.asarray(law, dtype=float))[:-1]
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


@dataclass(frozen=True)
class DisorderKey:
    seed: int
    subset: int
    alpha: int
    i: int


def draw_symbol(key: DisorderKey, law) -> int:
    u = key_uniforms(key.seed, key.subset, [key.alpha], [key.i])
    return int(_inverse_cdf(u, law)[0, 0])


def draw_symbols(seed: int, subset: int, alphas, N: int, law) -> np.ndarray:
    """Symbol rows X[alpha, 0..N-1] for each composite index in ``alphas``."""
    return _inverse_cdf(key_uniforms(seed, subset, alphas, np.arange(N)), law)


@dataclass
class SimResult:
    N: int
    seed: int
    F_N: float
    chain: tuple | None = None
    wall_time: float = 0.0
    series: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"N": self.N, "seed": self.seed, "chain": list(self.chain) if self.chain else None,
                "F_N": self.F_N, "wall_time": self.wall_time}


def check_budget(spec: ModelSpec, N: int) -> None:
    n = spec.n
    if N <= 0 or N % n:
        raise ValueError(f"N={N} must be a positive multiple of n={n}")
    env = os.environ.get("GREMLAB_BUDGET")
    if env:
        if N * 2**N > float(env):
            raise BudgetExceeded(f"N * 2^N = {N * 2**N} exceeds GREMLAB_BUDGET={env}")
    elif N > DEFAULT_MAX_N[n]:
        raise BudgetExceeded(f"N={N} exceeds the default enumeration budget N <= {DEFAULT_MAX_N[n]} for n={n}")


class _Enumerator:
    """Per-chunk symbol generation shared by the free-energy and counting routines."""

    def __init__(self, spec: ModelSpec, N: int, seed: int, chain: Chain | None = None):
        check_budget(spec, N)
        self.spec, self.N, self.seed = spec, N, seed
        n = spec.n
        self.bits = N // n
        self.key_species = {}
        for J in all_subsets(n):
            K = J if chain is None else chain.A(chain.level_of[J])
            self.key_species[J] = species_of(K)
        self.cache = {}
        for J, ks in self.key_species.items():
            count = 2 ** (self.bits * len(ks))
            if count * N <= CACHE_LIMIT:
                self.cache[J] = draw_symbols(seed, J, np.arange(count), N, spec.mu[J])
        self.chunk = max(1, CHUNK_ELEMS // N)
        self.total = 2**N

    def composite(self, a: np.ndarray, J: int) -> np.ndarray:
        mask = (1 << self.bits) - 1
        out = np.zeros_like(a)
        for rank, s in enumerate(self.key_species[J]):
            out |= ((a >> (self.bits * (s - 1))) & mask) << (self.bits * rank)
        return out

    def flat_symbols(self, start: int, stop: int) -> np.ndarray:
        """Flat coordinate index of X_{a,i}, shape (stop - start, N)."""
        a = np.arange(start, stop, dtype=np.int64)
        S = self.spec.alphabet_size
        idx = np.zeros((stop - start, self.N), dtype=np.int64)
        for J in all_subsets(self.spec.n):
            comp = self.composite(a, J)
            if J in self.cache:
                sym = self.cache[J][comp]
            else:
                sym = draw_symbols(self.seed, J, comp, self.N, self.spec.mu[J])
            idx *= S
            idx += sym
        return idx

    def chunks(self):
        return [(s, min(s + self.chunk, self.total)) for s in range(0, self.total, self.chunk)]


def _run_chunks(fn, chunks, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, chunks))
    return [fn(c) for c in chunks]


def _free_energy(spec, N, seed, chain, threads) -> SimResult:
    t0 = time.perf_counter()
    en = _Enumerator(spec, N, seed, chain)
    phi = spec.phi_table_

    def part(bounds):
        energies = phi[en.flat_symbols(*bounds)].sum(axis=1)
        return float(logsumexp(energies))

    parts = _run_chunks(part, en.chunks(), threads)
    lse = parts[0]
    for p in parts[1:]:  # fixed left-to-right merge
        lse = float(np.logaddexp(lse, p))
    F = (lse - N * math.log(2.0)) / N
    return SimResult(N, seed, F, tuple(chain.perm) if chain else None, time.perf_counter() - t0)


def free_energy_exact(spec: ModelSpec, N: int, seed: int, threads: int = 1) -> SimResult:
    """F_N = (1/N) log(2^-N sum_a exp(sum_i phi(X_{a,i})))."""
    return _free_energy(spec, N, seed, None, threads)


def free_energy_chain(spec: ModelSpec, chain: Chain, N: int, seed: int, threads: int = 1) -> SimResult:
    """Same enumeration for the coarse-grained model of ``chain``.

    The symbol of subset J is keyed by the spins of every species in
    A_{k_J}, so it is resampled independently across the species that the
    chain places at or below J's level.
    """
    return _free_energy(spec, N, seed, chain, threads)


def sweep(spec: ModelSpec, Ns, seed: int, chain: Chain | None = None, threads: int = 1) -> list[SimResult]:
    return [_free_energy(spec, N, seed, chain, threads) for N in Ns]


def empirical_measure(spec: ModelSpec, N: int, seed: int, config: int) -> JointMeasure:
    """L_{N,a} for a single configuration."""
    en = _Enumerator(spec, N, seed)
    idx = en.flat_symbols(config, config + 1)[0]
    counts = np.bincount(idx, minlength=spec.size)
    return JointMeasure(spec.n, spec.alphabet_size, counts / N)


def count_in_ball(spec: ModelSpec, N: int, seed: int, center: JointMeasure, radius: float,
                  threads: int = 1) -> int:
    """Number of configurations whose empirical measure is within TV distance < radius of ``center``."""
    en = _Enumerator(spec, N, seed)
    D = spec.size
    c = np.asarray(center.weights, dtype=float)
    rows = max(1, min(en.chunk, 2**22 // D))
    chunks = [(s, min(s + rows, en.total)) for s in range(0, en.total, rows)]

    def part(bounds):
        idx = en.flat_symbols(*bounds)
        m = idx.shape[0]
        flat = (np.arange(m, dtype=np.int64)[:, None] * D + idx).reshape(-1)
        L = np.bincount(flat, minlength=m * D).reshape(m, D) / N
        tv = 0.5 * np.abs(L - c[None, :]).sum(axis=1)
        return int(np.count_nonzero(tv < radius))

    return int(sum(_run_chunks(part, chunks, threads)))
