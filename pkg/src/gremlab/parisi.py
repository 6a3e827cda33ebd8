"""Chain-wise Parisi functional: recursion, value, gradient and minimisation.

For a chain with levels T_1, ..., T_n the functions phi_k are tabulated on
the coordinates of T_1 u ... u T_k, laid out level by level (the chain
order of :meth:`Chain.order`), and

    phi_{k-1}(x) = (1/m_k) log sum_y exp(m_k phi_k(x, y)) mu^(T_k)(y)

with y ranging over the T_k block.  The functional is
P(m) = (log 2 / n) sum_k 1/m_k + phi_0(m).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .chains import Chain, enumerate_chains
from .model import ModelSpec, n_coords

LOG2 = float(np.log(2.0))
M_FLOOR = 1e-6


@dataclass
class PhiStack:
    chain: Chain
    m: np.ndarray
    tables: list[np.ndarray]  # tables[k] is phi_k, flat over S^(2^k - 1)
    level_laws: list[np.ndarray]  # level_laws[k - 1] is mu^(T_k), flat over S^(2^(k-1))

    @property
    def phi0(self) -> float:
        return float(self.tables[0][0])


def clamp_m(m) -> np.ndarray:
    return np.clip(np.asarray(m, dtype=float), M_FLOOR, 1.0)


def chain_axes(chain: Chain) -> list[int]:
    """Canonical tensor axis of each chain-ordered coordinate."""
    return [J - 1 for J in chain.order()]


def level_law(spec: ModelSpec, level: tuple[int, ...]) -> np.ndarray:
    w = np.ones(1)
    for J in level:
        w = np.multiply.outer(w, spec.mu[J]).reshape(-1)
    return w


def phi_stack(spec: ModelSpec, chain: Chain, m) -> PhiStack:
    m = clamp_m(m)
    n, S = spec.n, spec.alphabet_size
    if chain.n != n or m.shape != (n,):
        raise ValueError("chain and m must match the number of species")
    top = spec.phi_table_.reshape((S,) * n_coords(n)).transpose(chain_axes(chain)).reshape(-1)
    laws = [level_law(spec, lev) for lev in chain.levels]
    tables = [None] * (n + 1)
    tables[n] = top
    for k in range(n, 0, -1):
        block = laws[k - 1].size
        phik = tables[k].reshape(-1, block)
        tables[k - 1] = logsumexp(m[k - 1] * phik, b=laws[k - 1], axis=1) / m[k - 1]
    return PhiStack(chain, m, tables, laws)


def parisi_value(spec: ModelSpec, chain: Chain, m) -> float:
    m = clamp_m(m)
    return LOG2 / spec.n * float(np.sum(1.0 / m)) + phi_stack(spec, chain, m).phi0


def level_kernels(stack: PhiStack) -> list[np.ndarray]:
    """Log-kernels log K_k(x, y) = m_k (phi_k(x, y) - phi_{k-1}(x)) + log mu^(T_k)(y).

    Entry ``k - 1`` has shape (S^(2^(k-1) - 1), S^(2^(k-1))); level 1 has a
    single source row and is the first-level law gamma.
    """
    out = []
    for k in range(1, len(stack.tables)):
        law = stack.level_laws[k - 1]
        phik = stack.tables[k].reshape(-1, law.size)
        with np.errstate(divide="ignore"):
            logk = stack.m[k - 1] * (phik - stack.tables[k - 1][:, None]) + np.log(law)[None, :]
        out.append(logk)
    return out


def level_entropies(stack: PhiStack, log_kernels=None) -> np.ndarray:
    """H(G_k | G_{k-1} (x) mu^(T_k)) for k = 1..n."""
    log_kernels = level_kernels(stack) if log_kernels is None else log_kernels
    prev = np.ones(1)
    out = []
    for k, logk in enumerate(log_kernels, start=1):
        K = np.exp(logk)
        law = stack.level_laws[k - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.where(K > 0, logk - np.log(law)[None, :], 0.0)
        out.append(float(prev @ np.sum(K * dens, axis=1)))
        prev = (prev[:, None] * K).reshape(-1)
    return np.array(out)


def parisi_grad(spec: ModelSpec, chain: Chain, m) -> np.ndarray:
    """Analytic gradient d_j P = (H(G_j | G_{j-1} (x) mu^(T_j)) - log 2 / n) / m_j^2."""
    stack = phi_stack(spec, chain, m)
    return (level_entropies(stack) - LOG2 / spec.n) / stack.m**2


def isotonic_projection(v) -> np.ndarray:
    """Euclidean projection onto {M_FLOOR <= m_1 <= ... <= m_n <= 1}.

    Pool adjacent violators for the monotone cone, then clip to the box.
    """
    v = np.asarray(v, dtype=float)
    blocks: list[list[float]] = []  # [mean, size]
    for x in v:
        blocks.append([x, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            (a, na), (b, nb) = blocks[-2], blocks[-1]
            blocks[-2:] = [[(a * na + b * nb) / (na + nb), na + nb]]
    out = np.concatenate([np.full(int(size), mean) for mean, size in blocks])
    return np.clip(out, M_FLOOR, 1.0)


@dataclass
class ParisiPoint:
    chain: Chain
    m: np.ndarray
    value: float
    grad: np.ndarray
    converged: bool = True
    iterations: int = 0
    certified: bool = True
    start_values: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "chain": list(self.chain.perm),
            "m": [float(x) for x in self.m],
            "value": float(self.value),
            "grad": [float(x) for x in self.grad],
            "converged": bool(self.converged),
            "certified": bool(self.certified),
        }


def _descend(f, grad, x, tol, max_iter):
    """Projected gradient with Barzilai-Borwein trial steps and Armijo backtracking."""
    x = isotonic_projection(x)
    fx, g = f(x), grad(x)
    step = 1.0
    for it in range(1, max_iter + 1):
        pg = x - isotonic_projection(x - g)
        if np.linalg.norm(pg) < tol:
            return x, fx, g, True, it
        t = step
        while True:
            x_new = isotonic_projection(x - t * g)
            f_new = f(x_new)
            if f_new <= fx + 1e-4 * g @ (x_new - x) or t < 1e-20:
                break
            t *= 0.5
        g_new = grad(x_new)
        s, yv = x_new - x, g_new - g
        sy = s @ yv
        step = float(np.clip(s @ s / sy, 1e-10, 1e10)) if sy > 0 else min(1.0, 2 * t)
        if np.array_equal(x_new, x):
            pg = x - isotonic_projection(x - g)
            return x, fx, g, bool(np.linalg.norm(pg) < tol), it
        x, fx, g = x_new, f_new, g_new
    return x, fx, g, False, max_iter


def minimize_parisi(spec: ModelSpec, chain: Chain, *, starts: int = 8, tol: float = 1e-9,
                    max_iter: int = 100_000, agree: float = 1e-7, seed=None) -> ParisiPoint:
    """Minimise P over the ordered box, certified by random restarts.

    The first run starts at m = (1, ..., 1); ``starts`` more begin at random
    ordered points drawn from a generator seeded by the chain permutation.
    """
    n = spec.n
    f = lambda m: parisi_value(spec, chain, m)  # noqa: E731
    g = lambda m: parisi_grad(spec, chain, m)  # noqa: E731
    rng = np.random.default_rng(list(chain.perm) if seed is None else seed)
    inits = [np.ones(n)] + [np.sort(rng.uniform(0.05, 1.0, n)) for _ in range(starts)]
    runs = [_descend(f, g, x0, tol, max_iter) for x0 in inits]
    values = [r[1] for r in runs]
    best = min(range(len(runs)), key=lambda i: values[i])
    x, fx, gx, ok, iters = runs[best]
    return ParisiPoint(chain, x, float(fx), gx, converged=ok, iterations=iters,
                       certified=max(values) - min(values) <= agree, start_values=values)


@dataclass
class GlobalParisi:
    best: ParisiPoint
    table: list[ParisiPoint]

    @property
    def value(self) -> float:
        return self.best.value

    @property
    def converged(self) -> bool:
        return all(p.converged for p in self.table)

    def as_dict(self) -> dict:
        return {"value": self.best.value, "best": self.best.as_dict(), "chains": [p.as_dict() for p in self.table]}


def global_parisi_min(spec: ModelSpec, *, tie_tol: float = 1e-12, **kwargs) -> GlobalParisi:
    """Minimum of the Parisi functional over all chains; ties go to the first chain."""
    table = [minimize_parisi(spec, c, **kwargs) for c in enumerate_chains(spec.n)]
    best = table[0]
    for p in table[1:]:
        if p.value < best.value - tie_tol:
            best = p
    return GlobalParisi(best, table)
