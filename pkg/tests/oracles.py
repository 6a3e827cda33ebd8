"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical routines; each oracle
recomputes its quantity from the model data by a different route.
"""

import itertools
import math

import numpy as np

LOG2 = math.log(2)
FLOOR = 1e-6


def mu_tensor(spec):
    """Product base law as a full tensor, built axis by axis with broadcasting."""
    d = 2**spec.n - 1
    t = np.ones((1,) * d)
    for c in range(d):
        shape = [1] * d
        shape[c] = spec.alphabet_size
        t = t * np.asarray(spec.mu[c + 1]).reshape(shape)
    return t


def parisi_full(spec, perm, m):
    """(P, flattened Gibbs tensor) by a recursion on the full canonical tensor.

    phi_{k-1} is kept as a full tensor (constant along summed-out axes), so no
    re-indexing into chain order is needed.
    """
    n, S = spec.n, spec.alphabet_size
    d = 2**n - 1
    mu = mu_tensor(spec)
    phi = spec.phi_table_.reshape((S,) * d)
    # subsets first covered at step k of the chain
    A = [sum(1 << (s - 1) for s in perm[:k]) for k in range(n + 1)]
    level_axes = [[J - 1 for J in range(1, 2**n) if J & ~A[k] == 0 and J & ~A[k - 1]] for k in range(1, n + 1)]
    laws = []
    for axes in level_axes:
        keep = [c for c in range(d) if c not in axes]
        laws.append(mu.sum(axis=tuple(keep), keepdims=True) if keep else mu)
    phis = [None] * (n + 1)
    phis[n] = phi
    for k in range(n, 0, -1):
        mk = m[k - 1]
        inner = (np.exp(mk * phis[k]) * laws[k - 1]).sum(axis=tuple(level_axes[k - 1]), keepdims=True)
        phis[k - 1] = np.log(inner) / mk
    value = LOG2 / n * sum(1 / x for x in m) + float(phis[0].reshape(-1)[0])
    dens = np.ones_like(phi)
    for k in range(1, n + 1):
        dens = dens * np.exp(m[k - 1] * (phis[k] - phis[k - 1]))
    return value, (dens * mu).reshape(-1)


def isotonic_box(v, lo=FLOOR, hi=1.0):
    """Projection onto {lo <= x_1 <= ... <= x_n <= hi} by trying every contiguous block partition."""
    v = np.asarray(v, dtype=float)
    n = len(v)
    best, best_d = None, math.inf
    for cuts in itertools.product([0, 1], repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        x = np.concatenate([np.full(b - a, min(max(v[a:b].mean(), lo), hi)) for a, b in zip(bounds, bounds[1:])])
        if np.all(np.diff(x) >= 0):
            dist = float(np.sum((x - v) ** 2))
            if dist < best_d:
                best, best_d = x, dist
    return best


def p2_grid(spec, perm, m1, m2):
    """P for n = 2 on 1-D arrays m1, m2 (closed form of the two-level recursion)."""
    a, b = perm
    S = spec.alphabet_size
    phi = spec.phi_table_.reshape(S, S, S)  # axes {1}, {2}, {1,2}
    if a == 2:
        phi = phi.transpose(1, 0, 2)  # first axis is now the level-1 species
    first = np.asarray(spec.mu[1 << (a - 1)])
    rest = (np.asarray(spec.mu[1 << (b - 1)])[:, None] * np.asarray(spec.mu[3])[None, :]).reshape(-1)
    m1 = np.asarray(m1, float)[:, None]
    m2 = np.asarray(m2, float)[:, None]
    e = m2[:, :, None] * phi.reshape(S, S * S)[None]  # (grid, x, (y, z))
    top = e.max(axis=2)
    logI = top + np.log((np.exp(e - top[:, :, None]) * rest).sum(axis=2))
    z = (m1 / m2) * logI
    zt = z.max(axis=1, keepdims=True)
    phi0 = (zt + np.log((np.exp(z - zt) * first).sum(axis=1, keepdims=True))) / m1
    return (LOG2 / 2 * (1 / m1 + 1 / m2) + phi0)[:, 0]


def grid_min_n2(spec, perm, step=1e-3, fine=1e-5, window=2e-3):
    """Dense scan of the ordered box followed by a finer scan around the best point."""
    g = np.arange(1, round(1 / step) + 1) * step
    best = (math.inf, None)
    for i, x in enumerate(g):
        ys = g[i:]
        vals = p2_grid(spec, perm, np.full(ys.size, x), ys)
        j = int(np.argmin(vals))
        if vals[j] < best[0]:
            best = (float(vals[j]), (x, ys[j]))
    x0, y0 = best[1]
    xs = np.clip(np.arange(x0 - window, x0 + window + fine / 2, fine), FLOOR, 1.0)
    ys = np.clip(np.arange(y0 - window, y0 + window + fine / 2, fine), FLOOR, 1.0)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    ok = X <= Y
    vals = p2_grid(spec, perm, X[ok], Y[ok])
    j = int(np.argmin(vals))
    return min(best[0], float(vals[j])), (float(X[ok][j]), float(Y[ok][j]))


def grid_min_n1(spec, step=1e-5):
    ms = np.linspace(FLOOR, 1.0, round(1 / step) + 1)
    S = spec.alphabet_size
    mu = np.asarray(spec.mu[1])
    phi = spec.phi_table_
    vals = LOG2 / ms + np.log((mu[None, :] * np.exp(ms[:, None] * phi[None, :])).sum(axis=1)) / ms
    assert S == mu.size
    j = int(np.argmin(vals))
    return float(vals[j]), float(ms[j])
