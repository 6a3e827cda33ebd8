"""Entropy-constrained Gibbs principle: sup of <phi, nu> - H(nu | mu) over the caps.

The solver works in the entropic (log-weight) coordinates of the simplex,
where iterates stay strictly positive without projection, and handles the
caps H(nu^(P_J) | mu^(P_J)) <= (|J|/n) log 2 with an augmented Lagrangian
outer loop.  :func:`brute_force_gibbs` is an independent random-search
oracle for small instances.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .entropy import CONSTRAINT_TOL, check_constraints, entropy_cap, rel_entropy
from .model import (
    JointMeasure,
    ModelSpec,
    all_subsets,
    coordinate_grid,
    powerset_masks,
    product_measure,
    subset_label,
)

REFRESH_MIX = 1e-2  # weight of mu mixed into a converged iterate before it is re-solved


@dataclass
class GibbsSolveResult:
    nu_star: JointMeasure
    value: float
    active_set: list[int]
    iterations: int
    converged: bool
    certified: bool = True
    restart_values: list = field(default_factory=list, repr=False)
    fast_path: bool = False

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "nu_star": [float(w) for w in self.nu_star.weights],
            "active_set": [subset_label(J) for J in self.active_set],
            "converged": self.converged,
            "certified": self.certified,
            "fast_path": self.fast_path,
            "iterations": self.iterations,
        }


def gibbs_objective(nu: JointMeasure, spec: ModelSpec, tol: float = CONSTRAINT_TOL) -> float:
    """<phi, nu> - H(nu | mu), or -inf when a cap is violated beyond ``tol``."""
    if not check_constraints(nu, spec, tol=tol).feasible:
        return float("-inf")
    return float(spec.phi_table_ @ nu.weights) - rel_entropy(nu, product_measure(spec))


def unconstrained_tilt(spec: ModelSpec) -> tuple[JointMeasure, float]:
    """nu proportional to exp(phi) mu, and its value log E_mu[exp(phi)]."""
    mu = product_measure(spec).weights
    with np.errstate(divide="ignore"):
        logw = spec.phi_table_ + np.log(mu)
    lz = float(logsumexp(logw))
    w = np.exp(logw - lz)
    return JointMeasure(spec.n, spec.alphabet_size, w / w.sum()), lz


class _Problem:
    """Vectorised objective, caps and their gradients on the support of mu."""

    def __init__(self, spec: ModelSpec):
        mu = product_measure(spec).weights
        self.spec = spec
        self.support = np.flatnonzero(mu > 0)
        self.log_mu = np.log(mu[self.support])
        self.phi = spec.phi_table_[self.support]
        grid = coordinate_grid(spec.n, spec.alphabet_size)[self.support]
        S = spec.alphabet_size
        self.subsets = all_subsets(spec.n)
        self.caps = np.array([entropy_cap(J, spec.n) for J in self.subsets])
        self.proj = []
        self.mu_marg = []
        for J in self.subsets:
            cols = [c - 1 for c in powerset_masks(J)]
            idx = np.zeros(len(self.support), dtype=np.int64)
            for c in cols:
                idx = idx * S + grid[:, c]
            size = S ** len(cols)
            self.proj.append((idx, size))
            self.mu_marg.append(np.bincount(idx, weights=np.exp(self.log_mu), minlength=size))

    def nu(self, theta):
        z = theta + self.log_mu
        lognu = z - logsumexp(z)
        return np.exp(lognu), lognu

    def caps_and_grads(self, nu):
        vals, grads = [], []
        for (idx, size), mm in zip(self.proj, self.mu_marg):
            marg = np.bincount(idx, weights=nu, minlength=size)
            pos = marg > 0
            ratio = np.zeros(size)
            ratio[pos] = np.log(marg[pos] / mm[pos])
            vals.append(float(marg[pos] @ ratio[pos]))
            grads.append(ratio[idx] + 1.0)
        return np.array(vals) - self.caps, grads

    def objective(self, nu, lognu):
        return float(self.phi @ nu - nu @ (lognu - self.log_mu))

    def full(self, nu) -> JointMeasure:
        w = np.zeros(self.spec.size)
        w[self.support] = nu
        return JointMeasure(self.spec.n, self.spec.alphabet_size, w / w.sum())


def _augmented_lagrangian(prob: _Problem, theta0, rho, inner_tol, outer_tol, max_outer, lam0=None):
    lam = np.zeros(len(prob.subsets)) if lam0 is None else lam0.copy()
    theta = theta0.copy()
    total = 0

    def al(th):
        nu, lognu = prob.nu(th)
        g, gg = prob.caps_and_grads(nu)
        shifted = np.maximum(0.0, lam + rho * g)
        val = -prob.objective(nu, lognu) + (shifted @ shifted - lam @ lam) / (2 * rho)
        dnu = -(prob.phi - (lognu - prob.log_mu) - 1.0)
        for w, gj in zip(shifted, gg):
            if w > 0:
                dnu = dnu + w * gj
        return val, nu * (dnu - nu @ dnu)

    converged = False
    for _ in range(max_outer):
        res = minimize(al, theta, jac=True, method="L-BFGS-B",
                       options={"ftol": inner_tol, "gtol": 1e-12, "maxiter": 20_000, "maxcor": 30})
        theta = res.x
        total += res.nit
        nu, _ = prob.nu(theta)
        g, _ = prob.caps_and_grads(nu)
        new_lam = np.maximum(0.0, lam + rho * g)
        step = np.max(np.abs(new_lam - lam))
        lam = new_lam
        if np.max(g) < outer_tol and step < outer_tol * rho:
            converged = True
            break
    nu, lognu = prob.nu(theta)
    return nu, prob.objective(nu, lognu), lam, total, converged


def solve_gibbs(spec: ModelSpec, *, rho: float = 10.0, restarts: int = 16, seed: int = 0,
                inner_tol: float = 1e-13, outer_tol: float = 1e-8, max_outer: int = 500,
                agree: float = 1e-6, workers: int = 1, refreshes: int = 3) -> GibbsSolveResult:
    """Maximise <phi, nu> - H(nu | mu) subject to every subset cap.

    Returns the exponential tilt directly when it already satisfies the caps.
    Otherwise runs ``restarts`` augmented-Lagrangian solves (the first from
    mu itself, the rest from random log-weight perturbations seeded by
    ``seed``) and keeps the best value among feasible end points.
    """
    tilt, tilt_value = unconstrained_tilt(spec)
    report = check_constraints(tilt, spec, tol=0.0)
    if report.feasible:
        active = [e.subset for e in report.entries if e.slack < 1e-9]
        return GibbsSolveResult(tilt, tilt_value, active, 0, True, True, [tilt_value], fast_path=True)

    prob = _Problem(spec)
    rngs = np.random.default_rng(seed).spawn(max(restarts - 1, 0))
    starts = [np.zeros(len(prob.support))] + [r.normal(size=len(prob.support)) for r in rngs]

    def run(theta0):
        out = _augmented_lagrangian(prob, theta0, rho, inner_tol, outer_tol, max_outer)
        # Atoms driven near zero have vanishing log-weight gradients and can
        # stall the inner solver; lift them by mixing in mu and resume.
        for _ in range(refreshes):
            mixed = (1 - REFRESH_MIX) * out[0] + REFRESH_MIX * np.exp(prob.log_mu)
            again = _augmented_lagrangian(prob, np.log(mixed) - prob.log_mu, rho, inner_tol,
                                          outer_tol, max_outer, lam0=out[2])
            if not (again[1] > out[1] + 1e-13 and np.max(prob.caps_and_grads(again[0])[0]) < 1e-6):
                break
            out = (again[0], again[1], again[2], out[3] + again[3], again[4])
        return out

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(run, starts))
    else:
        runs = [run(t) for t in starts]

    values = [r[1] for r in runs]
    feasible = [i for i, r in enumerate(runs) if np.max(prob.caps_and_grads(r[0])[0]) < 1e-6]
    pool = feasible or list(range(len(runs)))
    best = max(pool, key=lambda i: values[i])
    nu, value, lam, iters, ok = runs[best]
    nu_star = prob.full(nu)
    slack = -prob.caps_and_grads(nu)[0]
    active = [J for J, s, l in zip(prob.subsets, slack, lam) if s < 1e-6 and l > 0]
    spread = max(values[i] for i in pool) - min(values[i] for i in pool)
    return GibbsSolveResult(nu_star, float(value), active, iters, bool(ok and feasible),
                            spread <= agree, values)


# -- brute-force oracle ------------------------------------------------------

def _batch_eval(spec: ModelSpec, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained objective of each row of W and whether the row meets every cap."""
    S, n = spec.alphabet_size, spec.n
    d = 2**n - 1
    mu = product_measure(spec).tensor
    T = W.reshape((W.shape[0],) + (S,) * d)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(T > 0, T * np.log(T / mu), 0.0)
        val = W @ spec.phi_table_ - terms.reshape(W.shape[0], -1).sum(axis=1)
        ok = np.ones(W.shape[0], dtype=bool)
        for J in all_subsets(n):
            keep = [c - 1 for c in powerset_masks(J)]
            drop = tuple(1 + c for c in range(d) if c not in keep)
            mdrop = tuple(c for c in range(d) if c not in keep)
            m = T.sum(axis=drop) if drop else T
            mm = mu.sum(axis=mdrop) if mdrop else mu
            h = np.where(m > 0, m * np.log(m / mm), 0.0).reshape(W.shape[0], -1).sum(axis=1)
            ok &= h <= entropy_cap(J, n)
    return val, ok


def _repair(spec: ModelSpec, W: np.ndarray, mu: np.ndarray, steps: int = 40) -> np.ndarray:
    """Pull each row toward mu (always feasible) to the last feasible point by bisection."""
    lo = np.zeros(len(W))
    hi = np.ones(len(W))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        _, ok = _batch_eval(spec, mu + mid[:, None] * (W - mu))
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return mu + lo[:, None] * (W - mu)


def brute_force_gibbs(spec: ModelSpec, *, samples: int = 10**6, seed: int = 0, rounds: int = 200,
                      batch: int = 4000, chunk: int = 100_000, repair: int = 64,
                      polish: bool = True) -> tuple[float, JointMeasure]:
    """Random-search estimate of the constrained supremum.

    Dirichlet(1, ..., 1) samples over the simplex, then local refinement:
    batches of Dirichlet proposals concentrated at the incumbent plus pairwise
    mass transfers, with the concentration adapted to the success rate.
    Promising infeasible proposals are pulled back toward mu until they meet
    the caps.  A final COBYLA pass polishes the incumbent.  Nothing here uses
    derivatives of the objective or the caps.
    """
    rng = np.random.default_rng(seed)
    D = spec.size
    mu = product_measure(spec).weights
    best_v, best_w = float(_batch_eval(spec, mu[None])[0][0]), mu.copy()
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        W = rng.dirichlet(np.ones(D), size=k)
        val, ok = _batch_eval(spec, W)
        v = np.where(ok, val, -np.inf)
        i = int(np.argmax(v))
        if v[i] > best_v:
            best_v, best_w = float(v[i]), W[i].copy()
        done += k

    conc = 100.0
    pairs = [(i, j) for i in range(D) for j in range(D) if i != j]
    step = 0.1
    for _ in range(rounds):
        floor = np.maximum(best_w, 1e-300)
        props = rng.dirichlet(conc * floor / floor.sum() + 1e-12, size=batch)
        moves = []
        for i, j in pairs:
            w = best_w.copy()
            amt = step * best_w[i]
            w[i] -= amt
            w[j] += amt
            moves.append(w)
        cand = np.vstack([props, np.array(moves)])
        val, ok = _batch_eval(spec, cand)
        bad = np.flatnonzero(~ok & (val > best_v))
        if repair and bad.size:
            top = bad[np.argsort(val[bad])[-repair:]]
            fixed = _repair(spec, cand[top], mu)
            fval, fok = _batch_eval(spec, fixed)
            cand = np.vstack([cand, fixed])
            val = np.concatenate([val, fval])
            ok = np.concatenate([ok, fok])
        v = np.where(ok, val, -np.inf)
        i = int(np.argmax(v))
        if v[i] > best_v:
            best_v, best_w = float(v[i]), cand[i].copy()
            conc = max(conc * 0.5, 100.0)
            step = min(step * 2.0, 0.1)
        else:
            conc *= 2.0
            step *= 0.5
    if polish:
        best_v, best_w = _cobyla_polish(spec, best_v, best_w)
    return best_v, JointMeasure(spec.n, spec.alphabet_size, best_w / best_w.sum())


def _cobyla_polish(spec: ModelSpec, best_v: float, best_w: np.ndarray):
    from scipy.optimize import minimize as _minimize

    mu = product_measure(spec).tensor
    d = 2**spec.n - 1
    S = spec.alphabet_size
    caps = []
    for J in all_subsets(spec.n):
        keep = [c - 1 for c in powerset_masks(J)]
        drop = tuple(c for c in range(d) if c not in keep)
        caps.append((drop, mu.sum(axis=drop) if drop else mu, entropy_cap(J, spec.n)))

    def unpack(x):
        w = np.append(x, 1.0 - x.sum())
        return w

    def ent(p, q):
        pos = p > 0
        return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))

    def negobj(x):
        w = np.clip(unpack(x), 0.0, None)
        return -(w @ spec.phi_table_ - ent(w, mu.reshape(-1)))

    cons = [{"type": "ineq", "fun": lambda x: unpack(x)}]
    for drop, mm, cap in caps:
        def c(x, drop=drop, mm=mm, cap=cap):
            T = np.clip(unpack(x), 0.0, None).reshape((S,) * d)
            m = T.sum(axis=drop) if drop else T
            return cap - ent(m.reshape(-1), mm.reshape(-1))
        cons.append({"type": "ineq", "fun": c})
    res = _minimize(negobj, best_w[:-1], method="COBYLA", constraints=cons,
                    options={"rhobeg": 1e-3, "tol": 1e-12, "maxiter": 20_000})
    w = np.clip(unpack(res.x), 0.0, None)
    w = _repair(spec, (w / w.sum())[None], mu.reshape(-1))[0]
    val, ok = _batch_eval(spec, w[None])
    if ok[0] and val[0] > best_v:
        return float(val[0]), w
    return best_v, best_w
