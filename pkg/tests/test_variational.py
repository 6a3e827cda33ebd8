import math

import numpy as np
import pytest

from gremlab.chains import enumerate_chains
from gremlab.entropy import check_constraints
from gremlab.gibbs import build_gibbs, flatten
from gremlab.model import JointMeasure, all_subsets, make_spec, product_measure, random_spec
from gremlab.parisi import LOG2, global_parisi_min
from gremlab.variational import brute_force_gibbs, gibbs_objective, solve_gibbs, unconstrained_tilt


def active_instance(rng, noise=0.0):
    """Strong single-species field plus a pair term: the tilt breaks the {1} cap."""
    S = 2
    mu = {J: rng.dirichlet(np.ones(S)) for J in all_subsets(2)}
    spec = make_spec(2, mu, expr="5*x1 + 3*x12")
    if noise:
        table = spec.phi_table_ + rng.uniform(-noise, noise, spec.phi_table_.size)
        spec = make_spec(2, mu, phi=table)
    return spec


def test_tilt_examples(zero_model, rem):
    nu, v = unconstrained_tilt(zero_model(2))
    assert v == 0
    np.testing.assert_allclose(nu.weights, product_measure(zero_model(2)).weights)
    nu, v = unconstrained_tilt(rem)
    assert v == pytest.approx(math.log((1 + math.e) / 2), abs=1e-15)
    assert check_constraints(nu, rem).feasible


def test_tilt_shift_invariance(rng):
    spec = random_spec(rng, 2, 3)
    shifted = make_spec(2, spec.mu, phi=spec.phi_table_ + 1.75)
    a, va = unconstrained_tilt(spec)
    b, vb = unconstrained_tilt(shifted)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-15)
    assert vb - va == pytest.approx(1.75, abs=1e-13)


def test_fast_path(rem, zero_model):
    res = solve_gibbs(zero_model(2))
    assert res.fast_path and res.value == 0
    res = solve_gibbs(rem)
    assert res.fast_path
    assert res.value == pytest.approx(math.log((1 + math.e) / 2), abs=1e-9)


def test_objective_examples(rng):
    spec = random_spec(rng, 2, 2)
    mu = product_measure(spec)
    assert gibbs_objective(mu, spec) == pytest.approx(float(spec.phi_table_ @ mu.weights), abs=1e-15)
    atom = np.zeros(8)
    atom[0] = 1
    assert gibbs_objective(JointMeasure(2, 2, atom), make_spec(2, [0.5, 0.5], phi=np.zeros(8))) == -math.inf


def test_objective_concavity(rng):
    spec = random_spec(rng, 2, 2)
    mu = product_measure(spec).weights
    for _ in range(50):
        a = 0.6 * mu + 0.4 * rng.dirichlet(np.ones(8))
        b = 0.6 * mu + 0.4 * rng.dirichlet(np.ones(8))
        na, nb = JointMeasure(2, 2, a), JointMeasure(2, 2, b)
        fa, fb = gibbs_objective(na, spec), gibbs_objective(nb, spec)
        if math.isinf(fa) or math.isinf(fb):
            continue
        t = rng.uniform()
        mid = gibbs_objective(JointMeasure(2, 2, t * a + (1 - t) * b), spec)
        assert mid >= t * fa + (1 - t) * fb - 1e-12


def test_mu_is_feasible_with_full_slack(rng):
    spec = random_spec(rng, 3, 2)
    rep = check_constraints(product_measure(spec), spec)
    assert rep.feasible
    assert all(e.slack == e.cap for e in rep.entries)


def test_active_instance_matches_oracle_and_parisi(rng):
    spec = active_instance(rng)
    res = solve_gibbs(spec)
    assert not res.fast_path and res.converged and res.certified
    assert 0b01 in res.active_set
    assert check_constraints(res.nu_star, spec, tol=1e-6).feasible
    oracle, _ = brute_force_gibbs(spec, samples=200_000, rounds=100)
    assert res.value == pytest.approx(oracle, abs=1e-4)
    assert res.value >= oracle - 1e-9
    assert res.value + LOG2 == pytest.approx(global_parisi_min(spec).value, abs=1e-5)


def test_solver_dominates_feasible_probes(rng):
    spec = active_instance(rng, noise=0.5)
    res = solve_gibbs(spec)
    for chain in enumerate_chains(2):
        for _ in range(5):
            G = flatten(build_gibbs(spec, chain, np.sort(rng.uniform(0.05, 1, 2))))
            assert res.value >= gibbs_objective(G, spec) - 1e-9


def test_gibbs_value_of_winning_chain_measure(rng):
    spec = active_instance(rng)
    best = global_parisi_min(spec).best
    G = flatten(build_gibbs(spec, best.chain, best.m))
    assert gibbs_objective(G, spec) == pytest.approx(best.value - LOG2, abs=1e-5)


def test_parallel_restarts_are_deterministic(rng):
    spec = active_instance(rng)
    a = solve_gibbs(spec, restarts=4, seed=3)
    b = solve_gibbs(spec, restarts=4, seed=3, workers=2)
    assert a.value == b.value
    assert np.array_equal(a.nu_star.weights, b.nu_star.weights)
