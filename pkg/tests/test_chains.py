import pytest

from gremlab.chains import Chain, enumerate_chains, level_sets, swap_chain
from gremlab.model import all_subsets, powerset_masks, species_of


def test_counts():
    assert len(enumerate_chains(1)) == 1
    assert [c.perm for c in enumerate_chains(2)] == [(1, 2), (2, 1)]
    chains = enumerate_chains(3)
    assert len(chains) == 6
    for c in chains:
        assert [len(t) for t in c.levels] == [1, 2, 4]


def test_two_species_levels():
    levels, level_of = level_sets(Chain((2, 1)))
    assert levels == ((0b10,), (0b01, 0b11))
    levels, _ = level_sets(Chain((1, 2)))
    assert levels == ((0b01,), (0b10, 0b11))
    assert level_of[0b11] == 2


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_level_structure(n):
    full = 2**n - 1
    for c in enumerate_chains(n):
        seen = [J for t in c.levels for J in t]
        assert sorted(seen) == all_subsets(n)
        assert len(set(seen)) == len(seen)
        assert c.level_of[full] == n
        for k in range(1, n + 1):
            assert bin(c.A(k)).count("1") == k
            assert c.A(k - 1) & ~c.A(k) == 0
            assert sorted(J for t in c.levels[:k] for J in t) == powerset_masks(c.A(k))
            assert len(c.levels[k - 1]) == 2 ** (k - 1)
        for J in all_subsets(n):
            assert c.level_of[J] == max(c.perm.index(s) + 1 for s in species_of(J))


def test_swap_examples():
    assert swap_chain(Chain((1, 2, 3)), 0b010) == Chain((2, 1, 3))
    assert swap_chain(Chain((1, 2, 3)), 0b101) == Chain((1, 3, 2))
    c = Chain((3, 1, 2))
    for k in range(1, 4):
        assert swap_chain(c, c.A(k)) == c


@pytest.mark.parametrize("n", [2, 3, 4])
def test_swap_runs_through_J(n):
    for c in enumerate_chains(n):
        for J in all_subsets(n):
            r = swap_chain(c, J)
            size, k = bin(J).count("1"), c.level_of[J]
            assert r.A(size) == J
            assert all(r.A(i) == c.A(i) for i in range(k, n + 1))


def test_invalid_permutation():
    with pytest.raises(ValueError):
        Chain((1, 1))


def test_describe():
    assert Chain((2, 1)).describe() == "2<1  T1={{2}} T2={{1},{12}}"
