import random
from fractions import Fraction as F

import pytest

from folbelief.belief import BeliefTree, ConstituentNodes
from folbelief.conjecture import (
    Conjecture,
    rank_conjectures,
    regularized_universe,
    score_likelihood_entropy,
    sqrt_weight,
    weights_at_depth,
)
from folbelief.constituents import ConstituentSpace
from folbelief.dnf import Decision, DnfEngine, ExactMonadicOracle
from folbelief.syntax import Signature, parse_formula

MONO = Signature.monadic("P")


@pytest.fixture(scope="module")
def ctx():
    sp = ConstituentSpace(MONO)
    nodes = ConstituentNodes(sp)
    eng = DnfEngine(sp)
    oracle = ExactMonadicOracle(sp)
    return sp, nodes, eng, oracle


def test_empty_and_zero_mass_score_zero(ctx):
    sp, nodes, eng, _ = ctx
    weights = {c: F(0) for c in sp.enumerate_constituents(1)}
    some = frozenset(list(weights)[:2])
    assert score_likelihood_entropy(weights, Conjecture(1, some)) == 0.0
    assert score_likelihood_entropy(weights, Conjecture(1, frozenset())) == 0.0


def test_singleton_half_weight(ctx):
    sp, _, _, _ = ctx
    c = next(iter(sp.enumerate_constituents(1)))
    weights = {c: F(1, 2)}
    got = score_likelihood_entropy(weights, Conjecture(1, frozenset({c})))
    assert abs(got - sqrt_weight(1) / 2) < 1e-12
    # with a custom size weight the value scales accordingly
    got2 = score_likelihood_entropy(weights, Conjecture(1, frozenset({c})),
                                    size_weight=lambda n: 3.0)
    assert abs(got2 - 1.5) < 1e-12


def test_uniform_weights_depend_on_size_only(ctx):
    sp, nodes, eng, _ = ctx
    cons = list(sp.enumerate_constituents(1))
    weights = {c: F(1, 4) for c in cons}
    import itertools

    by_size = {}
    for size in (1, 2, 3):
        scores = {
            score_likelihood_entropy(weights, Conjecture(1, frozenset(combo)))
            for combo in itertools.combinations(cons, size)
        }
        assert len(scores) == 1
        by_size[size] = scores.pop()
    assert len(set(by_size.values())) == 3


def test_omniscient_ranking(ctx):
    sp, nodes, eng, oracle = ctx
    tree = BeliefTree.parent_uniform(nodes, 2).run_sequence()
    weights = weights_at_depth(tree, 2)
    cons = list(sp.enumerate_constituents(2))
    consistent = [c for c in cons if oracle.decide(c) == Decision.CONSISTENT]
    inconsistent = [c for c in cons if oracle.decide(c) == Decision.INCONSISTENT]
    rng = random.Random(61)
    universe = [Conjecture(2, frozenset({c})) for c in consistent]
    universe += [Conjecture(2, frozenset(rng.sample(inconsistent, 3))) for _ in range(10)]
    ranked = rank_conjectures(weights, universe)
    has_consistent = [any(oracle.decide(m) == Decision.CONSISTENT for m in conj.members)
                      for conj, _ in ranked]
    # every conjecture with a consistent member outranks every one without
    first_bad = has_consistent.index(False)
    assert all(not flag for flag in has_consistent[first_bad:])
    assert all(score == 0.0 for conj, score in ranked if not
               any(oracle.decide(m) == Decision.CONSISTENT for m in conj.members))


def test_ranking_deterministic_ties(ctx):
    sp, nodes, eng, _ = ctx
    cons = list(sp.enumerate_constituents(1))
    weights = {c: F(1, 4) for c in cons}
    universe = [Conjecture(1, frozenset({c})) for c in cons]
    r1 = rank_conjectures(weights, universe)
    r2 = rank_conjectures(weights, list(reversed(universe)))
    assert [c for c, _ in r1] == [c for c, _ in r2]
    assert rank_conjectures(weights, []) == []


def test_label_permutation_invariance(ctx):
    sp, _, _, _ = ctx
    cons = list(sp.enumerate_constituents(1))
    weights = {cons[0]: F(1, 2), cons[1]: F(1, 3), cons[2]: F(1, 6), cons[3]: F(0)}
    permuted = {cons[1]: F(1, 2), cons[2]: F(1, 3), cons[3]: F(1, 6), cons[0]: F(0)}
    a = score_likelihood_entropy(weights, Conjecture(1, frozenset(cons[:3])))
    b = score_likelihood_entropy(permuted, Conjecture(1, frozenset(cons[1:])))
    assert abs(a - b) < 1e-12


def test_monotone_in_likelihood(ctx):
    sp, _, _, _ = ctx
    cons = list(sp.enumerate_constituents(1))
    low = {cons[0]: F(1, 8), cons[1]: F(1, 8)}
    high = {cons[0]: F(1, 4), cons[1]: F(1, 4)}
    conj = Conjecture(1, frozenset(cons[:2]))
    # same |D| and equal-mass members (so the same entropy shape family)
    assert score_likelihood_entropy(high, conj) > score_likelihood_entropy(low, conj)


def test_regularized_universe(ctx):
    sp, nodes, eng, _ = ctx
    # singleton pool: refinement-restricted conjecturing
    c = next(iter(sp.enumerate_constituents(1)))
    universe = regularized_universe(eng, [sp.render(c)], 1, max_size=2)
    members_union = set().union(*(u.members for u in universe if u.members))
    assert c in members_union
    assert Conjecture(1, frozenset()) in universe
    # empty pool: only the absurd conjecture
    assert regularized_universe(eng, [], 1) == [Conjecture(1, frozenset())]
    # full powerset when unrestricted
    taut = parse_formula("((E x) P(x) | ~(E x) P(x))", MONO)
    universe_full = regularized_universe(eng, [taut], 1, full=True)
    assert len(universe_full) == 2 ** 4
