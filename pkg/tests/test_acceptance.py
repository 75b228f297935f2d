"""Acceptance gate: one test per shipping criterion, each printing a
pass/fail line with its runtime.  Everything numeric is exact rational
arithmetic except correlation, which gets a 1e-9 tolerance for its square
root."""

import random
import sys
import time
from fractions import Fraction as F

import pytest

from folbelief.abstraction import CellRef, Filtration, FiltrationNodes, Mask
from folbelief.arena import (
    CellGame,
    ConstituentGame,
    MonadicDepthPolicy,
    RationalTreePolicy,
    Refine,
    ScriptedPolicy,
    Select,
    WorldChainGame,
    play_game,
    self_play,
    validate_record,
)
from folbelief.belief import BeliefTree, ConstituentNodes, ExplicitNodes, UndefinedRenorm
from folbelief.conjecture import Conjecture, rank_conjectures, score_likelihood_entropy
from folbelief.constituents import ConstituentSpace
from folbelief.dnf import Decision, DnfEngine, ExactMonadicOracle
from folbelief.embedding import EmbeddingSpace
from folbelief.syntax import Exists, Not, Or, Signature, and_, implies, parse_formula

from helpers import random_reasonable_tree, sentence_corpus

MONO = Signature.monadic("P")
MONO2 = Signature.monadic("P", "Q")


class _Ctx:
    def __init__(self):
        self.space = ConstituentSpace(MONO)
        self.nodes = ConstituentNodes(self.space)
        self.engine = DnfEngine(self.space)
        self.oracle = ExactMonadicOracle(self.space)
        self.uniform = BeliefTree.parent_uniform(self.nodes, 2)
        self.converged = self.uniform.run_sequence()


@pytest.fixture(scope="module")
def ctx():
    return _Ctx()


def _report(number: int, label: str, started: float, budget: float):
    elapsed = time.time() - started
    print(f"PASS criterion {number:2d}: {label} ({elapsed:.2f}s, budget {budget:.0f}s)",
          file=sys.stderr)
    assert elapsed < budget, f"criterion {number} exceeded its {budget}s budget"


def test_criterion_01_count(ctx):
    t0 = time.time()
    space = ConstituentSpace(Signature.of(("Lt", 2)))
    assert space.constituent_count(2, 0) == 2 ** 512
    _report(1, "one binary predicate at depth 2 counts 2^512", t0, 1.0)


def test_criterion_02_figure_renormalization():
    t0 = time.time()
    ns = ExplicitNodes("root", {
        "root": ["a", "b", "c"], "a": ["ad"], "c": ["ce", "cf"], "cf": ["cfg", "cfh"],
    })
    h0 = BeliefTree.from_structure(ns, {
        "root": F(1), "a": F(1, 6), "b": F(1, 3), "c": F(1, 2),
        "ad": F(1, 6), "ce": F(1, 12), "cf": F(5, 12),
        "cfg": F(1, 6), "cfh": F(1, 4),
    }, {"root": ["a", "b", "c"], "a": ["ad"], "c": ["ce", "cf"], "cf": ["cfg", "cfh"]})
    h0.check()
    h1 = h0.renormalize("b")
    h1.check()
    assert (h1.w["ad"], h1.w["ce"], h1.w["cf"]) == (F(1, 4), F(1, 8), F(5, 8))
    h2 = h1.renormalize_batch(["ad", "ce"])
    h2.check()
    assert (h2.w["cfg"], h2.w["cfh"]) == (F(2, 5), F(3, 5))
    _report(2, "worked renormalization example holds exactly", t0, 1.0)


def test_criterion_03_renormalization_laws():
    t0 = time.time()
    rng = random.Random(2024)
    done = 0
    while done < 200:
        tree = random_reasonable_tree(rng, max_depth=3, max_nodes=64)
        assert len(list(tree.nodes())) <= 64
        candidates = [n for n in tree.nodes() if tree.space.depth_of(n) >= 1]
        if len(candidates) < 3:
            continue
        minus = rng.choice(candidates)
        try:
            out = tree.renormalize(minus)
        except UndefinedRenorm:
            continue
        out.check()  # coherence + normalization, exact

        # preservation: the redistribution point's subtree keeps its mass
        point = None
        cur = tree.parent_of(minus)
        while cur is not None:
            if out.w[cur] == tree.w[cur] and any(out.w[k] > 0 for k in out.children_of(cur)):
                point = cur
                break
            cur = tree.parent_of(cur)
        if point is not None:
            for depth in range(tree.space.depth_of(point) + 1, tree.max_depth() + 1):
                total = F(0)
                stack = [point]
                while stack:
                    x = stack.pop()
                    xd = tree.space.depth_of(x)
                    kids = out.children_of(x)
                    if xd == depth or (xd < depth and not kids):
                        total += out.w[x]
                    elif xd < depth:
                        stack.extend(kids)
                assert total == tree.w[point]

        d = tree.space.depth_of(minus)
        peers = [n for n in candidates if tree.space.depth_of(n) == d and n != minus]
        if peers:
            other = rng.choice(peers)
            try:
                ab = tree.renormalize(minus).renormalize(other)
                ba = tree.renormalize(other).renormalize(minus)
            except UndefinedRenorm:
                continue
            assert ab.w == ba.w
        done += 1
    _report(3, "coherence/preservation/commutativity on 200 random trees", t0, 30.0)


def test_criterion_04_normalization_after_mutations(ctx):
    t0 = time.time()
    tree = BeliefTree.parent_uniform(ctx.nodes, 2)
    tree.check(2)
    stepped = tree.sequence_step(1)
    stepped.check(2)
    stepped = stepped.sequence_step(2)
    stepped.check(2)
    flagged = [n for n in tree.nodes_at_depth(2) if ctx.space.trivially_inconsistent(n)]
    renormed = tree.renormalize(flagged[0]).renormalize(flagged[1])
    renormed.check(2)
    assert renormed.w[renormed.root] == 1
    _report(4, "root weight and per-depth mass stay exactly 1", t0, 30.0)


def test_criterion_05_monadic_semantic_faithfulness(ctx):
    t0 = time.time()
    # pairwise exclusive + jointly exhaustive over every type world, m <= 2
    for sig in (MONO, MONO2):
        space = ConstituentSpace(sig)
        oracle = ExactMonadicOracle(space)
        for d in (1, 2):
            mapped = [(w, oracle.world_constituent(w, d)) for w in oracle.worlds]
            assert len({c for _, c in mapped}) == len(oracle.worlds)
            for w, c in mapped:
                assert oracle.holds_in(c, w)
                for w2, c2 in mapped:
                    if c2 != c:
                        assert not oracle.holds_in(c2, w)
    # normal forms mean the same thing as their sentences on a 200-item corpus
    corpus_m1 = sentence_corpus(404, MONO, 2, 100)
    for f in corpus_m1:
        s = ctx.engine.dnf(f, 2)
        for w in ctx.oracle.worlds:
            assert w.satisfies(f) == any(ctx.oracle.holds_in(c, w) for c in s)
    space2 = ConstituentSpace(MONO2)
    engine2 = DnfEngine(space2)
    oracle2 = ExactMonadicOracle(space2)
    corpus_m2 = sentence_corpus(405, MONO2, 2, 100)
    for f in corpus_m2:
        for w in oracle2.worlds:
            inside = engine2.contains(f, 2, oracle2.world_constituent(w, 2))
            assert inside == w.satisfies(f)
    _report(5, "exclusivity, exhaustiveness, and dnf equivalence (200 sentences)", t0, 60.0)


def test_criterion_06_convergence_and_prover(ctx):
    t0 = time.time()
    tree = BeliefTree.parent_uniform(ctx.nodes, 2)
    tree = tree.sequence_step(1)
    tree.check(2)
    tree = tree.sequence_step(2)
    tree.check(2)
    for n in tree.nodes():
        if tree.space.depth_of(n) == 0:
            continue
        semantic = ctx.oracle.decide(n) == Decision.CONSISTENT
        assert (tree.w[n] > 0) == semantic
    corpus = sentence_corpus(406, MONO, 2, 200)
    for f in corpus:
        valid = all(w.satisfies(f) for w in ctx.oracle.worlds)
        assert tree.proves(ctx.engine, f, 2) == valid
    _report(6, "update sequence zeroes exactly the inconsistent nodes; prover exact", t0, 60.0)


def test_criterion_07_failure_of_omniscience(ctx):
    t0 = time.time()
    bad = [c for c in ctx.space.enumerate_constituents(2)
           if ctx.oracle.decide(c) == Decision.INCONSISTENT]
    f1, f2 = ctx.space.render(bad[0]), ctx.space.render(bad[1])
    for w in ctx.oracle.worlds:
        assert not w.satisfies(f1) and not w.satisfies(and_(f1, f2))
    b1 = ctx.uniform.belief_in(ctx.engine, f1, 2)
    b2 = ctx.uniform.belief_in(ctx.engine, and_(f1, f2), 2)
    assert b1 != b2
    _report(7, "logically equivalent sentences get unequal beliefs", t0, 30.0)


def test_criterion_08_probability_laws(ctx):
    t0 = time.time()
    tree = ctx.uniform
    corpus = sentence_corpus(407, MONO, 1, 60)
    rng = random.Random(408)
    for _ in range(100):
        f, g = rng.choice(corpus), rng.choice(corpus)
        bf = tree.belief_in(ctx.engine, f, 2)
        bg = tree.belief_in(ctx.engine, g, 2)
        assert tree.belief_in(ctx.engine, Not(f), 2) == 1 - bf
        assert tree.belief_in(ctx.engine, and_(f, g), 2) <= min(bf, bg)
        assert max(bf, bg) <= tree.belief_in(ctx.engine, Or(f, g), 2)
    from folbelief.syntax import Atom, forall

    for phi in (Atom("P", ("x",)), Not(Atom("P", ("x",)))):
        b_all = tree.belief_in(ctx.engine, forall("x", phi), 2)
        witnesses = ctx.engine.dnf(Exists("x", Not(phi)), 2).members
        assert b_all <= min(1 - tree.w[c] for c in witnesses)
        members = ctx.engine.dnf(Exists("x", phi), 2).members
        assert max(tree.w[c] for c in members) <= tree.belief_in(ctx.engine, Exists("x", phi), 2)
    _report(8, "negation/conjunction/disjunction/quantifier bounds (100 pairs)", t0, 60.0)


def test_criterion_09_embedding_laws(ctx):
    t0 = time.time()
    emb = EmbeddingSpace(ctx.uniform, ctx.engine, 2)
    corpus = sentence_corpus(409, MONO, 2, 60)
    rng = random.Random(410)
    checked_impl = 0
    for _ in range(150):
        f, g = rng.choice(corpus), rng.choice(corpus)
        ef, eg = emb.embed(f), emb.embed(g)
        assert emb.inner(ef, emb.embed(Not(f))) == 0
        assert emb.embed(Or(f, g)) == emb.pointwise_max(ef, eg)
        assert emb.embed(and_(f, Not(g))) == emb.pointwise_min(ef, emb.embed(Not(g)))
        if checked_impl < 50 and emb.belief(and_(Not(f), g)) > 0:
            r1 = emb.rescaled_projection(eg, emb.embed(Not(f)))
            r2 = emb.rescaled_projection(emb.embed(Not(f)), eg)
            assert emb.embed(implies(f, g)) == emb.pointwise_max(r1, r2)
            ce = emb.conditional(g, f)
            assert emb.inner(ce, ef) == emb.inner(eg, ef)
            checked_impl += 1
    f = parse_formula("(E x) P(x)", MONO)
    assert abs(emb.correlation(f, f) - 1.0) < 1e-9
    assert abs(emb.correlation(f, Not(f)) + 1.0) < 1e-9
    assert checked_impl == 50
    _report(9, "orthogonality, max/min, projection-implication, correlation", t0, 60.0)


def test_criterion_10_conjecture_scoring(ctx):
    t0 = time.time()
    cons1 = list(ctx.space.enumerate_constituents(1))
    zeroed = {c: F(0) for c in cons1}
    assert score_likelihood_entropy(zeroed, Conjecture(1, frozenset(cons1[:2]))) == 0.0
    uniform = {c: F(1, 4) for c in cons1}
    import itertools

    for size in (1, 2, 3):
        scores = {score_likelihood_entropy(uniform, Conjecture(1, frozenset(combo)))
                  for combo in itertools.combinations(cons1, size)}
        assert len(scores) == 1
    weights = {n: ctx.converged.w[n] for n in ctx.converged.nodes_at_depth(2)}
    cons2 = list(ctx.space.enumerate_constituents(2))
    consistent = [c for c in cons2 if ctx.oracle.decide(c) == Decision.CONSISTENT]
    inconsistent = [c for c in cons2 if ctx.oracle.decide(c) == Decision.INCONSISTENT]
    rng = random.Random(411)
    universe = [Conjecture(2, frozenset({c})) for c in consistent]
    universe += [Conjecture(2, frozenset(rng.sample(inconsistent, 2))) for _ in range(20)]
    ranked = rank_conjectures(weights, universe)
    scores = {conj: s for conj, s in ranked}
    worst_good = min(s for conj, s in ranked
                     if any(m in consistent for m in conj.members))
    best_bad = max(s for conj, s in ranked
                   if not any(m in consistent for m in conj.members))
    assert worst_good > best_bad
    assert best_bad == 0.0
    _report(10, "zero-mass scores 0; size-only under uniform; strict omniscient order", t0, 30.0)


def test_criterion_11_game_play(ctx):
    t0 = time.time()
    chain = WorldChainGame(MONO)
    stats, records = self_play(lambda: MonadicDepthPolicy(MONO), 1000, 6, chain, seed=2025)
    assert stats.games == 1000 and stats.drawn == 1000
    assert stats.challenge_accuracy == 1.0
    replayed = play_game(MonadicDepthPolicy(MONO), MonadicDepthPolicy(MONO), 6, chain,
                         seed=records[17].seed)
    assert replayed == records[17]
    for rec in records[:100]:
        assert validate_record(rec, chain) == []

    game = ConstituentGame(ctx.space, ctx.oracle)
    stats2, recs2 = self_play(lambda: RationalTreePolicy(ctx.uniform), 300, 6, game, seed=2026)
    lost_at_depth2 = sum(
        1 for r in recs2
        if r.challenged and r.challenged.startswith("2|") and r.verdict == "consistent"
    )
    assert lost_at_depth2 >= 1
    again = play_game(RationalTreePolicy(ctx.uniform), RationalTreePolicy(ctx.uniform),
                      6, game, seed=recs2[3].seed)
    assert again == recs2[3]
    _report(11, "1000 drawn limit games, lossy uniform play, bit-identical replay", t0, 120.0)


def test_criterion_12_trailblazer(ctx):
    t0 = time.time()
    # mask extremes
    triv = Filtration(ctx.space, {1: Mask.none(), 2: Mask.none()})
    full = Filtration(ctx.space, {1: Mask.all(), 2: Mask.all()})
    assert len(triv.cells_at(1)) == 1
    assert len(full.cells_at(1)) == ctx.space.constituent_count(1, 0)
    assert len(full.cells_at(2)) == ctx.space.constituent_count(2, 0)

    # scripted refinement drives the trivial cell to a single-member cell,
    # after which play under the shared seed mirrors the unmasked game
    cell_nodes = FiltrationNodes(full)
    cell_tree = BeliefTree.parent_uniform(cell_nodes, 2)
    cell_game = CellGame(full, ctx.oracle)
    pick = ctx.uniform.nodes_at_depth(1)[2]
    pick_cell = full.cell_of(pick)
    trivial1 = triv.cells_at(1)[0]
    assert pick_cell in triv.refine_cell(trivial1, Mask.all())
    assert full.member_count(pick_cell) == 1

    seed = 31337
    masked = play_game(
        ScriptedPolicy([Select(trivial1)], RationalTreePolicy(cell_tree)),
        ScriptedPolicy([Refine(pick_cell)], RationalTreePolicy(cell_tree)),
        7, cell_game, seed,
    )
    plain_game = ConstituentGame(ctx.space, ctx.oracle)
    plain = play_game(
        ScriptedPolicy([Select(pick)], RationalTreePolicy(ctx.uniform)),
        RationalTreePolicy(ctx.uniform),
        6, plain_game, seed,
    )
    assert not masked.forfeit and not plain.forfeit
    assert validate_record(masked, cell_game) == []

    def strip(tokens):
        out = []
        for tok in tokens:
            if tok == "C":
                out.append("C")
            else:
                cell = CellRef.parse(tok[2:])
                member = next(iter(full.members(cell)))
                out.append(f"S:{member.depth}|{ctx.space.text(member)}")
        return out

    assert strip(masked.moves[2:]) == plain.moves[1:]
    assert masked.verdict == plain.verdict
    if plain.result in ("O", "E"):
        assert masked.result in ("O", "E") and masked.result != plain.result
    else:
        assert masked.result == plain.result
    _report(12, "refine reaches single-member cells; masked play mirrors plain", t0, 60.0)
