"""Shared generators for the test suite: random sentences, random structures,
random coherent trees."""

from __future__ import annotations

import random
from fractions import Fraction

from folbelief.belief import BeliefTree, ExplicitNodes
from folbelief.semantics import FiniteStructure
from folbelief.syntax import Atom, Exists, Not, Or, Signature


def random_formula(rng: random.Random, sig: Signature, depth_budget: int, vars_in_scope):
    """A random core-form formula; closed iff vars_in_scope starts empty and
    every atom sits under a quantifier (callers close the result anyway)."""
    vars_in_scope = list(vars_in_scope)
    can_atom = bool(vars_in_scope)
    choices = []
    if can_atom:
        choices += ["atom"] * 3
    if depth_budget > 0:
        choices += ["exists"] * 3
    choices += ["not", "or"] if (can_atom or depth_budget > 0) else []
    kind = rng.choice(choices)
    if kind == "atom":
        name, arity = rng.choice(sig.predicates)
        args = tuple(rng.choice(vars_in_scope) for _ in range(arity))
        return Atom(name, args)
    if kind == "exists":
        fresh = f"v{len(vars_in_scope) + 1}"
        return Exists(fresh, random_formula(rng, sig, depth_budget - 1, vars_in_scope + [fresh]))
    if kind == "not":
        return Not(random_formula(rng, sig, depth_budget, vars_in_scope))
    left = random_formula(rng, sig, depth_budget, vars_in_scope)
    right = random_formula(rng, sig, depth_budget, vars_in_scope)
    return Or(left, right)


def random_sentence(rng: random.Random, sig: Signature, max_depth: int):
    """A closed formula of depth <= max_depth (and >= 1)."""
    while True:
        f = Exists("v1", random_formula(rng, sig, max_depth - 1, ["v1"]))
        from folbelief.syntax import depth, free_variables

        if not free_variables(f) and depth(f) <= max_depth:
            return f


def sentence_corpus(seed: int, sig: Signature, max_depth: int, count: int):
    rng = random.Random(seed)
    return [random_sentence(rng, sig, max_depth) for _ in range(count)]


def random_structure(rng: random.Random, sig: Signature, max_size: int) -> FiniteStructure:
    n = rng.randrange(max_size + 1)
    relations = {}
    for name, arity in sig.predicates:
        rel = set()
        for tup in __import__("itertools").product(range(n), repeat=arity):
            if rng.random() < 0.5:
                rel.add(tup)
        relations[name] = frozenset(rel)
    return FiniteStructure(sig, n, relations)


def random_reasonable_tree(rng: random.Random, max_depth: int = 3, max_nodes: int = 64):
    """A random fully positive coherent tree over synthetic nodes.

    Structure: the root plus up to max_nodes nodes, branching 1..4, depth
    bounded; weights split by random positive integer proportions.
    """
    children: dict = {}
    depth = {"n0": 0}
    order = ["n0"]
    count = 1
    frontier = ["n0"]
    while frontier and count < max_nodes:
        node = frontier.pop(0)
        if depth[node] >= max_depth:
            continue
        fanout = rng.randint(1, 4)
        fanout = min(fanout, max_nodes - count)
        if fanout <= 0:
            break
        kids = []
        for _ in range(fanout):
            name = f"n{count}"
            count += 1
            depth[name] = depth[node] + 1
            kids.append(name)
            order.append(name)
        children[node] = kids
        frontier.extend(kids)
    space = ExplicitNodes("n0", children)
    weights = {"n0": Fraction(1)}
    for node, kids in children.items():
        parts = [rng.randint(1, 9) for _ in kids]
        total = sum(parts)
        for kid, part in zip(kids, parts):
            weights[kid] = weights[node] * part / total
    tree = BeliefTree.from_structure(space, weights, children)
    return tree
