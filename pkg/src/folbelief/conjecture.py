"""Conjecture ranking as model selection.

A conjecture is a set of same-depth constituents (the empty set plays the
role of the absurd conjecture).  Scoring trades off how much believed mass a
conjecture captures against how informative it is, via the entropy of the
captured-mass distribution padded with a residual atom.

The uniform-entropy normalizer uses |D|+1 outcomes: the padded distribution
has |D|+1 support atoms, and this keeps the singleton case away from the
log(1) = 0 singularity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .constituents import Constituent
from .dnf import DnfEngine
from .syntax import Formula, free_variables, universal_closure


@dataclass(frozen=True)
class Conjecture:
    depth: int
    members: frozenset

    def __post_init__(self):
        for m in self.members:
            if getattr(m, "depth", self.depth) != self.depth:
                raise ValueError("conjecture members must share the depth")

    def __len__(self):
        return len(self.members)


def sqrt_weight(n: int) -> float:
    """Default positive concave size weight."""
    return math.sqrt(n)


def _entropy(probs: Iterable[Fraction]) -> float:
    total = 0.0
    for p in probs:
        if p > 0:
            fp = float(p)
            total -= fp * math.log(fp)
    return total


def score_likelihood_entropy(weights: dict, conjecture: Conjecture,
                             size_weight: Callable[[int], float] = sqrt_weight) -> float:
    """Captured mass times padded entropy, normalized by uniform entropy.

    `weights` maps each depth-d node to its belief; missing nodes count as
    zero.  Conjectures whose members all carry zero weight score 0, as does
    the absurd (empty) conjecture.
    """
    members = sorted(conjecture.members, key=lambda c: _member_key(c))
    if not members:
        return 0.0
    masses = [weights.get(m, Fraction(0)) for m in members]
    positive = [p for p in masses if p > 0]
    if not positive:
        return 0.0
    likelihood = sum(masses)
    residual = 1 - sum(positive)
    entropy = _entropy(positive + [residual])
    normalizer = math.log(len(members) + 1)
    return size_weight(len(members)) * float(likelihood) / normalizer * entropy


def _member_key(c):
    if isinstance(c, Constituent):
        return (c.depth, c.k, c.apart, c.attr.base, c.attr.children or 0)
    return (str(c),)


def _conjecture_key(conj: Conjecture):
    return tuple(sorted(_member_key(m) for m in conj.members))


def rank_conjectures(weights: dict, universe: Sequence[Conjecture],
                     size_weight: Callable[[int], float] = sqrt_weight) -> list:
    """Descending by score; ties broken by member-set order. Returns
    (conjecture, score) pairs covering the whole universe."""
    scored = [(c, score_likelihood_entropy(weights, c, size_weight)) for c in universe]
    scored.sort(key=lambda pair: (-pair[1], _conjecture_key(pair[0])))
    return scored


def regularized_universe(engine: DnfEngine, sentences: Iterable[Formula], d: int,
                         max_size: int = 3, full: bool = False) -> list[Conjecture]:
    """All conjectures drawn from the union of the sentences' depth-d forms.

    Subsets are enumerated by size then lexicographically; the absurd
    conjecture is always present.  `full` lifts the size bound (only sane for
    tiny pools).
    """
    pool: set = set()
    for f in sentences:
        g = universal_closure(f) if free_variables(f) else f
        pool.update(engine.dnf(g, d).members)
    ordered = sorted(pool, key=_member_key)
    top = len(ordered) if full else min(max_size, len(ordered))
    out = [Conjecture(d, frozenset())]
    for size in range(1, top + 1):
        for combo in itertools.combinations(ordered, size):
            out.append(Conjecture(d, frozenset(combo)))
    return out


def weights_at_depth(tree, d: int) -> dict:
    """Depth-d weight vector of a belief tree (materialized nodes)."""
    return {n: tree.w[n] for n in tree.nodes_at_depth(d)}
