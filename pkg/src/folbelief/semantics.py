"""Finite structures, Tarskian evaluation, and monadic type worlds.

Domains are 0..n-1 and may be empty: an existential over the empty domain is
false, so universals are vacuously true there.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .syntax import Atom, Exists, Formula, Not, Or, Signature


@dataclass(frozen=True)
class FiniteStructure:
    sig: Signature
    domain_size: int
    relations: dict = field(hash=False)  # name -> frozenset of arg tuples

    def __post_init__(self):
        if self.domain_size < 0:
            raise ValueError("domain_size must be >= 0")
        for name, arity in self.sig.predicates:
            rel = self.relations.get(name, frozenset())
            for tup in rel:
                if len(tup) != arity:
                    raise ValueError(f"tuple {tup} has wrong arity for {name}/{arity}")
                if any(not (0 <= e < self.domain_size) for e in tup):
                    raise ValueError(f"tuple {tup} outside domain of size {self.domain_size}")

    def holds(self, predicate: str, args: tuple[int, ...]) -> bool:
        return args in self.relations.get(predicate, frozenset())


def satisfies(structure: FiniteStructure, f: Formula, env: dict | None = None) -> bool:
    """Standard satisfaction; env maps free variables to domain elements."""
    env = env or {}

    def ev(g: Formula, e: dict) -> bool:
        if isinstance(g, Atom):
            try:
                args = tuple(e[a] for a in g.args)
            except KeyError as exc:
                raise KeyError(f"unmapped free variable {exc.args[0]!r}") from None
            return structure.holds(g.predicate, args)
        if isinstance(g, Not):
            return not ev(g.body, e)
        if isinstance(g, Or):
            return ev(g.left, e) or ev(g.right, e)
        if isinstance(g, Exists):
            for elem in range(structure.domain_size):
                e2 = dict(e)
                e2[g.var] = elem
                if ev(g.body, e2):
                    return True
            return False
        raise TypeError(f"not a formula: {g!r}")

    return ev(f, env)


def all_structures(sig: Signature, domain_size: int):
    """Every structure on 0..domain_size-1, relation tables in lexicographic order."""
    tuple_spaces = []
    for name, arity in sig.predicates:
        tuples = sorted(itertools.product(range(domain_size), repeat=arity))
        tuple_spaces.append((name, tuples))
    subset_iters = [
        [frozenset(c) for r in range(len(tuples) + 1) for c in itertools.combinations(tuples, r)]
        for _, tuples in tuple_spaces
    ]
    for combo in itertools.product(*subset_iters):
        relations = {name: rel for (name, _), rel in zip(tuple_spaces, combo)}
        yield FiniteStructure(sig, domain_size, relations)


# --- Monadic type worlds ---
#
# Without equality a purely monadic structure is characterized, up to
# elementary equivalence, by which sign patterns over the unary predicates
# are realized by at least one element.  A QTypeWorld records exactly that
# set of realized patterns; the empty set encodes the empty-domain world.


@dataclass(frozen=True)
class QTypeWorld:
    sig: Signature
    realized: frozenset[int]  # each type is a bitmask over predicate indices

    def __post_init__(self):
        if not self.sig.is_monadic():
            raise ValueError("QTypeWorld requires a purely monadic signature")
        m = len(self.sig.predicates)
        for t in self.realized:
            if not (0 <= t < 1 << m):
                raise ValueError(f"type code {t} out of range for {m} predicates")

    def to_structure(self) -> FiniteStructure:
        """Minimal structure with one element per realized type."""
        order = sorted(self.realized)
        relations: dict = {}
        for i, (name, _) in enumerate(self.sig.predicates):
            relations[name] = frozenset((e,) for e, t in enumerate(order) if (t >> i) & 1)
        return FiniteStructure(self.sig, len(order), relations)

    def satisfies(self, f: Formula) -> bool:
        return satisfies(self.to_structure(), f)

    def __str__(self):
        return "{" + ",".join(str(t) for t in sorted(self.realized)) + "}"


def enumerate_monadic_worlds(sig: Signature):
    """All 2^(2^m) worlds over m unary predicates, in subset-bitmask order."""
    if not sig.is_monadic():
        raise ValueError("enumerate_monadic_worlds requires a monadic signature")
    m = len(sig.predicates)
    n_types = 1 << m
    for mask in range(1 << n_types):
        realized = frozenset(t for t in range(n_types) if (mask >> t) & 1)
        yield QTypeWorld(sig, realized)


def duplicate_element(structure: FiniteStructure, elem: int) -> FiniteStructure:
    """Append a clone of `elem` (same unary/relational profile via substitution).

    Used to test that satisfaction only depends on realized types in the
    monadic case.
    """
    n = structure.domain_size
    relations = {}
    for name, _ in structure.sig.predicates:
        rel = set(structure.relations.get(name, frozenset()))
        extra = set()
        for tup in rel:
            if elem in tup:
                # every way of replacing occurrences of elem by the clone
                positions = [i for i, e in enumerate(tup) if e == elem]
                for choice in itertools.product([elem, n], repeat=len(positions)):
                    t2 = list(tup)
                    for p, v in zip(positions, choice):
                        t2[p] = v
                    extra.add(tuple(t2))
        relations[name] = frozenset(rel | extra)
    return FiniteStructure(structure.sig, n + 1, relations)
