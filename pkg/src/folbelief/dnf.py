"""Distributive normal forms and three-valued consistency decisions.

Two oracle backends:

* ``ExactMonadicOracle`` decides monadic constituents exactly by evaluating
  them over the finite set of type worlds; it never answers unknown.
* ``BoundedOracle`` searches finite models up to a domain bound and applies
  the effort-bounded inconsistency test; both definite answers are sound,
  everything else is unknown.

The dnf conversion is a structural recursion over the sentence.  Negation
complements within the full constituent space at the working depth, so which
inconsistent constituents end up in a dnf is fixed by the recursion, not by
semantics; that is what makes the complement law exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .constituents import Attributive, CapExceeded, Constituent, ConstituentSpace
from .semantics import QTypeWorld, all_structures, enumerate_monadic_worlds, satisfies
from .syntax import (
    Atom,
    Exists,
    Formula,
    Not,
    Or,
    depth as formula_depth,
    free_variables,
    normalize,
)


class Decision(enum.Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    UNKNOWN = "unknown"


class ExactMonadicOracle:
    """Exact decisions for purely monadic signatures.

    Monadic attributives mention each term through unary atoms only, so
    whether an element satisfies one depends just on the element's type and
    on which types the world realizes.  That makes evaluation memoizable on
    (id, type, world).
    """

    def __init__(self, space: ConstituentSpace):
        if not space.sig.is_monadic():
            raise ValueError("exact backend requires a monadic signature")
        self.space = space
        self.worlds = tuple(enumerate_monadic_worlds(space.sig))
        self._eval_cache: dict = {}

    def attr_realized(self, a: Attributive, elem_type: int, world: QTypeWorld) -> bool:
        """Does an element of elem_type satisfy `a` in `world`?"""
        key = (a, elem_type, world.realized)
        hit = self._eval_cache.get(key)
        if hit is not None:
            return hit
        # base bits are exactly the unary signs of the deepest term
        out = a.base == elem_type
        if out and a.depth >= 1:
            size = self.space.child_space_size(a.depth, a.k)
            for j in range(size):
                child = self.space.child_at(a, j)
                realized = any(self.attr_realized(child, t, world) for t in world.realized)
                if realized != bool((a.children >> j) & 1):
                    out = False
                    break
        self._eval_cache[key] = out
        return out

    def holds_in(self, c: Constituent, world: QTypeWorld) -> bool:
        """Sentence-constituent truth in a type world."""
        if c.k != 0:
            raise ValueError("holds_in expects a sentence constituent (k=0)")
        if c.depth == 0:
            return True
        size = self.space.child_space_size(c.depth, 0)
        for j in range(size):
            child = self.space.child_at(c.attr, j)
            realized = any(self.attr_realized(child, t, world) for t in world.realized)
            if realized != bool((c.attr.children >> j) & 1):
                return False
        return True

    def world_constituent(self, world: QTypeWorld, d: int) -> Constituent:
        """The unique depth-d sentence constituent the world satisfies."""
        if d == 0:
            return self.space.top()
        size = self.space.child_space_size(d, 0)
        if size > self.space.cap:
            raise CapExceeded("child space exceeds cap")
        vec = 0
        for j in range(size):
            child = self.space.attr_by_index(d - 1, 1, j)
            if any(self.attr_realized(child, t, world) for t in world.realized):
                vec |= 1 << j
        return Constituent(0, Attributive(d, 0, 0, vec))

    def decide(self, c: Constituent) -> Decision:
        if any(self.holds_in(c, w) for w in self.worlds):
            return Decision.CONSISTENT
        return Decision.INCONSISTENT

    def formula_holds(self, f: Formula, world: QTypeWorld) -> bool:
        return world.satisfies(f)


class BoundedOracle:
    """Sound, incomplete backend: model search up to a size bound plus the
    effort-bounded inconsistency test."""

    def __init__(self, space: ConstituentSpace, effort: int = 0, max_domain: int = 2):
        self.space = space
        self.effort = effort
        self.max_domain = max_domain

    def decide(self, c: Constituent) -> Decision:
        rendered = self.space.render(c)
        fv = free_variables(rendered)
        for n in range(self.max_domain + 1):
            if fv and n == 0:
                continue
            for structure in all_structures(self.space.sig, n):
                envs = [{}]
                if fv:
                    envs = []
                    _assign(list(fv), n, {}, envs)
                if any(satisfies(structure, rendered, e) for e in envs):
                    return Decision.CONSISTENT
        if self.space.inconsistent_at_effort(c, self.effort):
            return Decision.INCONSISTENT
        return Decision.UNKNOWN


def _assign(names, n, acc, out):
    if not names:
        out.append(dict(acc))
        return
    head, *rest = names
    for v in range(n):
        acc[head] = v
        _assign(rest, n, acc, out)
    acc.pop(head, None)


def make_oracle(space: ConstituentSpace, backend: str = "exact", effort: int = 0,
                max_domain: int = 2):
    if backend == "exact":
        return ExactMonadicOracle(space)
    if backend == "bounded":
        return BoundedOracle(space, effort=effort, max_domain=max_domain)
    raise ValueError(f"unknown oracle backend {backend!r}")


@dataclass(frozen=True)
class DnfSet:
    depth: int
    k: int
    members: frozenset[Constituent]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, c):
        return c in self.members


class DnfEngine:
    def __init__(self, space: ConstituentSpace):
        self.space = space
        self._memo: dict = {}
        self._space_memo: dict = {}

    # structural key so alpha-variants share cache entries
    def _key(self, f: Formula, env: dict) -> tuple:
        if isinstance(f, Atom):
            try:
                args = tuple(env[a] for a in f.args)
            except KeyError as exc:
                raise ValueError(f"unbound variable {exc.args[0]!r} in dnf conversion") from None
            return ("a", self.space.sig.index(f.predicate), args)
        if isinstance(f, Not):
            return ("n", self._key(f.body, env))
        if isinstance(f, Or):
            return ("o", self._key(f.left, env), self._key(f.right, env))
        if isinstance(f, Exists):
            env2 = dict(env)
            env2[f.var] = len(env) + 1
            return ("e", self._key(f.body, env2))
        raise TypeError(f"not a formula: {f!r}")

    def _full_space(self, d: int, k: int) -> frozenset:
        key = (d, k)
        if key not in self._space_memo:
            self._space_memo[key] = frozenset(self.space.enumerate_constituents(d, k))
        return self._space_memo[key]

    def dnf(self, sentence: Formula, d: int) -> DnfSet:
        """Depth-d dnf of a sentence; requires depth(sentence) <= d."""
        if free_variables(sentence):
            raise ValueError("dnf expects a sentence; take the universal closure first")
        if formula_depth(sentence) > d:
            raise ValueError(
                f"formula depth {formula_depth(sentence)} exceeds requested depth {d}"
            )
        return DnfSet(d, 0, self._dnf(normalize(sentence), d, {}, 0))

    def _dnf(self, f: Formula, d: int, env: dict, k: int) -> frozenset:
        memo_key = (self._key(f, env), d, k)
        hit = self._memo.get(memo_key)
        if hit is not None:
            return hit
        out = self._dnf_raw(f, d, env, k)
        self._memo[memo_key] = out
        return out

    def _dnf_raw(self, f: Formula, d: int, env: dict, k: int) -> frozenset:
        space = self.space
        if isinstance(f, Atom):
            atom = (space.sig.index(f.predicate), tuple(env[a] for a in f.args))
            return frozenset(
                c for c in self._full_space(d, k) if space.atom_sign(c, atom) == 1
            )
        if isinstance(f, Not):
            return self._full_space(d, k) - self._dnf(f.body, d, env, k)
        if isinstance(f, Or):
            return self._dnf(f.left, d, env, k) | self._dnf(f.right, d, env, k)
        if isinstance(f, Exists):
            if d < 1:
                raise ValueError("existential at depth 0")
            env2 = dict(env)
            env2[f.var] = k + 1
            body = self._dnf(f.body, d - 1, env2, k + 1)
            out = set()
            for c in self._full_space(d, k):
                ext = space.extend_apart(c)
                for _, child in space.positive_children(c.attr):
                    if Constituent(ext, child) in body:
                        out.add(c)
                        break
            return frozenset(out)
        raise TypeError(f"not a formula: {f!r}")

    def contains(self, sentence: Formula, d: int, c: Constituent) -> bool:
        """Membership test that never enumerates the top-level space.

        Lower-level spaces (more free terms, less depth) are still built, but
        those stay small even when the sentence space is out of cap.
        """
        if formula_depth(sentence) > d:
            raise ValueError("formula depth exceeds requested depth")
        if c.depth != d or c.k != 0:
            raise ValueError("constituent depth/terms mismatch")
        return self._contains(normalize(sentence), d, {}, c)

    def _contains(self, f: Formula, d: int, env: dict, c: Constituent) -> bool:
        space = self.space
        if isinstance(f, Atom):
            atom = (space.sig.index(f.predicate), tuple(env[a] for a in f.args))
            return space.atom_sign(c, atom) == 1
        if isinstance(f, Not):
            return not self._contains(f.body, d, env, c)
        if isinstance(f, Or):
            return self._contains(f.left, d, env, c) or self._contains(f.right, d, env, c)
        if isinstance(f, Exists):
            env2 = dict(env)
            env2[f.var] = c.k + 1
            body = self._dnf(f.body, d - 1, env2, c.k + 1)
            ext = space.extend_apart(c)
            return any(
                Constituent(ext, child) in body
                for _, child in space.positive_children(c.attr)
            )
        raise TypeError(f"not a formula: {f!r}")

    def expand_dnf(self, s: DnfSet, e: int) -> DnfSet:
        members = set()
        for c in s.members:
            members.update(self.space.expand(e, c))
        return DnfSet(s.depth + e, s.k, frozenset(members))

    def complement(self, s: DnfSet) -> DnfSet:
        return DnfSet(s.depth, s.k, self._full_space(s.depth, s.k) - s.members)
