"""Constituents over a relational signature: indexing, enumeration, rendering,
truncation/refinement, and the decidable inconsistency test.

Representation
--------------
An attributive description of depth d over terms 1..k is a pair of sign
vectors packed into integers:

* ``base``: one bit per atom mentioning term k (the deepest term), in table
  order; bit i is the sign of the i-th atom.
* ``children``: for d >= 1, one bit per index of the full space of depth-(d-1)
  attributives over k+1 terms, in canonical index order; bit j says whether an
  individual of the j-th kind exists.

A full constituent adds an ``apart`` vector signing every atom over terms
1..k-1.  Atom tables are layered: atoms(k) = atoms(k-1) ++ last_atoms(k),
each block sorted by (predicate index, argument tuple), so sign vectors of
adjacent term counts concatenate by bit-shift.

Canonical index of an attributive within its space is
``base * 2^child_space_size + children``; every enumeration, pruning choice
and text form derives from this order, which keeps games and snapshots
reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .syntax import Atom, Exists, Formula, Not, Or, Signature, conjoin, disjoin

DEFAULT_CAP = 1 << 20
# Exact counts are plain integers; refuse to build numbers beyond this many bits.
MAX_COUNT_BITS = 1 << 24


class CapExceeded(Exception):
    """An enumeration would exceed the configured id cap."""


@dataclass(frozen=True)
class Attributive:
    depth: int
    k: int
    base: int
    children: int | None  # None iff depth == 0

    def __post_init__(self):
        if (self.children is None) != (self.depth == 0):
            raise ValueError("children vector present iff depth >= 1")


@dataclass(frozen=True)
class Constituent:
    """apart signs atoms over terms 1..k-1; attr carries the rest."""

    apart: int
    attr: Attributive

    @property
    def depth(self) -> int:
        return self.attr.depth

    @property
    def k(self) -> int:
        return self.attr.k

    def is_top(self) -> bool:
        return self.depth == 0 and self.k == 0


AtomKey = tuple[int, tuple[int, ...]]  # (predicate index, term indices 1..k)


def _mentions(atom: AtomKey, term: int) -> bool:
    return term in atom[1]


class ConstituentSpace:
    """All constituent machinery for one signature.

    Ids are plain data; this object owns the atom tables, canonical index
    maps and caches that give them meaning.
    """

    def __init__(self, sig: Signature, cap: int = DEFAULT_CAP):
        self.sig = sig
        self.cap = cap
        self._attr_count: dict[tuple[int, int], int] = {}
        self._trunc_map: dict[tuple[int, int], list[int]] = {}
        self._pre_cache: dict[Attributive, int] = {}
        self._incons_cache: dict[tuple, bool] = {}

    # --- atom tables ---

    @lru_cache(maxsize=None)
    def last_atoms(self, k: int) -> tuple[AtomKey, ...]:
        """Atoms over terms 1..k mentioning term k, sorted by (pred, args)."""
        if k <= 0:
            return ()
        out = []
        for p, (_, arity) in enumerate(self.sig.predicates):
            for args in itertools.product(range(1, k + 1), repeat=arity):
                if k in args:
                    out.append((p, args))
        out.sort()
        return tuple(out)

    @lru_cache(maxsize=None)
    def atoms(self, k: int) -> tuple[AtomKey, ...]:
        """All atoms over terms 1..k, layered by deepest term."""
        if k <= 0:
            return ()
        return self.atoms(k - 1) + self.last_atoms(k)

    def apart_len(self, k: int) -> int:
        return len(self.atoms(k - 1)) if k >= 1 else 0

    # --- counting ---

    def attr_count(self, d: int, k: int) -> int:
        """|space of depth-d attributives over k terms|, exact."""
        key = (d, k)
        if key in self._attr_count:
            return self._attr_count[key]
        if d == 0:
            n = 1 << len(self.last_atoms(k))
        else:
            exponent = self.attr_count(d - 1, k + 1)
            if exponent > MAX_COUNT_BITS:
                raise ValueError(
                    f"constituent count at depth {d}, k={k} needs 2^{exponent} values; "
                    "too large to materialize"
                )
            n = (1 << len(self.last_atoms(k))) << exponent
        self._attr_count[key] = n
        return n

    def constituent_count(self, d: int, k: int = 0) -> int:
        return (1 << self.apart_len(k)) * self.attr_count(d, k)

    def child_space_size(self, d: int, k: int) -> int:
        """Size of the sign-map domain for depth-d attributives over k terms."""
        if d == 0:
            return 0
        return self.attr_count(d - 1, k + 1)

    # --- canonical indexing ---

    def attr_by_index(self, d: int, k: int, idx: int) -> Attributive:
        if d == 0:
            return Attributive(0, k, idx, None)
        n = self.child_space_size(d, k)
        if n > MAX_COUNT_BITS:
            raise CapExceeded(f"child space of depth {d}, k={k} too large to index")
        return Attributive(d, k, idx >> n, idx & ((1 << n) - 1))

    def attr_index(self, a: Attributive) -> int:
        if a.depth == 0:
            return a.base
        return (a.base << self.child_space_size(a.depth, a.k)) | a.children

    def enumerate_attr(self, d: int, k: int):
        total = self.attr_count(d, k)
        if total > self.cap:
            raise CapExceeded(f"{total} depth-{d} attributives over {k} terms exceeds cap {self.cap}")
        for idx in range(total):
            yield self.attr_by_index(d, k, idx)

    def enumerate_constituents(self, d: int, k: int = 0):
        """Every depth-d constituent over k terms, (apart, attr-index) ascending."""
        total = self.constituent_count(d, k)
        if total > self.cap:
            raise CapExceeded(f"{total} depth-{d} constituents exceeds cap {self.cap}")
        for apart in range(1 << self.apart_len(k)):
            for attr in self.enumerate_attr(d, k):
                yield Constituent(apart, attr)

    def top(self) -> Constituent:
        return Constituent(0, Attributive(0, 0, 0, None))

    def sort_key(self, c: Constituent):
        return (c.depth, c.k, c.apart, c.attr.base, c.attr.children or 0)

    # --- sign lookups ---

    def positive_positions(self, a: Attributive):
        """Indices j with sign bit 1, ascending."""
        if a.depth == 0:
            return
        bits = a.children
        j = 0
        while bits:
            if bits & 1:
                yield j
            bits >>= 1
            j += 1

    def child_at(self, a: Attributive, j: int) -> Attributive:
        return self.attr_by_index(a.depth - 1, a.k + 1, j)

    def positive_children(self, a: Attributive):
        for j in self.positive_positions(a):
            yield j, self.child_at(a, j)

    def base_signs(self, a: Attributive) -> dict[AtomKey, int]:
        return {atom: (a.base >> i) & 1 for i, atom in enumerate(self.last_atoms(a.k))}

    def apart_signs(self, c: Constituent) -> dict[AtomKey, int]:
        return {atom: (c.apart >> i) & 1 for i, atom in enumerate(self.atoms(c.k - 1))}

    def atom_sign(self, c: Constituent, atom: AtomKey) -> int:
        """Sign a constituent gives to an atom over its own terms."""
        last = self.last_atoms(c.k)
        if atom in last:
            return (c.attr.base >> last.index(atom)) & 1
        outer = self.atoms(c.k - 1)
        return (c.apart >> outer.index(atom)) & 1

    def extend_apart(self, c: Constituent) -> int:
        """Sign vector over atoms(k), for building (k+1)-term constituents."""
        return c.apart | (c.attr.base << self.apart_len(c.k))

    # --- truncation (one depth layer off) ---

    def truncation_index_map(self, d: int, k: int) -> list[int]:
        """For each j in the depth-d space over k terms, the index of its truncation."""
        key = (d, k)
        if key not in self._trunc_map:
            self._trunc_map[key] = [
                self.attr_index(self.truncate_attr(a)) for a in self.enumerate_attr(d, k)
            ]
        return self._trunc_map[key]

    def truncate_attr(self, a: Attributive) -> Attributive:
        if a.depth < 1:
            raise ValueError("cannot truncate a depth-0 attributive")
        if a.depth == 1:
            return Attributive(0, a.k, a.base, None)
        out = 0
        if a.children:
            tmap = self.truncation_index_map(a.depth - 1, a.k + 1)
            for j in self.positive_positions(a):
                out |= 1 << tmap[j]
        return Attributive(a.depth - 1, a.k, a.base, out)

    def truncate(self, c: Constituent) -> Constituent:
        return Constituent(c.apart, self.truncate_attr(c.attr))

    # --- refinement (preimages of truncation) ---

    def refine_count(self, c: Constituent) -> int:
        return self._pre(c.attr)

    def _pre(self, a: Attributive) -> int:
        """Number of one-step refinements (truncation preimages)."""
        if a in self._pre_cache:
            return self._pre_cache[a]
        if a.depth == 0:
            n = self.attr_count(0, a.k + 1)
            if n > MAX_COUNT_BITS:
                raise CapExceeded("refinement count too large")
            out = 1 << n
        else:
            out = 1
            for _, child in self.positive_children(a):
                e = self._pre(child)
                if e > MAX_COUNT_BITS:
                    raise CapExceeded("refinement count too large")
                out *= (1 << e) - 1
        self._pre_cache[a] = out
        return out

    def refine_children(self, c: Constituent):
        """Depth-(d+1) constituents whose truncation is c, deterministic order.

        These sets partition the next depth: truncation is single-valued, so
        the refinement tree needs no further edge pruning.
        """
        n = self.refine_count(c)
        if n > self.cap:
            raise CapExceeded(f"{n} refinements of constituent exceeds cap {self.cap}")
        a = c.attr
        if a.depth == 0:
            size = self.attr_count(0, a.k + 1)
            for vec in range(1 << size):
                yield Constituent(c.apart, Attributive(1, a.k, a.base, vec))
            return
        if a.children == 0:
            # nothing positive: the lone refinement is again all-negative
            yield Constituent(c.apart, Attributive(a.depth + 1, a.k, a.base, 0))
            return
        # group the new sign-map domain by the truncation of each position
        new_space = (a.depth, a.k + 1)
        tmap = self.truncation_index_map(*new_space)
        groups: dict[int, list[int]] = {}
        for j, t in enumerate(tmap):
            groups.setdefault(t, []).append(j)
        positive = list(self.positive_positions(a))
        choice_sets = []
        for p in positive:
            members = groups.get(p, [])
            patterns = []
            for mask in range(1, 1 << len(members)):
                vec = 0
                for bit, j in enumerate(members):
                    if (mask >> bit) & 1:
                        vec |= 1 << j
                patterns.append(vec)
            choice_sets.append(patterns)
        for combo in itertools.product(*choice_sets):
            vec = 0
            for part in combo:
                vec |= part
            yield Constituent(c.apart, Attributive(a.depth + 1, a.k, a.base, vec))

    def expand(self, e: int, c: Constituent):
        """All depth-(d+e) refinements of c; expand(0, c) yields c itself."""
        if e == 0:
            yield c
            return
        for child in self.refine_children(c):
            yield from self.expand(e - 1, child)

    # --- rendering to formulas ---

    def _term_vars(self, k: int) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(1, k + 1))

    def _tautology(self) -> Formula:
        name, arity = self.sig.predicates[0]
        a = Atom(name, ("x1",) * arity)
        body = Or(a, Not(a))
        return Not(Exists("x1", Not(body)))

    def _signed_atom(self, atom: AtomKey, sign: int, terms) -> Formula:
        name, _ = self.sig.predicates[atom[0]]
        f: Formula = Atom(name, tuple(terms[i - 1] for i in atom[1]))
        return f if sign else Not(f)

    def render_attr(self, a: Attributive, terms=None) -> Formula:
        terms = terms if terms is not None else self._term_vars(a.k)
        parts = [
            self._signed_atom(atom, (a.base >> i) & 1, terms)
            for i, atom in enumerate(self.last_atoms(a.k))
        ]
        if a.depth >= 1:
            size = self.child_space_size(a.depth, a.k)
            if self.attr_count(a.depth - 1, a.k + 1) > self.cap:
                raise CapExceeded("cannot render: child space exceeds cap")
            var = f"x{len(terms) + 1}"
            sub_terms = terms + (var,)
            positives = []
            for j in range(size):
                child = self.child_at(a, j)
                body = self.render_attr(child, sub_terms)
                if (a.children >> j) & 1:
                    positives.append(body)
                    parts.append(Exists(var, body))
                else:
                    parts.append(Not(Exists(var, body)))
            # equivalent form: every further individual is of a positive kind
            if positives:
                parts.append(Not(Exists(var, Not(disjoin(positives)))))
            else:
                name, arity = self.sig.predicates[0]
                at = Atom(name, (var,) * arity)
                parts.append(Not(Exists(var, Or(at, Not(at)))))
        if not parts:  # only the depth-0, 0-term description
            return self._tautology()
        return conjoin(parts)

    def render(self, c: Constituent) -> Formula:
        terms = self._term_vars(c.k)
        parts = [
            self._signed_atom(atom, (c.apart >> i) & 1, terms)
            for i, atom in enumerate(self.atoms(c.k - 1))
        ]
        attr_part = self.render_attr(c.attr, terms)
        if not parts:
            return attr_part
        return conjoin(parts + [attr_part])

    # --- decidable inconsistency test ---
    #
    # Sound, not complete at fixed depth.  A description is flagged when any
    # of these fire:
    #   (a) an atom picks up both signs once a child's base is aligned with
    #       the enclosing layers under a substitution;
    #   (b) a positively signed child is itself flagged, recursively;
    #   (c) instantiation closure: with k >= 1 terms, setting the new term to
    #       an existing one must be base-compatible with at least one
    #       positively signed child;
    #   (d) sibling closure, both directions: the individual described by a
    #       positive grandchild must be base-compatible with some positive
    #       child, and every positive child must be base-compatible with some
    #       positive grandchild of each positive sibling.
    # (d) looks only at substituted atoms that avoid the middle term, which
    # keeps it sound for non-monadic signatures.

    def trivially_inconsistent(self, c: Constituent) -> bool:
        env = {}
        for i, atom in enumerate(self.atoms(c.k - 1)):
            env[atom] = (c.apart >> i) & 1
        return self._attr_inconsistent(c.attr, env)

    def _subst_signs(self, signs: dict[AtomKey, int], source: int, target: int,
                     drop_mentions: int | None = None) -> dict[AtomKey, int] | None:
        """Substitute term source := target in an atom-sign map.

        Atoms mentioning drop_mentions are ignored.  Returns None on an
        internal sign clash (condition (a) firing within the substitution).
        """
        out: dict[AtomKey, int] = {}
        for (p, args), sign in signs.items():
            if drop_mentions is not None and drop_mentions in args:
                continue
            new = (p, tuple(target if t == source else t for t in args))
            if out.setdefault(new, sign) != sign:
                return None
        return out

    def _compatible(self, partial: dict[AtomKey, int], reference: dict[AtomKey, int]) -> bool:
        return all(reference.get(atom, sign) == sign for atom, sign in partial.items())

    def _attr_inconsistent(self, a: Attributive, env: dict[AtomKey, int]) -> bool:
        key = (a, tuple(sorted(env.items())))
        if key in self._incons_cache:
            return self._incons_cache[key]
        result = self._attr_inconsistent_raw(a, env)
        self._incons_cache[key] = result
        return result

    def _attr_inconsistent_raw(self, a: Attributive, env: dict[AtomKey, int]) -> bool:
        if a.depth == 0:
            return False
        k = a.k
        full_env = dict(env)
        full_env.update(self.base_signs(a))
        positives = list(self.positive_children(a))

        # (b) recurse through positive children
        for _, child in positives:
            if self._attr_inconsistent(child, full_env):
                return True

        child_bases = [(j, child, self.base_signs(child)) for j, child in positives]

        # (c) every existing term must fit some positively signed child
        if k >= 1:
            for i in range(1, k + 1):
                ok = False
                for _, _, bsigns in child_bases:
                    sub = self._subst_signs(bsigns, k + 1, i)
                    if sub is not None and self._compatible(sub, full_env):
                        ok = True
                        break
                if not ok:
                    return True

        # (d) sibling closure both ways, at the grandchild level
        deep = [(j, child, bs) for j, child, bs in child_bases if child.depth >= 1]
        if deep:
            sibling_bases = [bs for _, _, bs in child_bases]
            for _, child, _ in deep:
                grand_subs = []
                for _, grand in self.positive_children(child):
                    gsigns = self.base_signs(grand)
                    sub = self._subst_signs(gsigns, k + 2, k + 1, drop_mentions=k + 1)
                    grand_subs.append(sub)
                # each positive grandchild's individual must fit some sibling
                for sub in grand_subs:
                    if sub is None:
                        continue
                    if not any(self._compatible(sub, sb) for sb in sibling_bases):
                        return True
                # each sibling must fit some positive grandchild
                for sb in sibling_bases:
                    if not any(
                        sub is not None and self._compatible(sub, sb) for sub in grand_subs
                    ):
                        return True
        return False

    def inconsistent_at_effort(self, c: Constituent, effort: int) -> bool:
        """True iff every depth-(d+effort) refinement is flagged; monotone in effort."""
        for e in range(effort + 1):
            if all(self.trivially_inconsistent(x) for x in self.expand(e, c)):
                return True
        return False

    # --- stable text form ---

    def attr_text(self, a: Attributive) -> str:
        bits = "".join(str((a.base >> i) & 1) for i in range(len(self.last_atoms(a.k))))
        if a.depth == 0:
            return f"[(base={bits})]"
        size = self.child_space_size(a.depth, a.k)
        if size > self.cap:
            raise CapExceeded("cannot print: child space exceeds cap")
        parts = []
        for j in range(size):
            sign = "+" if (a.children >> j) & 1 else "-"
            parts.append(sign + self.attr_text(self.child_at(a, j)))
        return f"[(base={bits}) {' '.join(parts)}]"

    def text(self, c: Constituent) -> str:
        body = self.attr_text(c.attr)
        n = self.apart_len(c.k)
        if n == 0:
            return body
        bits = "".join(str((c.apart >> i) & 1) for i in range(n))
        return f"[(apart={bits}) {body}]"

    def parse_text(self, text: str, depth: int, k: int = 0) -> Constituent:
        """Inverse of text(); validates nested child bodies against canon."""
        s = text.strip()
        apart = 0
        if s.startswith("[(apart="):
            end = s.index(")")
            bits = s[len("[(apart="):end]
            if len(bits) != self.apart_len(k):
                raise ValueError("apart width mismatch")
            for i, b in enumerate(bits):
                apart |= (b == "1") << i
            s = s[end + 1:-1].strip()
        attr, rest = self._parse_attr(s, depth, k)
        if rest.strip():
            raise ValueError(f"trailing text {rest!r}")
        return Constituent(apart, attr)

    def _parse_attr(self, s: str, depth: int, k: int) -> tuple[Attributive, str]:
        s = s.lstrip()
        if not s.startswith("[(base="):
            raise ValueError(f"expected '[(base=', found {s[:12]!r}")
        end = s.index(")")
        bits = s[len("[(base="):end]
        if len(bits) != len(self.last_atoms(k)):
            raise ValueError(f"base width mismatch at k={k}")
        base = 0
        for i, b in enumerate(bits):
            if b not in "01":
                raise ValueError(f"bad base bit {b!r}")
            base |= (b == "1") << i
        s = s[end + 1:]
        if depth == 0:
            s = s.lstrip()
            if not s.startswith("]"):
                raise ValueError("expected ']' closing depth-0 id")
            return Attributive(0, k, base, None), s[1:]
        size = self.child_space_size(depth, k)
        children = 0
        for j in range(size):
            s = s.lstrip()
            sign, s = s[0], s[1:]
            if sign not in "+-":
                raise ValueError(f"expected sign, found {sign!r}")
            child, s = self._parse_attr(s, depth - 1, k + 1)
            if self.attr_index(child) != j:
                raise ValueError(f"child {j} out of canonical order")
            if sign == "+":
                children |= 1 << j
        s = s.lstrip()
        if not s.startswith("]"):
            raise ValueError("expected ']' closing id")
        return Attributive(depth, k, base, children), s[1:]
