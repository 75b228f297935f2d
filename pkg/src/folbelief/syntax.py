"""Constant-free first-order syntax: signatures, formula ASTs, parsing, printing.

The language has relation symbols only (no functions, no constants, no
equality).  Core connectives are negation, disjunction and the existential
quantifier; conjunction, implication and the universal quantifier are
rewritten into core form at construction time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator


class SyntaxError_(Exception):
    """Raised on malformed formula text or ill-formed ASTs."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class Signature:
    """A finite relational signature: ordered (name, arity) pairs.

    Arities are >= 1; names are unique.  Empty signatures are rejected so
    that every language has at least one atom to talk about.
    """

    predicates: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if not self.predicates:
            raise ValueError("signature must declare at least one predicate")
        seen = set()
        for name, arity in self.predicates:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise ValueError(f"bad predicate name: {name!r}")
            if name in seen:
                raise ValueError(f"duplicate predicate name: {name!r}")
            if arity < 1:
                raise ValueError(f"arity of {name!r} must be >= 1")
            seen.add(name)

    @staticmethod
    def of(*pairs: tuple[str, int]) -> "Signature":
        return Signature(tuple(pairs))

    @staticmethod
    def monadic(*names: str) -> "Signature":
        return Signature(tuple((n, 1) for n in names))

    def arity(self, name: str) -> int:
        for n, a in self.predicates:
            if n == name:
                return a
        raise KeyError(name)

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.predicates):
            if n == name:
                return i
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.predicates)

    def is_monadic(self) -> bool:
        return all(a == 1 for _, a in self.predicates)

    def __str__(self):
        return " ".join(f"{n}/{a}" for n, a in self.predicates)

    @staticmethod
    def parse(text: str) -> "Signature":
        """Parse `name/arity` tokens, one or more per line."""
        pairs = []
        for tok in text.split():
            if "/" not in tok:
                raise ValueError(f"bad signature entry {tok!r}, expected name/arity")
            name, _, arity = tok.partition("/")
            pairs.append((name, int(arity)))
        return Signature(tuple(pairs))


# --- Formula AST (core forms only) ---


class Formula:
    """Base class; instances are immutable and hashable."""

    __slots__ = ()

    def __and__(self, other):
        return and_(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Atom(Formula):
    predicate: str
    args: tuple[str, ...]

    def __str__(self):
        return f"{self.predicate}({', '.join(self.args)})"


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def __str__(self):
        return f"~{_wrap(self.body)}"


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula

    def __str__(self):
        return f"(E {self.var}) {_wrap(self.body)}"


def _wrap(f: Formula) -> str:
    if isinstance(f, (Atom, Or)):
        return str(f)
    return str(f)


def and_(left: Formula, right: Formula) -> Formula:
    """f & g  ==  ~(~f | ~g)"""
    return Not(Or(Not(left), Not(right)))


def implies(left: Formula, right: Formula) -> Formula:
    """f -> g  ==  ~f | g"""
    return Or(Not(left), right)


def forall(var: str, body: Formula) -> Formula:
    """(A x) f  ==  ~(E x) ~f"""
    return Not(Exists(var, Not(body)))


def conjoin(formulas, empty=None) -> Formula:
    """Balanced conjunction of a non-empty sequence (or `empty` fallback)."""
    fs = list(formulas)
    if not fs:
        if empty is None:
            raise ValueError("empty conjunction with no fallback")
        return empty
    while len(fs) > 1:
        fs = [and_(fs[i], fs[i + 1]) if i + 1 < len(fs) else fs[i] for i in range(0, len(fs), 2)]
    return fs[0]


def disjoin(formulas, empty=None) -> Formula:
    fs = list(formulas)
    if not fs:
        if empty is None:
            raise ValueError("empty disjunction with no fallback")
        return empty
    while len(fs) > 1:
        fs = [Or(fs[i], fs[i + 1]) if i + 1 < len(fs) else fs[i] for i in range(0, len(fs), 2)]
    return fs[0]


def free_variables(f: Formula) -> tuple[str, ...]:
    """Free variables in first-appearance order."""
    out: list[str] = []

    def walk(g: Formula, bound: frozenset):
        if isinstance(g, Atom):
            for a in g.args:
                if a not in bound and a not in out:
                    out.append(a)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, Or):
            walk(g.left, bound)
            walk(g.right, bound)
        elif isinstance(g, Exists):
            walk(g.body, bound | {g.var})
        else:
            raise TypeError(f"not a formula: {g!r}")

    walk(f, frozenset())
    return tuple(out)


def is_sentence(f: Formula) -> bool:
    return not free_variables(f)


def depth(f: Formula) -> int:
    """Maximal number of nested quantifiers along any path of the AST."""
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return depth(f.body)
    if isinstance(f, Or):
        return max(depth(f.left), depth(f.right))
    if isinstance(f, Exists):
        return 1 + depth(f.body)
    raise TypeError(f"not a formula: {f!r}")


def universal_closure(f: Formula) -> Formula:
    """Prepend a universal quantifier for each free variable, first-appearance order."""
    out = f
    for v in reversed(free_variables(f)):
        out = forall(v, out)
    return out


def normalize(f: Formula) -> Formula:
    """Rename bound variables to x1, x2, ... in binder order.

    After normalization, alpha-equivalent formulas compare equal with `==`.
    Free variables are left untouched.
    """
    counter = [0]

    def walk(g: Formula, env: dict) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.predicate, tuple(env.get(a, a) for a in g.args))
        if isinstance(g, Not):
            return Not(walk(g.body, env))
        if isinstance(g, Or):
            return Or(walk(g.left, env), walk(g.right, env))
        if isinstance(g, Exists):
            counter[0] += 1
            fresh = f"x{counter[0]}"
            env2 = dict(env)
            env2[g.var] = fresh
            return Exists(fresh, walk(g.body, env2))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})


def validate(f: Formula, sig: Signature) -> None:
    """Check every atom against the signature; raises SyntaxError_."""
    if isinstance(f, Atom):
        try:
            ar = sig.arity(f.predicate)
        except KeyError:
            raise SyntaxError_(f"unknown predicate {f.predicate!r}") from None
        if ar != len(f.args):
            raise SyntaxError_(
                f"arity mismatch: {f.predicate} expects {ar} arguments, got {len(f.args)}"
            )
    elif isinstance(f, Not):
        validate(f.body, sig)
    elif isinstance(f, Or):
        validate(f.left, sig)
        validate(f.right, sig)
    elif isinstance(f, Exists):
        validate(f.body, sig)
    else:
        raise SyntaxError_(f"not a formula: {f!r}")


def print_formula(f: Formula) -> str:
    """Concrete text form; parse_formula round-trips core ASTs."""
    return str(f)


# --- Parser ---

_TOKEN = re.compile(
    r"\s*(?:(?P<lpar>\()|(?P<rpar>\))|(?P<arrow>->)|(?P<op>[~|&,])|(?P<name>[A-Za-z_][A-Za-z0-9_]*))"
)


class _Parser:
    """Recursive descent over the grammar:

    form := atom | "~" form | "(" form "|" form ")" | "(" form "&" form ")"
          | "(" form "->" form ")" | "(A" var ")" form | "(E" var ")" form
    atom := name "(" var ("," var)* ")"
    """

    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                if text[pos:].strip():
                    raise SyntaxError_(f"unexpected character {text[pos]!r}", pos)
                break
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, kind, value=None):
        k, v, p = self.next()
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            raise SyntaxError_(f"expected {want!r}, found {v!r}", p)
        return v

    def parse(self) -> Formula:
        f = self.form()
        k, v, p = self.peek()
        if k is not None:
            raise SyntaxError_(f"trailing input {v!r}", p)
        return f

    def form(self) -> Formula:
        k, v, p = self.peek()
        if k == "op" and v == "~":
            self.next()
            return Not(self.form())
        if k == "name":
            return self.atom()
        if k == "lpar":
            self.next()
            k2, v2, _ = self.peek()
            if k2 == "name" and v2 in ("A", "E"):
                self.next()
                var = self.expect("name")
                self.expect("rpar")
                body = self.form()
                return Exists(var, body) if v2 == "E" else forall(var, body)
            left = self.form()
            k3, v3, p3 = self.next()
            if k3 == "op" and v3 == "|":
                right = self.form()
                self.expect("rpar")
                return Or(left, right)
            if k3 == "op" and v3 == "&":
                right = self.form()
                self.expect("rpar")
                return and_(left, right)
            if k3 == "arrow":
                right = self.form()
                self.expect("rpar")
                return implies(left, right)
            raise SyntaxError_(f"expected connective, found {v3!r}", p3)
        raise SyntaxError_(f"expected formula, found {v!r}", p)

    def atom(self) -> Formula:
        name = self.expect("name")
        self.expect("lpar")
        args = [self.expect("name")]
        while True:
            k, v, _ = self.peek()
            if k == "op" and v == ",":
                self.next()
                args.append(self.expect("name"))
            else:
                break
        self.expect("rpar")
        atom = Atom(name, tuple(args))
        validate(atom, self.sig)
        return atom


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse formula text against a signature (free variables allowed)."""
    return _Parser(text, sig).parse()


def parse_sentence(text: str, sig: Signature, close: bool = False) -> Formula:
    """Parse and require a sentence; with close=True, take the universal closure."""
    f = parse_formula(text, sig)
    fv = free_variables(f)
    if fv and not close:
        raise SyntaxError_(f"unbound variables {', '.join(fv)} (pass close=True to quantify)")
    return universal_closure(f) if fv else f


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, Or):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, Exists):
        yield from subformulas(f.body)
