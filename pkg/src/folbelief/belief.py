"""Weighted refinement trees: coherent belief assignment, renormalization,
the per-depth update sequence, sentence beliefs and the derived prover.

Weights are exact Fractions throughout so that coherence, per-depth
normalization and the prover's sum-to-one test are decidable equalities.

Trees are lazily materialized: a node without materialized children is a
frontier node and implicitly carries its weight spread over its unmaterialized
subtree.  Renormalization never changes the materialized structure, only the
weight map, so the result shares structure with its input.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable

from .constituents import Constituent, ConstituentSpace
from .dnf import DnfEngine
from .syntax import Formula, free_variables, universal_closure
from .syntax import depth as formula_depth


class UndefinedRenorm(Exception):
    """No same-depth positive weight remains to absorb the refuted mass."""


class NodeSpace:
    """Minimal interface the tree machinery needs from a node universe."""

    def root(self):
        raise NotImplementedError

    def children(self, node) -> list:
        raise NotImplementedError

    def depth_of(self, node) -> int:
        raise NotImplementedError

    def flagged(self, node) -> bool:
        """Decidable inconsistency mark used by the update sequence."""
        raise NotImplementedError

    def count_at_depth(self, d: int) -> int:
        raise NotImplementedError

    def node_text(self, node) -> str:
        raise NotImplementedError

    def parse_node(self, text: str, d: int):
        raise NotImplementedError

    def coarsen(self, node):
        """The node one depth up; parent in the refinement tree."""
        raise NotImplementedError

    def sort_key(self, node):
        return (self.depth_of(node), self.node_text(node))

    kind = "abstract"


class ConstituentNodes(NodeSpace):
    """Sentence constituents of one signature as tree nodes."""

    kind = "constituents"

    def __init__(self, space: ConstituentSpace):
        self.space = space

    def root(self) -> Constituent:
        return self.space.top()

    def children(self, node: Constituent) -> list:
        return list(self.space.refine_children(node))

    def depth_of(self, node: Constituent) -> int:
        return node.depth

    def flagged(self, node: Constituent) -> bool:
        return self.space.trivially_inconsistent(node)

    def count_at_depth(self, d: int) -> int:
        return self.space.constituent_count(d, 0)

    def node_text(self, node: Constituent) -> str:
        return self.space.text(node)

    def parse_node(self, text: str, d: int) -> Constituent:
        return self.space.parse_text(text, d, 0)

    def coarsen(self, node: Constituent) -> Constituent:
        return self.space.truncate(node)

    def sort_key(self, node: Constituent):
        return self.space.sort_key(node)


class ExplicitNodes(NodeSpace):
    """A hand-built tree universe; nodes are strings.

    Worked examples and randomized law checks run on these, since the weight
    machinery only sees the tree shape.
    """

    kind = "explicit"

    def __init__(self, root: str, children: dict[str, list[str]], flags: set | None = None):
        self._root = root
        self._children = {k: list(v) for k, v in children.items()}
        self._flags = set(flags or ())
        self._depth = {root: 0}
        stack = [root]
        while stack:
            n = stack.pop()
            for c in self._children.get(n, []):
                if c in self._depth:
                    raise ValueError(f"node {c!r} reachable twice")
                self._depth[c] = self._depth[n] + 1
                stack.append(c)

    def root(self):
        return self._root

    def children(self, node):
        return list(self._children.get(node, []))

    def depth_of(self, node):
        return self._depth[node]

    def flagged(self, node):
        return node in self._flags

    def count_at_depth(self, d):
        return sum(1 for n, nd in self._depth.items() if nd == d)

    def node_text(self, node):
        return node

    def parse_node(self, text, d):
        if text not in self._depth or self._depth[text] != d:
            raise ValueError(f"unknown node {text!r} at depth {d}")
        return text

    def coarsen(self, node):
        for parent, kids in self._children.items():
            if node in kids:
                return parent
        raise KeyError(node)


class BeliefTree:
    """A coherently weighted, partially materialized refinement tree."""

    def __init__(self, space: NodeSpace):
        self.space = space
        root = space.root()
        self._root = root
        self._children: dict = {}
        self._parent: dict = {}
        self.w: dict = {root: Fraction(1)}

    # --- construction ---

    @classmethod
    def parent_uniform(cls, space: NodeSpace, depth: int) -> "BeliefTree":
        """Materialize to `depth`, each node splitting its weight equally."""
        tree = cls(space)
        frontier = [tree._root]
        for _ in range(depth):
            nxt = []
            for node in frontier:
                kids = space.children(node)
                if not kids:
                    continue
                tree._attach(node, kids)
                share = tree.w[node] / len(kids)
                for c in kids:
                    tree.w[c] = share
                nxt.extend(kids)
            frontier = nxt
        return tree

    @classmethod
    def depth_uniform(cls, space: NodeSpace, depth: int):
        """Equal weight per node at each depth; returns (tree, violations).

        Coherence would require every parent to have equally many children,
        which fails in general, so this constructor reports residuals rather
        than assuming them away.
        """
        tree = cls(space)
        frontier = [tree._root]
        for d in range(1, depth + 1):
            total = space.count_at_depth(d)
            share = Fraction(1, total)
            nxt = []
            for node in frontier:
                kids = space.children(node)
                if not kids:
                    continue
                tree._attach(node, kids)
                for c in kids:
                    tree.w[c] = share
                nxt.extend(kids)
            frontier = nxt
        return tree, tree.coherence_violations()

    @classmethod
    def from_structure(cls, space: NodeSpace, weights: dict, children: dict) -> "BeliefTree":
        tree = cls(space)
        for node, kids in children.items():
            tree._attach(node, list(kids))
        tree.w = {node: Fraction(v) for node, v in weights.items()}
        if tree.w.get(tree._root) != 1:
            raise ValueError("root weight must be 1")
        return tree

    def _attach(self, node, kids: list):
        self._children[node] = list(kids)
        for c in kids:
            self._parent[c] = node

    def materialize(self, node):
        """Expand one frontier node, children splitting its weight equally."""
        if node in self._children:
            return self._children[node]
        kids = self.space.children(node)
        if kids:
            self._attach(node, kids)
            share = self.w[node] / len(kids)
            for c in kids:
                self.w[c] = share
        return kids

    # --- inspection ---

    @property
    def root(self):
        return self._root

    def children_of(self, node) -> list:
        return list(self._children.get(node, []))

    def parent_of(self, node):
        return self._parent.get(node)

    def is_frontier(self, node) -> bool:
        return node not in self._children

    def nodes(self) -> Iterable:
        return self.w.keys()

    def nodes_at_depth(self, d: int) -> list:
        return [n for n in self.w if self.space.depth_of(n) == d]

    def max_depth(self) -> int:
        return max(self.space.depth_of(n) for n in self.w)

    def weight(self, node) -> Fraction:
        return self.w[node]

    def depth_sum(self, d: int) -> Fraction:
        """Total mass at depth d, counting frontier nodes above d as carried."""
        total = Fraction(0)
        for n, v in self.w.items():
            nd = self.space.depth_of(n)
            if nd == d or (nd < d and self.is_frontier(n)):
                total += v
        return total

    def coherence_violations(self) -> list:
        out = []
        for node, kids in self._children.items():
            residual = self.w[node] - sum(self.w[c] for c in kids)
            if residual != 0:
                out.append((node, residual))
        return out

    def check(self, max_depth: int | None = None) -> None:
        """Assert root weight, coherence and per-depth normalization."""
        assert self.w[self._root] == 1, "root weight must be 1"
        bad = self.coherence_violations()
        assert not bad, f"coherence violated at {len(bad)} nodes"
        top = max_depth if max_depth is not None else self.max_depth()
        for d in range(top + 1):
            assert self.depth_sum(d) == 1, f"depth {d} mass is {self.depth_sum(d)}"

    def copy(self) -> "BeliefTree":
        t = BeliefTree.__new__(BeliefTree)
        t.space = self.space
        t._root = self._root
        t._children = self._children
        t._parent = self._parent
        t.w = dict(self.w)
        return t

    # --- renormalization ---

    def renormalize(self, minus) -> "BeliefTree":
        """Refute `minus` and rescale the nearest supported mass.

        Unsupported descendants of the redistribution point drop to zero; the
        supported ones scale by total/positive so the point's own weight is
        conserved.  Raises UndefinedRenorm when nothing supported remains.
        """
        if minus not in self.w:
            raise KeyError("node to refute is not materialized")
        d = self.space.depth_of(minus)
        if d == 0:
            raise UndefinedRenorm("cannot refute the root")

        support_memo: dict = {}

        def reaches(x) -> bool:
            """Positive chain from x down to a depth-d node other than minus."""
            hit = support_memo.get(x)
            if hit is not None:
                return hit
            out: bool
            if self.w[x] <= 0:
                out = False
            elif self.space.depth_of(x) == d:
                out = x != minus
            elif self.is_frontier(x):
                out = True  # implicit subtree inherits positive mass
            else:
                out = any(reaches(c) for c in self._children[x])
            support_memo[x] = out
            return out

        # redistribution point: deepest ancestor of minus with supported reach
        point = None
        cur = self._parent.get(minus)
        while cur is not None:
            if reaches(cur):
                point = cur
                break
            cur = self._parent.get(cur)
        if point is None:
            raise UndefinedRenorm("no supported sibling mass at this depth")

        kids = self._children[point]
        z_total = sum(self.w[c] for c in kids)
        z_positive = sum(self.w[c] for c in kids if reaches(c))
        if z_positive <= 0:
            raise UndefinedRenorm("no supported sibling mass at this depth")
        scale = z_total / z_positive

        out = self.copy()
        stack = list(kids)
        supported_deep: dict = {}
        while stack:
            x = stack.pop()
            xd = self.space.depth_of(x)
            if xd <= d:
                keep = reaches(x)
            else:
                # below the refuted depth: alive iff the whole chain from the
                # depth-d ancestor down stays positive
                keep = supported_deep[self._parent[x]] and self.w[x] > 0
            if xd >= d:
                supported_deep[x] = keep
            out.w[x] = self.w[x] * scale if keep else Fraction(0)
            stack.extend(self._children.get(x, []))
        return out

    def renormalize_batch(self, minus_set) -> "BeliefTree":
        """Left-fold of renormalize in canonical node order.

        Order does not matter (the operation commutes); sorting just pins the
        fold for reproducibility.
        """
        tree = self
        for node in sorted(minus_set, key=self.space.sort_key):
            tree = tree.renormalize(node)
        return tree

    def sequence_step(self, d: int, flag: Callable | None = None) -> "BeliefTree":
        """One update step: refute every flagged depth-d node at once."""
        flag = flag or self.space.flagged
        minus = [n for n in self.nodes_at_depth(d) if flag(n)]
        return self.renormalize_batch(minus) if minus else self.copy()

    def run_sequence(self, flag: Callable | None = None) -> "BeliefTree":
        """Apply sequence_step at every materialized depth, shallow to deep."""
        tree = self
        for d in range(1, self.max_depth() + 1):
            tree = tree.sequence_step(d, flag)
        return tree

    def reasonable(self, flag: Callable | None = None) -> bool:
        """No materialized node is zeroed unless the flag refutes it."""
        flag = flag or self.space.flagged
        return all(self.w[n] > 0 for n in self.w if not flag(n))

    # --- beliefs over sentences ---

    def belief_in(self, engine: DnfEngine, sentence: Formula, d: int) -> Fraction:
        """Exact probability mass of the sentence's depth-d normal form.

        Open formulas are read as their universal closures.
        """
        f = sentence
        if free_variables(f):
            f = universal_closure(f)
        if formula_depth(f) > d:
            raise ValueError("query depth is below the sentence's depth")
        members = engine.dnf(f, d).members
        total = Fraction(0)
        for c in members:
            if c not in self.w:
                raise ValueError("query depth exceeds the materialized frontier")
            total += self.w[c]
        return total

    def proves(self, engine: DnfEngine, sentence: Formula, d: int) -> bool:
        return self.belief_in(engine, sentence, d) == 1

    # --- snapshots ---

    SNAPSHOT_HEADER = "folbelief-snapshot 1"

    def to_snapshot(self) -> str:
        lines = [self.SNAPSHOT_HEADER]
        if isinstance(self.space, ConstituentNodes):
            lines.append(f"sig {self.space.space.sig}")
        lines.append(f"kind {self.space.kind}")
        lines.append(f"depth {self.max_depth()}")
        order = sorted(self.w, key=self.space.sort_key)
        for node in order:
            d = self.space.depth_of(node)
            frac = self.w[node]
            lines.append(f"{d}\t{self.space.node_text(node)}\t{frac.numerator}/{frac.denominator}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_snapshot(cls, text: str, space: NodeSpace) -> "BeliefTree":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != cls.SNAPSHOT_HEADER:
            raise ValueError("not a belief snapshot (bad header)")
        i = 1
        while i < len(lines) and "\t" not in lines[i]:
            key = lines[i].split()[0]
            if key not in ("sig", "kind", "depth"):
                raise ValueError(f"line {i + 1}: unknown header field {key!r}")
            if key == "kind" and lines[i].split(None, 1)[1] != space.kind:
                raise ValueError(f"line {i + 1}: snapshot kind mismatch")
            i += 1
        tree = cls(space)
        tree.w = {}
        by_depth: dict[int, list] = {}
        for ln_no, ln in enumerate(lines[i:], start=i + 1):
            parts = ln.split("\t")
            if len(parts) != 3:
                raise ValueError(f"line {ln_no}: expected depth<TAB>id<TAB>num/den")
            try:
                d = int(parts[0])
                node = space.parse_node(parts[1], d)
                num, _, den = parts[2].partition("/")
                frac = Fraction(int(num), int(den))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"line {ln_no}: {exc}") from None
            tree.w[node] = frac
            by_depth.setdefault(d, []).append(node)
        if 0 not in by_depth or len(by_depth[0]) != 1:
            raise ValueError("snapshot must contain exactly one depth-0 node")
        tree._root = by_depth[0][0]
        # rebuild edges: a node's parent is its one-step coarsening
        groups: dict = {}
        for d in sorted(by_depth):
            if d == 0:
                continue
            for node in by_depth[d]:
                parent = space.coarsen(node)
                if parent not in tree.w:
                    raise ValueError(f"node at depth {d} has no materialized parent")
                groups.setdefault(parent, []).append(node)
        for parent, kids in groups.items():
            tree._attach(parent, sorted(kids, key=space.sort_key))
        return tree


def save_snapshot(tree: BeliefTree, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(tree.to_snapshot())


def load_snapshot(path: str, space: NodeSpace) -> BeliefTree:
    with open(path) as fh:
        return BeliefTree.from_snapshot(fh.read(), space)
