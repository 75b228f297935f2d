"""Observation masks, filtrations and super constituents.

A depth-d sentence constituent is a sign vector over the depth-(d-1)
one-term attributive space.  A mask picks which of those positions are
observed; constituents agreeing on the observed positions fall into the same
cell, and the cell's identifier is exactly that partial sign pattern.

A family of per-depth masks yields a filtration only when each observed
position's truncation preimage is fully observed one depth down; otherwise a
deeper cell's members would truncate into different shallower cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .belief import NodeSpace
from .constituents import Attributive, CapExceeded, Constituent, ConstituentSpace


class IncompatibleFiltration(Exception):
    """The per-depth partitions do not nest across depth."""


@dataclass(frozen=True)
class Mask:
    """Which sign-map positions are observed at one depth."""

    kind: str  # "none" | "all" | "some"
    positions: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in ("none", "all", "some"):
            raise ValueError(f"bad mask kind {self.kind!r}")
        if self.kind == "some" and not self.positions:
            raise ValueError("empty 'some' mask; use kind='none'")

    @staticmethod
    def none() -> "Mask":
        return Mask("none")

    @staticmethod
    def all() -> "Mask":
        return Mask("all")

    @staticmethod
    def some(positions) -> "Mask":
        return Mask("some", frozenset(positions))

    def observed(self, size: int) -> tuple[int, ...]:
        if self.kind == "none":
            return ()
        if self.kind == "all":
            return tuple(range(size))
        if any(p >= size for p in self.positions):
            raise ValueError("mask position out of range")
        return tuple(sorted(self.positions))

    def covers(self, other: "Mask", size: int) -> bool:
        """True when this mask observes at least everything `other` does."""
        return set(self.observed(size)) >= set(other.observed(size))

    def __str__(self):
        if self.kind in ("none", "all"):
            return self.kind
        return "obs " + ",".join(str(p) for p in sorted(self.positions))

    @staticmethod
    def parse(text: str) -> "Mask":
        text = text.strip()
        if text == "none":
            return Mask.none()
        if text == "all":
            return Mask.all()
        if text.startswith("obs "):
            return Mask.some(int(p) for p in text[4:].split(","))
        raise ValueError(f"bad mask {text!r}")


def head_mask(space: ConstituentSpace, d: int, heads) -> Mask:
    """Observe exactly the depth-d positions whose one-term description has a
    base pattern in `heads` (bitmasks over the unary-atom table).

    This is the subtree-pattern way of building a mask: pick which kinds of
    lead individual to distinguish and ignore everything nested below the
    others.  Truncation preserves heads, so masks built from one head set at
    every depth always nest into a filtration.
    """
    size = space.child_space_size(d, 0)
    if size > space.cap:
        raise CapExceeded("position space exceeds cap")
    wanted = set(heads)
    positions = [j for j in range(size)
                 if space.attr_by_index(d - 1, 1, j).base in wanted]
    if not positions:
        return Mask.none()
    if len(positions) == size:
        return Mask.all()
    return Mask.some(positions)


@dataclass(frozen=True)
class CellRef:
    """A partition cell: observed positions with their signs."""

    depth: int
    pattern: tuple  # sorted ((position, sign), ...)

    def sign_at(self, position: int):
        for p, s in self.pattern:
            if p == position:
                return s
        return None

    def __str__(self):
        body = ",".join(f"{p}={s}" for p, s in self.pattern)
        return f"[cell d={self.depth} ({body})]"

    @staticmethod
    def parse(text: str) -> "CellRef":
        text = text.strip()
        if not (text.startswith("[cell d=") and text.endswith(")]")):
            raise ValueError(f"bad cell text {text!r}")
        head, _, body = text[len("[cell d="):-2].partition(" (")
        depth = int(head)
        pattern = []
        if body:
            for item in body.split(","):
                p, _, s = item.partition("=")
                pattern.append((int(p), int(s)))
        return CellRef(depth, tuple(sorted(pattern)))


class Filtration:
    """Per-depth masks over one constituent space.

    Depth 0 always holds the single top cell.  Masks are the only public
    constructor for partitions; cells stay intensional so the underlying
    constituent space never has to be enumerated unless members are asked
    for.
    """

    def __init__(self, space: ConstituentSpace, masks: dict[int, Mask]):
        self.space = space
        self.masks = dict(masks)

    def mask_at(self, d: int) -> Mask:
        if d == 0:
            return Mask.none()
        return self.masks.get(d, Mask.none())

    def position_count(self, d: int) -> int:
        """Size of the sign-map domain of depth-d sentence constituents."""
        return self.space.child_space_size(d, 0)

    def observed_at(self, d: int) -> tuple[int, ...]:
        return self.mask_at(d).observed(self.position_count(d))

    def refines_mask(self, d: int, finer: Mask) -> bool:
        return finer.covers(self.mask_at(d), self.position_count(d))

    # --- partitions ---

    def cell_of(self, c: Constituent) -> CellRef:
        if c.k != 0:
            raise ValueError("cells partition sentence constituents")
        if c.depth == 0:
            return CellRef(0, ())
        pattern = tuple(
            (p, (c.attr.children >> p) & 1) for p in self.observed_at(c.depth)
        )
        return CellRef(c.depth, pattern)

    def cells_at(self, d: int) -> list[CellRef]:
        if d == 0:
            return [CellRef(0, ())]
        observed = self.observed_at(d)
        if len(observed) > 60 or 2 ** len(observed) > self.space.cap:
            raise CapExceeded("too many cells to enumerate")
        out = []
        for bits in range(1 << len(observed)):
            pattern = tuple((p, (bits >> i) & 1) for i, p in enumerate(observed))
            out.append(CellRef(d, tuple(sorted(pattern))))
        return out

    def members(self, cell: CellRef):
        """All constituents in the cell; requires the depth within cap."""
        if cell.depth == 0:
            yield self.space.top()
            return
        size = self.position_count(cell.depth)
        fixed = dict(cell.pattern)
        free = [p for p in range(size) if p not in fixed]
        if 2 ** len(free) > self.space.cap:
            raise CapExceeded("cell too large to enumerate")
        base_vec = 0
        for p, s in cell.pattern:
            base_vec |= s << p
        for bits in range(1 << len(free)):
            vec = base_vec
            for i, p in enumerate(free):
                vec |= ((bits >> i) & 1) << p
            yield Constituent(0, Attributive(cell.depth, 0, 0, vec))

    def member_count(self, cell: CellRef) -> int:
        if cell.depth == 0:
            return 1
        return 1 << (self.position_count(cell.depth) - len(cell.pattern))

    # --- cross-depth structure ---

    def _position_trunc_map(self, d: int) -> list[int]:
        """Truncation of each depth-d position into the depth-(d-1) positions."""
        return self.space.truncation_index_map(d - 1, 1)

    def check_compatible(self, d: int) -> bool:
        """Masks at d and d+1 nest: observed depth-d preimages are observed below."""
        observed_up = set(self.observed_at(d))
        if not observed_up:
            return True
        observed_down = set(self.observed_at(d + 1))
        tmap = self._position_trunc_map(d + 1)
        for j, target in enumerate(tmap):
            if target in observed_up and j not in observed_down:
                return False
        return True

    def truncate_cell(self, cell: CellRef) -> CellRef:
        """The unique depth-(d-1) cell the cell's members truncate into."""
        d = cell.depth
        if d == 0:
            raise ValueError("cannot truncate the top cell")
        if d == 1:
            return CellRef(0, ())
        if not self.check_compatible(d - 1):
            raise IncompatibleFiltration(
                f"masks at depths {d - 1} and {d} do not form a filtration"
            )
        tmap = self._position_trunc_map(d)
        fixed = dict(cell.pattern)
        pattern = []
        for target in self.observed_at(d - 1):
            preimage = [j for j, t in enumerate(tmap) if t == target]
            sign = 1 if any(fixed[j] for j in preimage) else 0
            pattern.append((target, sign))
        return CellRef(d - 1, tuple(sorted(pattern)))

    def super_children(self, cell: CellRef) -> list[CellRef]:
        """Next-depth cells whose members truncate into this cell."""
        return [c for c in self.cells_at(cell.depth + 1) if self.truncate_cell(c) == cell]

    def cell_refines(self, parent: CellRef, child: CellRef) -> bool:
        """Mask-free one-step refinement between cells of any two partitions.

        Holds when every member of the child cell truncates into the parent
        cell: a positive parent position needs a pinned-positive preimage
        bit, a negative one needs its whole preimage pinned to zero.
        """
        if child.depth != parent.depth + 1:
            return False
        if parent.depth == 0:
            return True
        tmap = self._position_trunc_map(child.depth)
        fixed = dict(child.pattern)
        for p, s in parent.pattern:
            group = [j for j, t in enumerate(tmap) if t == p]
            if s == 1:
                if not any(fixed.get(j) == 1 for j in group):
                    return False
            else:
                if not all(fixed.get(j) == 0 for j in group):
                    return False
        return True

    def refine_cell(self, cell: CellRef, finer: Mask) -> list[CellRef]:
        """Split a cell under a finer mask at the same depth, coarse order."""
        d = cell.depth
        size = self.position_count(d)
        if not finer.covers(self.mask_at(d), size):
            raise ValueError("refining mask must observe a superset of positions")
        fixed = dict(cell.pattern)
        new_positions = [p for p in finer.observed(size) if p not in fixed]
        out = []
        for bits in range(1 << len(new_positions)):
            pattern = list(cell.pattern)
            for i, p in enumerate(new_positions):
                pattern.append((p, (bits >> i) & 1))
            out.append(CellRef(d, tuple(sorted(pattern))))
        return out

    def super_trivially_inconsistent(self, cell: CellRef, effort: int = 0) -> bool:
        return all(
            self.space.inconsistent_at_effort(m, effort) for m in self.members(cell)
        )

    # --- mask files ---

    def to_text(self) -> str:
        lines = [f"{d} {self.masks[d]}" for d in sorted(self.masks)]
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse_text(space: ConstituentSpace, text: str) -> "Filtration":
        masks = {}
        for ln in text.splitlines():
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            head, _, rest = ln.partition(" ")
            masks[int(head)] = Mask.parse(rest)
        return Filtration(space, masks)


class FiltrationNodes(NodeSpace):
    """Cells of a filtration as belief-tree nodes; weights live on cells."""

    kind = "cells"

    def __init__(self, filtration: Filtration, effort: int = 0):
        self.filtration = filtration
        self.effort = effort

    def root(self) -> CellRef:
        return CellRef(0, ())

    def children(self, node: CellRef) -> list:
        return self.filtration.super_children(node)

    def depth_of(self, node: CellRef) -> int:
        return node.depth

    def flagged(self, node: CellRef) -> bool:
        return self.filtration.super_trivially_inconsistent(node, self.effort)

    def count_at_depth(self, d: int) -> int:
        if d == 0:
            return 1
        return 1 << len(self.filtration.observed_at(d))

    def node_text(self, node: CellRef) -> str:
        return str(node)

    def parse_node(self, text: str, d: int) -> CellRef:
        cell = CellRef.parse(text)
        if cell.depth != d:
            raise ValueError(f"cell depth {cell.depth} != expected {d}")
        return cell

    def coarsen(self, node: CellRef) -> CellRef:
        return self.filtration.truncate_cell(node)

    def sort_key(self, node: CellRef):
        return (node.depth, node.pattern)


def split_cell_weight(tree, cell: CellRef, finer: Mask, proportional: bool = False):
    """Re-key a materialized cell's weight onto its refinement under `finer`.

    Uniform split by default; `proportional` splits by member counts instead.
    Returns (new cells, weight map fragment).
    """
    filtration = tree.space.filtration
    parts = filtration.refine_cell(cell, finer)
    w = tree.w[cell]
    if proportional:
        counts = [filtration.member_count(c) for c in parts]
        total = sum(counts)
        shares = [Fraction(w) * c / total for c in counts]
    else:
        shares = [Fraction(w) / len(parts)] * len(parts)
    return parts, dict(zip(parts, shares))
