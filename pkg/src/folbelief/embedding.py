"""Finite-cutoff embedding of sentences into the weighted function space over
refinement paths.

A sentence of depth <= D embeds as the indicator of its depth-D normal form
members; the ambient weights come from a belief tree materialized through
depth D.  Inner products are exact Fractions; square roots appear only at
presentation time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .belief import BeliefTree
from .dnf import DnfEngine
from .syntax import Formula, Not, and_, free_variables, universal_closure
from .syntax import depth as formula_depth


@dataclass(frozen=True)
class Embedded:
    """A function on the depth-`cutoff` slice, stored sparsely."""

    cutoff: int
    coefficients: tuple  # ((node, Fraction), ...) sorted for hashing

    def coeff(self, node) -> Fraction:
        return dict(self.coefficients).get(node, Fraction(0))

    def support(self):
        return tuple(n for n, v in self.coefficients if v != 0)


class EmbeddingSpace:
    """Embeds sentences against one belief tree at a fixed cutoff depth."""

    def __init__(self, tree: BeliefTree, engine: DnfEngine, cutoff: int):
        self.tree = tree
        self.engine = engine
        self.cutoff = cutoff
        self._slice = tree.nodes_at_depth(cutoff)
        if not self._slice:
            raise ValueError("tree has no nodes at the cutoff depth")
        total = sum(tree.w[n] for n in self._slice)
        if total != 1:
            raise ValueError("cutoff slice must carry full mass; materialize deeper")

    def _close(self, f: Formula) -> Formula:
        return universal_closure(f) if free_variables(f) else f

    def from_nodes(self, nodes, value: Fraction = Fraction(1)) -> Embedded:
        coeffs = sorted(((n, value) for n in nodes),
                        key=lambda p: self.tree.space.sort_key(p[0]))
        return Embedded(self.cutoff, tuple(coeffs))

    def embed(self, sentence: Formula) -> Embedded:
        """Indicator of the sentence over the cutoff slice."""
        f = self._close(sentence)
        d0 = formula_depth(f)
        if d0 > self.cutoff:
            raise ValueError("sentence deeper than the cutoff")
        base = self.engine.dnf(f, d0)
        members = self.engine.expand_dnf(base, self.cutoff - d0).members
        return self.from_nodes(n for n in members if n in self.tree.w)

    def ones(self) -> Embedded:
        return self.from_nodes(self._slice)

    def zero(self) -> Embedded:
        return Embedded(self.cutoff, ())

    def _check(self, f: Embedded):
        if f.cutoff != self.cutoff:
            raise ValueError("mismatched cutoff depths")

    def inner(self, f: Embedded, g: Embedded) -> Fraction:
        self._check(f)
        self._check(g)
        gmap = dict(g.coefficients)
        total = Fraction(0)
        for node, fv in f.coefficients:
            gv = gmap.get(node)
            if gv:
                total += fv * gv * self.tree.w[node]
        return total

    def norm_sq(self, f: Embedded) -> Fraction:
        return self.inner(f, f)

    def norm(self, f: Embedded) -> float:
        return math.sqrt(self.norm_sq(f))

    def scale(self, f: Embedded, factor: Fraction) -> Embedded:
        if factor == 0:
            return Embedded(self.cutoff, ())
        return Embedded(self.cutoff, tuple((n, v * factor) for n, v in f.coefficients))

    def pointwise_max(self, f: Embedded, g: Embedded) -> Embedded:
        self._check(f)
        self._check(g)
        fmap, gmap = dict(f.coefficients), dict(g.coefficients)
        nodes = set(fmap) | set(gmap)
        coeffs = []
        for n in nodes:
            v = max(fmap.get(n, Fraction(0)), gmap.get(n, Fraction(0)))
            if v != 0:
                coeffs.append((n, v))
        coeffs.sort(key=lambda p: self.tree.space.sort_key(p[0]))
        return Embedded(self.cutoff, tuple(coeffs))

    def pointwise_min(self, f: Embedded, g: Embedded) -> Embedded:
        self._check(f)
        self._check(g)
        fmap, gmap = dict(f.coefficients), dict(g.coefficients)
        coeffs = []
        for n in set(fmap) & set(gmap):
            v = min(fmap[n], gmap[n])
            if v != 0:
                coeffs.append((n, v))
        coeffs.sort(key=lambda p: self.tree.space.sort_key(p[0]))
        return Embedded(self.cutoff, tuple(coeffs))

    def belief(self, sentence: Formula) -> Fraction:
        return self.inner(self.embed(sentence), self.ones())

    # --- statistics ---

    def correlation(self, f1: Formula, f2: Formula) -> float | None:
        """Cosine of the angle between the centered indicators.

        Defined only when both sentences have belief strictly between 0
        and 1; returns None otherwise.
        """
        b1, b2 = self.belief(f1), self.belief(f2)
        if b1 in (0, 1) or b2 in (0, 1):
            return None
        joint = self.inner(self.embed(f1), self.embed(f2))
        numerator = joint - b1 * b2
        denominator = b1 * (1 - b1) * b2 * (1 - b2)
        return float(numerator) / math.sqrt(float(denominator))

    def conditional(self, target: Formula, given: Formula) -> Embedded:
        """Conditional expectation on the two-cell algebra of `given`.

        Piecewise constant: the conditional mass ratio on each cell, zero on
        a zero-measure cell.
        """
        cond = self._close(given)
        tgt = self._close(target)
        b_given = self.belief(cond)
        b_not = 1 - b_given
        joint_in = self.belief(and_(cond, tgt))
        joint_out = self.belief(and_(Not(cond), tgt))
        inside = joint_in / b_given if b_given else Fraction(0)
        outside = joint_out / b_not if b_not else Fraction(0)
        in_nodes = set(self.embed(cond).support())
        coeffs = []
        for n in self._slice:
            v = inside if n in in_nodes else outside
            if v != 0:
                coeffs.append((n, v))
        coeffs.sort(key=lambda p: self.tree.space.sort_key(p[0]))
        return Embedded(self.cutoff, tuple(coeffs))

    def project(self, f: Embedded, onto: Embedded) -> tuple[Fraction, Embedded]:
        """Orthogonal projection of f onto the line through `onto`.

        Returns (coefficient, projected vector); exact.
        """
        denom = self.norm_sq(onto)
        if denom == 0:
            raise ZeroDivisionError("cannot project onto a null vector")
        coeff = self.inner(f, onto) / denom
        return coeff, self.scale(onto, coeff)

    def rescaled_projection(self, f: Embedded, onto: Embedded) -> Embedded:
        """Projection of f onto `onto`, rescaled back to the norm of `onto`.

        The scale factor is sqrt(|onto|^2 / |proj|^2), which is exactly the
        reciprocal of the projection coefficient, so this stays rational.
        """
        coeff, proj = self.project(f, onto)
        if coeff == 0:
            raise ZeroDivisionError("projection vanished; rescaling undefined")
        return self.scale(proj, 1 / abs(coeff))
