"""Exact ultrametric distance, ball measures and membership."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .tree import TreeAddress, UltrametricTree, meet, sup


@dataclass(frozen=True)
class Ball:
    """The disk D_I of leaves descending from vertex I; its diameter is its measure."""

    vertex: TreeAddress
    measure: Fraction

    @property
    def diameter(self) -> Fraction:
        return self.measure

    def contains(self, x: TreeAddress) -> bool:
        return tuple(x[: len(self.vertex)]) == self.vertex


def ball(tree: UltrametricTree, vertex: TreeAddress) -> Ball:
    vertex = tree.check_vertex(vertex)
    return Ball(vertex, tree.measures[vertex])


def ball_measure(tree: UltrametricTree, vertex: TreeAddress) -> Fraction:
    return tree.measures[tree.check_vertex(vertex)]


def ball_contains(tree: UltrametricTree, vertex: TreeAddress, x: TreeAddress) -> bool:
    vertex = tree.check_vertex(vertex)
    x = tree.check_vertex(x)
    return x[: len(vertex)] == vertex


def distance(tree: UltrametricTree, x: TreeAddress, y: TreeAddress) -> Fraction:
    """|xy|: product of edge branching indices along the directed path from the root R
    to the merge vertex I, power +1 on increasing edges and -1 on decreasing ones.

    An edge carries the branching index of its larger (closer to infinity) end. The
    path R -> I climbs from R to sup(I, R) and then descends to I; when R is the top
    vertex only the descent remains, and I == R gives the empty product 1.
    """
    x = tree.check_leaf(x)
    y = tree.check_leaf(y)
    if x == y:
        return Fraction(0)
    merge = meet(tree, x, y)
    root = tree.root
    top = sup(tree, merge, root)
    out = Fraction(1)
    for k in range(len(top), len(root)):
        out *= tree.branching[root[:k]]
    for k in range(len(top), len(merge)):
        out /= tree.branching[merge[:k]]
    return out


def distance_scale(tree: UltrametricTree) -> Fraction:
    """The constant ratio ``distance(x, y) / ball_measure(meet(x, y))``.

    Moving R only rescales the metric globally; it is 1 when R is the top vertex and
    the top measure is 1, or after :func:`ultrawave.tree.root_normalized`.
    """
    up = Fraction(1)
    for k in range(len(tree.root)):
        up *= tree.branching[tree.root[:k]]
    return up / tree.top_measure


def sphere(tree: UltrametricTree, x: TreeAddress, radius: Fraction) -> list[TreeAddress]:
    """Leaves at exactly ``radius`` from x; a radial kernel is constant on each."""
    x = tree.check_leaf(x)
    return [y for y in tree.leaves if y != x and distance(tree, x, y) == radius]
