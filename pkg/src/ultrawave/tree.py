"""Finite truncated directed trees, their partial order and digit addressing.

A vertex is addressed by the digits read along the edges from the top vertex,
so the empty tuple is the top vertex and ``J >= I`` (J closer to infinity)
exactly when J's address is a prefix of I's.
"""
from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Any

from .errors import AddressError, TreeSpecError

log = logging.getLogger(__name__)

TreeAddress = tuple[int, ...]
TOP: TreeAddress = ()
TOP_LABEL = "TOP"


@dataclass(frozen=True)
class BranchingSpec:
    """How many children each internal vertex gets.

    ``kind`` is one of ``homogeneous`` (``p``, ``depth``), ``per_level`` (``levels``,
    top to bottom) or ``explicit`` (nested description, see :meth:`explicit`).
    """

    kind: str
    p: int | None = None
    depth: int | None = None
    levels: tuple[int, ...] = ()
    nested: Any = None

    @classmethod
    def homogeneous(cls, p: int, depth: int) -> BranchingSpec:
        return cls(kind="homogeneous", p=p, depth=depth)

    @classmethod
    def per_level(cls, levels: Iterable[int]) -> BranchingSpec:
        return cls(kind="per_level", levels=tuple(levels))

    @classmethod
    def explicit(cls, nested: Any) -> BranchingSpec:
        """A vertex is a list of its children; ``[]`` is a leaf; an int k is a vertex
        with k leaf children."""
        return cls(kind="explicit", nested=_freeze(nested))

    def expand(self) -> dict[TreeAddress, int]:
        """Return ``{internal vertex: branching index}``, validating the spec."""
        if self.kind == "homogeneous":
            if not isinstance(self.depth, int) or self.depth < 1:
                raise TreeSpecError(
                    f"homogeneous.depth must be an integer >= 1, got {self.depth!r}"
                )
            _check_branching(self.p, "homogeneous.p")
            return _expand_levels([self.p] * self.depth)
        if self.kind == "per_level":
            if not self.levels:
                raise TreeSpecError("per_level must list at least one level (depth >= 1)")
            for i, p in enumerate(self.levels):
                _check_branching(p, f"per_level[{i}]")
            return _expand_levels(list(self.levels))
        if self.kind == "explicit":
            out: dict[TreeAddress, int] = {}
            _expand_explicit(self.nested, TOP, "explicit", out)
            if not out:
                raise TreeSpecError("explicit spec describes a single leaf; depth must be >= 1")
            return out
        raise TreeSpecError(f"Unknown branching spec kind '{self.kind}'")


def _freeze(node: Any) -> Any:
    if isinstance(node, (list, tuple)):
        return tuple(_freeze(child) for child in node)
    return node


def _check_branching(p: Any, where: str) -> None:
    if isinstance(p, bool) or not isinstance(p, int):
        raise TreeSpecError(f"{where} must be an integer branching index, got {p!r}")
    if p < 2:
        raise TreeSpecError(f"{where} must be >= 2, got {p}")


def _expand_levels(levels: list[int]) -> dict[TreeAddress, int]:
    out: dict[TreeAddress, int] = {}
    frontier: list[TreeAddress] = [TOP]
    for p in levels:
        nxt: list[TreeAddress] = []
        for v in frontier:
            out[v] = p
            nxt.extend(v + (k,) for k in range(p))
        frontier = nxt
    return out


def _expand_explicit(node: Any, at: TreeAddress, where: str, out: dict[TreeAddress, int]) -> None:
    if isinstance(node, bool):
        raise TreeSpecError(f"{where} must be a list or an integer, got {node!r}")
    if isinstance(node, int):
        _check_branching(node, where)
        out[at] = node
        return
    if not isinstance(node, tuple):
        raise TreeSpecError(f"{where} must be a list or an integer, got {node!r}")
    if len(node) == 0:
        return
    _check_branching(len(node), f"{where} (child count)")
    out[at] = len(node)
    for k, child in enumerate(node):
        _expand_explicit(child, at + (k,), f"{where}[{k}]", out)


@dataclass(frozen=True, eq=False)
class UltrametricTree:
    """Immutable truncated tree: branching indices of internal vertices, root R, and
    the measure of the top ball. Child k of vertex I is ``I + (k,)``."""

    branching: Mapping[TreeAddress, int]
    root: TreeAddress = TOP
    top_measure: Fraction = Fraction(1)

    def p(self, vertex: TreeAddress) -> int:
        """Branching index of an internal vertex."""
        try:
            return self.branching[vertex]
        except KeyError:
            raise AddressError(
                f"{format_address(self, vertex)} is not an internal vertex"
            ) from None

    def children(self, vertex: TreeAddress) -> list[TreeAddress]:
        return [vertex + (k,) for k in range(self.branching.get(vertex, 0))]

    def is_vertex(self, address: TreeAddress) -> bool:
        for k in range(len(address)):
            p = self.branching.get(address[:k])
            if p is None or not 0 <= address[k] < p:
                return False
        return True

    def is_leaf(self, address: TreeAddress) -> bool:
        return self.is_vertex(address) and address not in self.branching

    def check_vertex(self, address: TreeAddress) -> TreeAddress:
        address = tuple(address)
        if not self.is_vertex(address):
            raise AddressError(f"{format_address(self, address)} is not a vertex of the tree")
        return address

    def check_leaf(self, address: TreeAddress) -> TreeAddress:
        address = self.check_vertex(address)
        if address in self.branching:
            raise AddressError(f"{format_address(self, address)} is an internal vertex, not a leaf")
        return address

    @cached_property
    def vertices(self) -> tuple[TreeAddress, ...]:
        """All vertices in lexicographic (pre-)order, top vertex first."""
        out = [TOP]
        for v in self.branching:
            out.extend(self.children(v))
        return tuple(sorted(out))

    @cached_property
    def internal_vertices(self) -> tuple[TreeAddress, ...]:
        return tuple(sorted(self.branching))

    @cached_property
    def leaves(self) -> tuple[TreeAddress, ...]:
        return tuple(v for v in self.vertices if v not in self.branching)

    @cached_property
    def leaf_index(self) -> dict[TreeAddress, int]:
        return {leaf: i for i, leaf in enumerate(self.leaves)}

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @cached_property
    def depth(self) -> int:
        return max(len(leaf) for leaf in self.leaves)

    @cached_property
    def max_branching(self) -> int:
        return max(self.branching.values())

    @cached_property
    def measures(self) -> dict[TreeAddress, Fraction]:
        """mu(D_I) for every vertex: each subdivision divides by the branching index."""
        out = {TOP: self.top_measure}
        for v in self.vertices:
            p = self.branching.get(v)
            if p is not None:
                child = out[v] / p
                for c in self.children(v):
                    out[c] = child
        return out

    @cached_property
    def spans(self) -> dict[TreeAddress, tuple[int, int]]:
        """Leaf-index range ``[start, stop)`` of every ball; lexicographic order keeps
        every ball contiguous."""
        out = {leaf: (i, i + 1) for i, leaf in enumerate(self.leaves)}
        for v in reversed(self.internal_vertices):
            p = self.branching[v]
            out[v] = (out[v + (0,)][0], out[v + (p - 1,)][1])
        return out


def build_tree(
    spec: BranchingSpec,
    root: TreeAddress | None = None,
    top_measure: Fraction | int | str = 1,
) -> UltrametricTree:
    """Expand ``spec`` into a tree with the designated root R (default: top vertex)."""
    branching = spec.expand()
    measure = Fraction(top_measure)
    if measure <= 0:
        raise TreeSpecError(f"top_measure must be > 0, got {measure}")
    tree = UltrametricTree(MappingProxyType(branching), TOP, measure)
    if root is not None:
        root = tuple(root)
        if not tree.is_vertex(root):
            raise TreeSpecError(f"root {root!r} is not a vertex of the tree")
        tree = UltrametricTree(tree.branching, root, measure)
    log.debug(
        "built %s tree: %d internal vertices, %d leaves, depth %d",
        spec.kind, len(branching), tree.n_leaves, tree.depth,
    )
    return tree


def root_normalized(tree: UltrametricTree) -> UltrametricTree:
    """Same tree with the top measure chosen so that mu(D_R) == 1.

    Then the measure of every ball equals its diameter for the distance seen from R.
    """
    scale = Fraction(1)
    for k in range(len(tree.root)):
        scale *= tree.branching[tree.root[:k]]
    return UltrametricTree(tree.branching, tree.root, scale)


def meet(tree: UltrametricTree, x: TreeAddress, y: TreeAddress) -> TreeAddress:
    """Deepest vertex whose ball contains both x and y (longest common prefix)."""
    x = tree.check_vertex(x)
    y = tree.check_vertex(y)
    n = 0
    for a, b in zip(x, y):
        if a != b:
            break
        n += 1
    return x[:n]


def sup(tree: UltrametricTree, u: TreeAddress, v: TreeAddress) -> TreeAddress:
    """Smallest vertex that is >= both u and v."""
    return meet(tree, u, v)


def leq(tree: UltrametricTree, u: TreeAddress, v: TreeAddress) -> bool:
    """``u <= v``: v lies on the path from u toward infinity."""
    u = tree.check_vertex(u)
    v = tree.check_vertex(v)
    return u[: len(v)] == v


def enumerate_leaves(tree: UltrametricTree) -> list[TreeAddress]:
    return list(tree.leaves)


def vertex_point(tree: UltrametricTree, vertex: TreeAddress) -> TreeAddress:
    """The leaf reached from ``vertex`` by all-zero digits."""
    v = tree.check_vertex(vertex)
    while v in tree.branching:
        v = v + (0,)
    return v


def format_address(tree: UltrametricTree, address: TreeAddress) -> str:
    """Digit string; digits are '.'-separated when some branching index exceeds 10."""
    if len(address) == 0:
        return TOP_LABEL
    if tree.max_branching <= 10 and all(0 <= d < 10 for d in address):
        return "".join(str(d) for d in address)
    return ".".join(str(d) for d in address)


def parse_address(tree: UltrametricTree, text: str) -> TreeAddress:
    """Inverse of :func:`format_address`; the result is checked against the tree."""
    text = str(text).strip()
    if text in ("", TOP_LABEL):
        return TOP
    if "." in text or tree.max_branching > 10:
        parts = text.split(".")
    else:
        parts = list(text)
    if not all(part.isdigit() for part in parts):
        raise AddressError(f"Invalid address '{text}': expected digits")
    address = tuple(int(part) for part in parts)
    if not tree.is_vertex(address):
        raise AddressError(f"Address '{text}' is not a vertex of the tree")
    return address
