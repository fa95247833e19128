"""Ultrametric wavelet basis and its fast transforms.

psi_{Ij}(x) = exp(2 pi i j x_I / p_I) * Omega_I(x) / sqrt(mu(D_I)), j = 1..p_I - 1,
where x_I is the digit of x right below I. On a single top ball these span the
zero-mean functions; the normalized top indicator (the ``mean`` slot) completes
them to an orthonormal basis of the N leaf values.
"""
from __future__ import annotations

import logging
import weakref
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import MAX_GRAM_LEAVES
from .errors import AddressError, DimensionError, SizeGuardError
from .tree import TreeAddress, UltrametricTree, format_address

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class WaveletIndex:
    vertex: TreeAddress
    j: int


def check_index(tree: UltrametricTree, idx: WaveletIndex) -> WaveletIndex:
    vertex = tree.check_vertex(idx.vertex)
    p = tree.branching.get(vertex)
    if p is None:
        raise AddressError(f"{format_address(tree, vertex)} is a leaf and carries no wavelets")
    if not 1 <= idx.j <= p - 1:
        raise AddressError(
            f"Invalid wavelet index j={idx.j} at "
            f"{format_address(tree, vertex)}: expected 1..{p - 1}"
        )
    return WaveletIndex(vertex, idx.j)


def wavelet_indices(tree: UltrametricTree) -> list[WaveletIndex]:
    """Canonical order: internal vertices lexicographically, then j ascending."""
    return [
        WaveletIndex(v, j) for v in tree.internal_vertices for j in range(1, tree.branching[v])
    ]


def _roots_of_unity(p: int, sign: int) -> np.ndarray:
    """(p, p-1) matrix of exp(sign * 2 pi i j k / p), rows k = 0..p-1, columns j = 1..p-1."""
    k = np.arange(p)[:, None]
    j = np.arange(1, p)[None, :]
    return np.exp(sign * 2j * np.pi * ((k * j) % p) / p)


class _Plan:
    """Index arrays shared by every transform on one tree."""

    def __init__(self, tree: UltrametricTree) -> None:
        vertices = tree.vertices
        vid = {v: i for i, v in enumerate(vertices)}
        measures = tree.measures
        self.n_vertices = len(vertices)
        self.leaf_ids = np.array([vid[leaf] for leaf in tree.leaves], dtype=np.intp)
        self.weights = np.array([float(measures[leaf]) for leaf in tree.leaves])
        self.top_scale = 1.0 / np.sqrt(float(tree.top_measure))

        by_depth: dict[int, tuple[list[int], list[int]]] = {}
        for v in vertices[1:]:
            ids, parents = by_depth.setdefault(len(v), ([], []))
            ids.append(vid[v])
            parents.append(vid[v[:-1]])
        self.levels = [
            (np.array(ids, dtype=np.intp), np.array(parents, dtype=np.intp))
            for _, (ids, parents) in sorted(by_depth.items())
        ]

        offsets: dict[TreeAddress, int] = {}
        groups: dict[int, tuple[list[list[int]], list[float], list[int]]] = {}
        pos = 0
        for v in tree.internal_vertices:
            p = tree.branching[v]
            offsets[v] = pos
            children, scales, starts = groups.setdefault(p, ([], [], []))
            children.append([vid[c] for c in tree.children(v)])
            scales.append(1.0 / np.sqrt(float(measures[v])))
            starts.append(pos)
            pos += p - 1
        self.n_coefficients = pos
        self.offsets = offsets
        self.groups = [
            (
                p,
                np.array(children, dtype=np.intp),
                np.array(scales),
                np.array(starts, dtype=np.intp)[:, None] + np.arange(p - 1)[None, :],
                _roots_of_unity(p, -1),
                _roots_of_unity(p, +1).T,
            )
            for p, (children, scales, starts) in sorted(groups.items())
        ]


_plans: weakref.WeakKeyDictionary[UltrametricTree, _Plan] = weakref.WeakKeyDictionary()


def _plan(tree: UltrametricTree) -> _Plan:
    plan = _plans.get(tree)
    if plan is None:
        plan = _plans[tree] = _Plan(tree)
    return plan


def leaf_weights(tree: UltrametricTree) -> np.ndarray:
    """mu(leaf) for every leaf, in leaf order."""
    return _plan(tree).weights


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function constant on every leaf ball: one complex value per leaf."""

    tree: UltrametricTree
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.tree.n_leaves,):
            raise DimensionError(
                f"GridFunction needs {self.tree.n_leaves} values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, tree: UltrametricTree) -> GridFunction:
        return cls(tree, np.zeros(tree.n_leaves, dtype=complex))

    @classmethod
    def constant(cls, tree: UltrametricTree, c: complex) -> GridFunction:
        return cls(tree, np.full(tree.n_leaves, c, dtype=complex))

    @classmethod
    def from_callable(
        cls, tree: UltrametricTree, fn: Callable[[TreeAddress], complex]
    ) -> GridFunction:
        return cls(tree, np.array([fn(leaf) for leaf in tree.leaves], dtype=complex))

    def __getitem__(self, leaf: TreeAddress) -> complex:
        return complex(self.values[self.tree.leaf_index[tuple(leaf)]])

    def inner(self, other: GridFunction) -> complex:
        """<self, other> = sum over leaves of conj(self) * other * mu(leaf)."""
        self._same_tree(other)
        return complex(np.sum(np.conj(self.values) * other.values * leaf_weights(self.tree)))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2 * leaf_weights(self.tree))))

    def max_abs_diff(self, other: GridFunction) -> float:
        self._same_tree(other)
        return float(np.max(np.abs(self.values - other.values)))

    def _same_tree(self, other: GridFunction) -> None:
        if other.tree is not self.tree:
            raise DimensionError("GridFunctions live on different trees")

    def __add__(self, other: GridFunction) -> GridFunction:
        self._same_tree(other)
        return GridFunction(self.tree, self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        self._same_tree(other)
        return GridFunction(self.tree, self.values - other.values)

    def __mul__(self, scalar: complex) -> GridFunction:
        return GridFunction(self.tree, self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class WaveletCoefficients:
    """Coefficients in :func:`wavelet_indices` order plus the top-ball mean slot."""

    tree: UltrametricTree
    values: np.ndarray
    mean: complex = 0j

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        expected = self.tree.n_leaves - 1
        if values.shape != (expected,):
            raise DimensionError(
                f"Expected {expected} wavelet coefficients, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mean", complex(self.mean))

    @classmethod
    def from_mapping(
        cls, tree: UltrametricTree, coeffs: Mapping[WaveletIndex, complex], mean: complex = 0j
    ) -> WaveletCoefficients:
        indices = wavelet_indices(tree)
        missing = [idx for idx in indices if idx not in coeffs]
        if missing:
            first = missing[0]
            raise DimensionError(
                f"{len(missing)} wavelet coefficient(s) missing, e.g. "
                f"({format_address(tree, first.vertex)}, j={first.j})"
            )
        extra = set(coeffs) - set(indices)
        if extra:
            raise DimensionError(f"{len(extra)} coefficient(s) do not index a wavelet of the tree")
        return cls(tree, np.array([coeffs[idx] for idx in indices], dtype=complex), mean)

    def __getitem__(self, idx: WaveletIndex) -> complex:
        idx = check_index(self.tree, idx)
        return complex(self.values[_plan(self.tree).offsets[idx.vertex] + idx.j - 1])

    def as_dict(self) -> dict[WaveletIndex, complex]:
        return {idx: complex(c) for idx, c in zip(wavelet_indices(self.tree), self.values)}

    def energy(self) -> float:
        """Sum of |c|^2 over wavelets and the mean slot."""
        return float(np.sum(np.abs(self.values) ** 2) + abs(self.mean) ** 2)

    def scaled(self, factors: np.ndarray, mean_factor: complex = 0) -> WaveletCoefficients:
        return WaveletCoefficients(self.tree, self.values * factors, self.mean * mean_factor)


def evaluate_wavelet(tree: UltrametricTree, idx: WaveletIndex, x: TreeAddress) -> complex:
    idx = check_index(tree, idx)
    x = tree.check_leaf(x)
    vertex = idx.vertex
    if x[: len(vertex)] != vertex:
        return 0j
    p = tree.branching[vertex]
    digit = x[len(vertex)]
    phase = (idx.j * digit) % p
    return complex(np.exp(2j * np.pi * phase / p) / np.sqrt(float(tree.measures[vertex])))


def wavelet(tree: UltrametricTree, idx: WaveletIndex) -> GridFunction:
    """psi_{Ij} sampled on every leaf."""
    return GridFunction.from_callable(tree, lambda x: evaluate_wavelet(tree, idx, x))


def indicator(tree: UltrametricTree, vertex: TreeAddress) -> GridFunction:
    """Normalized ball indicator Omega_J / sqrt(mu(D_J))."""
    vertex = tree.check_vertex(vertex)
    start, stop = tree.spans[vertex]
    values = np.zeros(tree.n_leaves, dtype=complex)
    values[start:stop] = 1.0 / np.sqrt(float(tree.measures[vertex]))
    return GridFunction(tree, values)


def forward(f: GridFunction) -> WaveletCoefficients:
    """c_{Ij} = <psi_{Ij}, f>, mean = <Omega_top / sqrt(mu), f>.

    Ball integrals are accumulated bottom-up, then each vertex applies a p_I-point
    DFT to its children's integrals: O(sum of p_I^2) overall.
    """
    plan = _plan(f.tree)
    s = np.zeros(plan.n_vertices, dtype=complex)
    s[plan.leaf_ids] = f.values * plan.weights
    for ids, parents in reversed(plan.levels):
        np.add.at(s, parents, s[ids])
    out = np.empty(plan.n_coefficients, dtype=complex)
    for _, children, scales, slots, analysis, _ in plan.groups:
        out[slots] = (s[children] @ analysis) * scales[:, None]
    return WaveletCoefficients(f.tree, out, s[0] * plan.top_scale)


def inverse(coeffs: WaveletCoefficients) -> GridFunction:
    """Synthesis: the mean plus every wavelet times its coefficient, pushed top-down."""
    plan = _plan(coeffs.tree)
    t = np.zeros(plan.n_vertices, dtype=complex)
    t[0] = coeffs.mean * plan.top_scale
    for _, children, scales, slots, _, synthesis in plan.groups:
        t[children] += (coeffs.values[slots] @ synthesis) * scales[:, None]
    for ids, parents in plan.levels:
        t[ids] += t[parents]
    return GridFunction(coeffs.tree, t[plan.leaf_ids])


def basis_matrix(tree: UltrametricTree, *, max_leaves: int = MAX_GRAM_LEAVES) -> np.ndarray:
    """N x N matrix: column per wavelet in canonical order, last column the normalized
    top indicator; entries sampled straight from the definition."""
    n = tree.n_leaves
    if n > max_leaves:
        raise SizeGuardError(f"basis matrix limited to {max_leaves} leaves, tree has {n}")
    out = np.zeros((n, n), dtype=complex)
    col = 0
    for v in tree.internal_vertices:
        p = tree.branching[v]
        norm = 1.0 / np.sqrt(float(tree.measures[v]))
        for j in range(1, p):
            for k, child in enumerate(tree.children(v)):
                start, stop = tree.spans[child]
                out[start:stop, col] = np.exp(2j * np.pi * ((j * k) % p) / p) * norm
            col += 1
    out[:, col] = 1.0 / np.sqrt(float(tree.top_measure))
    return out


def gram_matrix(
    tree: UltrametricTree,
    *,
    basis: np.ndarray | None = None,
    max_leaves: int = MAX_GRAM_LEAVES,
) -> np.ndarray:
    """Matrix of inner products <b_a, b_b> over the N basis vectors."""
    if basis is None:
        basis = basis_matrix(tree, max_leaves=max_leaves)
    elif tree.n_leaves > max_leaves:
        raise SizeGuardError(
            f"Gram matrix limited to {max_leaves} leaves, tree has {tree.n_leaves}"
        )
    weights = leaf_weights(tree)
    return basis.conj().T @ (basis * weights[:, None])


def brute_force_coefficients(
    f: GridFunction, *, max_leaves: int = MAX_GRAM_LEAVES
) -> WaveletCoefficients:
    """Coefficient-by-coefficient inner products against :func:`basis_matrix`."""
    basis = basis_matrix(f.tree, max_leaves=max_leaves)
    c = basis.conj().T @ (f.values * leaf_weights(f.tree))
    return WaveletCoefficients(f.tree, c[:-1], c[-1])


def parseval_energy(tree: UltrametricTree, vertex: TreeAddress) -> float:
    """Coefficient energy (wavelets and mean) of the normalized indicator of D_J."""
    return forward(indicator(tree, vertex)).energy()


def indicator_wavelet_energy(tree: UltrametricTree, vertex: TreeAddress) -> Fraction:
    """Exact wavelet part of the indicator energy: sum over I > J of
    (p_I - 1) mu(D_J) / mu(D_I); telescopes to 1 - mu(D_J) / mu(D_top)."""
    vertex = tree.check_vertex(vertex)
    mu = tree.measures
    return sum(
        (Fraction(tree.branching[vertex[:k]] - 1) * mu[vertex] / mu[vertex[:k]]
         for k in range(len(vertex))),
        Fraction(0),
    )
