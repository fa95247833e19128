"""The ultrametric change of variable rho onto the half-line and the stepwise
(non-homogeneous) wavelets it produces.

rho reads the digits of a point like a mixed-radix expansion: digit d_k contributes
d_k * mu(ball entered after k + 1 digits). It maps every ball D_I onto the interval
[rho(I), rho(I) + mu(D_I)], preserving measure, so rho^-1* is unitary.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionError, UltrawaveError
from .metric import distance, distance_scale
from .tree import TreeAddress, UltrametricTree
from .wavelet import GridFunction, WaveletIndex, check_index

Rational = Fraction | int | str


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    """Step function on [t_0, t_m): ``values[k]`` on [t_k, t_k+1), zero elsewhere."""

    breakpoints: tuple[Fraction, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        breakpoints = tuple(Fraction(t) for t in self.breakpoints)
        values = np.asarray(self.values, dtype=complex)
        if len(breakpoints) < 2:
            raise DimensionError("a step function needs at least two breakpoints")
        if any(b <= a for a, b in zip(breakpoints, breakpoints[1:])):
            raise DimensionError("breakpoints must be strictly increasing")
        if values.shape != (len(breakpoints) - 1,):
            raise DimensionError(
                f"{len(breakpoints) - 1} intervals need as many values, got shape {values.shape}"
            )
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)

    @property
    def support(self) -> tuple[Fraction, Fraction]:
        return self.breakpoints[0], self.breakpoints[-1]

    def widths(self) -> list[Fraction]:
        return [b - a for a, b in zip(self.breakpoints, self.breakpoints[1:])]

    def __call__(self, t: Rational | float) -> complex:
        t = Fraction(t)
        lo, hi = self.support
        if t < lo or t >= hi:
            return 0j
        k = bisect.bisect_right(self.breakpoints, t) - 1
        return complex(self.values[k])

    def inner(self, other: PiecewiseConstantFn) -> complex:
        """L2(R+) inner product <self, other> on the merged exact breakpoints."""
        cuts = sorted(set(self.breakpoints) | set(other.breakpoints))
        total = 0j
        for a, b in zip(cuts, cuts[1:]):
            total += self(a).conjugate() * other(a) * float(b - a)
        return total

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 * float(w) for v, w in zip(self.values, self.widths())))


def rho(tree: UltrametricTree, x: TreeAddress) -> Fraction:
    """Image of a leaf, or of the zero-continuation point of a vertex."""
    x = tree.check_vertex(x)
    mu = tree.measures
    return sum((d * mu[x[: k + 1]] for k, d in enumerate(x)), Fraction(0))


def ball_interval(tree: UltrametricTree, vertex: TreeAddress) -> tuple[Fraction, Fraction]:
    """rho(D_I) = [rho(I), rho(I) + mu(D_I)] up to finitely many points."""
    left = rho(tree, vertex)
    return left, left + tree.measures[tuple(vertex)]


def rho_preimage(tree: UltrametricTree, t: Rational) -> TreeAddress:
    """Leaf whose interval [rho(x), rho(x) + mu(x)) contains t.

    A point on a shared boundary goes to the right-hand interval, i.e. to the
    terminating digit expansion; t == top_measure maps to the last leaf.
    """
    t = Fraction(t)
    if not 0 <= t <= tree.top_measure:
        raise UltrawaveError(f"t={t} lies outside [0, {tree.top_measure}]")
    vertex: TreeAddress = ()
    left = Fraction(0)
    while vertex in tree.branching:
        p = tree.branching[vertex]
        width = tree.measures[vertex] / p
        k = min(math.floor((t - left) / width), p - 1)
        left += k * width
        vertex = vertex + (k,)
    return vertex


def export_wavelet(tree: UltrametricTree, idx: WaveletIndex) -> PiecewiseConstantFn:
    """Psi_Ij = psi_Ij composed with rho^-1: p_I pieces, one per child interval."""
    idx = check_index(tree, idx)
    p = tree.branching[idx.vertex]
    mu = tree.measures[idx.vertex]
    left = rho(tree, idx.vertex)
    width = mu / p
    phases = np.array([(idx.j * k) % p for k in range(p)])
    values = np.exp(2j * np.pi * phases / p) / math.sqrt(float(mu))
    return PiecewiseConstantFn(tuple(left + k * width for k in range(p + 1)), values)


def export_mean(tree: UltrametricTree) -> PiecewiseConstantFn:
    """The normalized top indicator on [0, top_measure)."""
    return PiecewiseConstantFn(
        (Fraction(0), tree.top_measure), np.array([1.0 / math.sqrt(float(tree.top_measure))])
    )


def pushforward(f: GridFunction) -> PiecewiseConstantFn:
    """rho^-1* f: the leaf values laid out on the leaf intervals."""
    tree = f.tree
    cuts = [rho(tree, leaf) for leaf in tree.leaves] + [tree.top_measure]
    return PiecewiseConstantFn(tuple(cuts), f.values)


def pullback(tree: UltrametricTree, fn: PiecewiseConstantFn) -> GridFunction:
    """rho* F (x) = F(rho(x)), sampled at each leaf's left endpoint."""
    return GridFunction(tree, np.array([fn(rho(tree, leaf)) for leaf in tree.leaves]))


def holder_gap(tree: UltrametricTree, x: TreeAddress, y: TreeAddress) -> tuple[Fraction, Fraction]:
    """(|rho(x) - rho(y)|, |xy|) with |xy| taken on the scale where diameters equal
    measures; for R at the top vertex and unit top measure this is ``distance``."""
    x = tree.check_leaf(x)
    y = tree.check_leaf(y)
    return abs(rho(tree, x) - rho(tree, y)), distance(tree, x, y) / distance_scale(tree)


def homogeneous_wavelet(p: int, level: int, shift: int, j: int = 1) -> PiecewiseConstantFn:
    """p^(level/2) Psi^(p)(p^level t - shift), Psi^(p) taking the value
    exp(2 pi i j l / p) on [l/p, (l+1)/p)."""
    if p < 2 or not 1 <= j <= p - 1:
        raise UltrawaveError(f"need p >= 2 and 1 <= j <= p - 1, got p={p}, j={j}")
    scale = Fraction(1, p**level)
    left = shift * scale
    phases = np.array([(j * k) % p for k in range(p)])
    values = np.exp(2j * np.pi * phases / p) * math.sqrt(float(p) ** level)
    return PiecewiseConstantFn(tuple(left + k * scale / p for k in range(p + 1)), values)


def haar_function(level: int, shift: int) -> PiecewiseConstantFn:
    """2^(level/2) Psi(2^level t - shift) for the Haar mother wavelet."""
    return homogeneous_wavelet(2, level, shift)


def haar_system(depth: int) -> list[PiecewiseConstantFn]:
    """Haar functions supported in [0, 1] down to ``depth`` dyadic levels."""
    return [haar_function(level, n) for level in range(depth) for n in range(2**level)]
