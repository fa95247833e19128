"""Radial kernels and the pseudodifferential operator they define.

    T f(x) = integral of T(x, y) (f(x) - f(y)) dmu(y)

with T(x, y) = T^(I) for I = meet(x, y). Every wavelet psi_{Ij} is an eigenvector
with an eigenvalue lambda_I depending only on I; the constant function is killed.
Kernels vanish above the top ball, so all eigenvalue sums are finite and exact.
"""
from __future__ import annotations

import logging
import math
import weakref
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import MAX_DENSE_LEAVES
from .errors import KernelError, SizeGuardError
from .metric import distance, distance_scale
from .tree import TreeAddress, UltrametricTree, format_address, meet, vertex_point
from .wavelet import GridFunction, forward, inverse, leaf_weights

log = logging.getLogger(__name__)

KERNEL_KINDS = ("constant", "power", "explicit")


def _nonnegative(t: float | Fraction) -> bool:
    return math.isfinite(t) and t >= 0


@dataclass(frozen=True, eq=False)
class RadialKernel:
    """Nonnegative coefficient T^(I) for every internal vertex I."""

    values: Mapping[TreeAddress, float | Fraction]

    def __getitem__(self, vertex: TreeAddress) -> float | Fraction:
        return self.values[vertex]

    def check(self, tree: UltrametricTree) -> RadialKernel:
        internal = set(tree.internal_vertices)
        missing = internal - set(self.values)
        if missing:
            raise KernelError(
                f"{len(missing)} internal vertex coefficient(s) missing, e.g. "
                f"{format_address(tree, min(missing))}"
            )
        extra = set(self.values) - internal
        if extra:
            raise KernelError(
                f"Kernel coefficients given for non-internal vertices, e.g. {min(extra)!r}"
            )
        negative = [v for v, t in self.values.items() if not _nonnegative(t)]
        if negative:
            raise KernelError(
                "Kernel coefficients must be finite and >= 0; "
                f"{format_address(tree, min(negative))} has {self.values[min(negative)]}"
            )
        return self


@dataclass(frozen=True)
class Spectrum:
    """lambda_I per internal vertex; the mean (constant) direction has eigenvalue 0."""

    values: dict[TreeAddress, float] = field(default_factory=dict)
    mean: float = 0.0

    def __getitem__(self, vertex: TreeAddress) -> float:
        return self.values[vertex]

    def factors(self, tree: UltrametricTree) -> np.ndarray:
        """Eigenvalue of every wavelet, in canonical index order."""
        return np.array(
            [self.values[v] for v in tree.internal_vertices for _ in range(1, tree.branching[v])]
        )


def make_kernel(
    tree: UltrametricTree,
    kind: str,
    value: float | Fraction | Mapping[TreeAddress, float | Fraction] = 1.0,
) -> RadialKernel:
    """``constant``: T = c; ``power``: T = mu(D_I)^-(1 + alpha); ``explicit``: as given."""
    if kind == "constant":
        if not _nonnegative(value):
            raise KernelError(f"constant kernel must be finite and >= 0, got {value}")
        values = {v: value for v in tree.internal_vertices}
    elif kind == "power":
        exponent = -(1.0 + float(value))
        values = {v: float(tree.measures[v]) ** exponent for v in tree.internal_vertices}
    elif kind == "explicit":
        if not isinstance(value, Mapping):
            raise KernelError("explicit kernel needs a mapping vertex -> value")
        values = {tuple(v): t for v, t in value.items()}
    else:
        raise KernelError(
            f"Unknown kernel kind '{kind}', expected one of {', '.join(KERNEL_KINDS)}"
        )
    return RadialKernel(values).check(tree)


def random_kernel(tree: UltrametricTree, rng: np.random.Generator) -> RadialKernel:
    """Nonnegative kernel with independent exponential coefficients; some are zeroed."""
    draws = rng.exponential(1.0, size=len(tree.internal_vertices))
    draws[rng.random(draws.size) < 0.1] = 0.0
    return RadialKernel(dict(zip(tree.internal_vertices, draws.tolist()))).check(tree)


def kernel_eval(
    tree: UltrametricTree, kernel: RadialKernel, x: TreeAddress, y: TreeAddress
) -> float:
    """T(x, y) = T^(I) with I the vertex whose ball has diameter |xy| and contains x."""
    x = tree.check_leaf(x)
    y = tree.check_leaf(y)
    if x == y:
        raise KernelError("the kernel diagonal T(x, x) is never evaluated")
    return kernel[meet(tree, x, y)]


def kernel_matrix(
    tree: UltrametricTree, kernel: RadialKernel, *, max_leaves: int = MAX_DENSE_LEAVES
) -> np.ndarray:
    """N x N matrix of T(x, y) over leaves, zero on the diagonal."""
    n = tree.n_leaves
    if n > max_leaves:
        raise SizeGuardError(f"dense operator limited to {max_leaves} leaves, tree has {n}")
    kernel.check(tree)
    out = np.zeros((n, n))
    # parents come first, so every deeper ball overwrites its own block
    for v in tree.internal_vertices:
        start, stop = tree.spans[v]
        out[start:stop, start:stop] = float(kernel[v])
    np.fill_diagonal(out, 0.0)
    return out


def dense_matrix(
    tree: UltrametricTree,
    kernel: RadialKernel,
    *,
    symmetric: bool = False,
    max_leaves: int = MAX_DENSE_LEAVES,
) -> np.ndarray:
    """The operator in the leaf basis: (T f)[x] = sum_y A[x, y] f[y].

    ``symmetric=True`` returns W^1/2 A W^-1/2 (the orthonormal leaf basis
    e_x / sqrt(mu(x))), a real symmetric matrix with the same spectrum.
    """
    weights = leaf_weights(tree)
    a = -kernel_matrix(tree, kernel, max_leaves=max_leaves) * weights[None, :]
    np.fill_diagonal(a, -a.sum(axis=1))
    if symmetric:
        root_w = np.sqrt(weights)
        a = root_w[:, None] * a / root_w[None, :]
    return a


def apply_dense(
    tree: UltrametricTree,
    kernel: RadialKernel,
    f: GridFunction,
    *,
    max_leaves: int = MAX_DENSE_LEAVES,
) -> GridFunction:
    """Direct quadrature of the integral: exact, since f and T(x, .) are constant on
    leaf balls. O(N^2)."""
    t = kernel_matrix(tree, kernel, max_leaves=max_leaves) * leaf_weights(tree)[None, :]
    values = f.values * t.sum(axis=1) - t @ f.values
    return GridFunction(tree, values)


def eigenvalue_series(
    tree: UltrametricTree, kernel: RadialKernel, vertex: TreeAddress, *, exact: bool = False
) -> float | Fraction:
    """lambda_I = T^(I) mu(D_I) + sum over J > I of T^(J) mu(D_J) (1 - 1/p_J).

    J runs over the vertices strictly above I up to the top vertex; the series always
    converges on a truncated tree. With ``exact=True`` the coefficients are converted to
    Fractions exactly and a Fraction is returned.
    """
    vertex = tree.check_vertex(vertex)
    tree.p(vertex)
    mu = tree.measures
    terms = [(kernel[vertex], mu[vertex])]
    for k in range(len(vertex)):
        above = vertex[:k]
        terms.append((kernel[above], mu[above] * (1 - Fraction(1, tree.branching[above]))))
    if exact:
        return sum((Fraction(t) * m for t, m in terms), Fraction(0))
    return float(sum(float(t) * float(m) for t, m in terms))


_shells: weakref.WeakKeyDictionary[UltrametricTree, dict] = weakref.WeakKeyDictionary()


def _outer_shell(tree: UltrametricTree, vertex: TreeAddress) -> list[tuple[TreeAddress, float]]:
    """(meet with the point I, mu(y)) for every leaf y with |Iy| > |I|."""
    cache = _shells.setdefault(tree, {})
    shell = cache.get(vertex)
    if shell is None:
        point = vertex_point(tree, vertex)
        radius = distance_scale(tree) * tree.measures[vertex]
        shell = [
            (meet(tree, point, y), float(tree.measures[y]))
            for y in tree.leaves
            if y != point and distance(tree, point, y) > radius
        ]
        cache[vertex] = shell
    return shell


def eigenvalue_integral(tree: UltrametricTree, kernel: RadialKernel, vertex: TreeAddress) -> float:
    """lambda_I = integral over |Iy| > |I| of T(I, y) dmu(y) + T(I, I1) mu(D_I).

    The point I continues vertex I with zero digits; I1 continues child 1 of I.
    """
    vertex = tree.check_vertex(vertex)
    tree.p(vertex)
    point = vertex_point(tree, vertex)
    near = kernel_eval(tree, kernel, point, vertex_point(tree, vertex + (1,)))
    integral = sum(float(kernel[j]) * w for j, w in _outer_shell(tree, vertex))
    return float(integral + float(near) * float(tree.measures[vertex]))


def _series_all(tree: UltrametricTree, kernel: RadialKernel) -> dict[TreeAddress, float]:
    """Every lambda_I in one pass, parents before children."""
    above: dict[TreeAddress, float] = {(): 0.0}
    values: dict[TreeAddress, float] = {}
    for v in tree.internal_vertices:
        p = tree.branching[v]
        own = float(kernel[v]) * float(tree.measures[v])
        values[v] = own + above[v]
        for c in tree.children(v):
            above[c] = above[v] + own * (1.0 - 1.0 / p)
    return values


def spectrum(tree: UltrametricTree, kernel: RadialKernel, *, method: str = "series") -> Spectrum:
    kernel.check(tree)
    if method == "series":
        values = _series_all(tree, kernel)
    elif method == "integral":
        values = {v: eigenvalue_integral(tree, kernel, v) for v in tree.internal_vertices}
    else:
        raise ValueError(f"Unknown spectrum method '{method}', expected series or integral")
    return Spectrum(values)


def apply_spectral(tree: UltrametricTree, kernel: RadialKernel, f: GridFunction) -> GridFunction:
    """inverse(lambda * forward(f)); the mean coefficient is multiplied by 0."""
    lam = spectrum(tree, kernel)
    return inverse(forward(f).scaled(lam.factors(tree), lam.mean))
