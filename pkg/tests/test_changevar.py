from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultrawave.changevar import (
    PiecewiseConstantFn,
    ball_interval,
    export_mean,
    export_wavelet,
    haar_function,
    haar_system,
    holder_gap,
    homogeneous_wavelet,
    pullback,
    pushforward,
    rho,
    rho_preimage,
)
from ultrawave.errors import AddressError, DimensionError, UltrawaveError
from ultrawave.tree import TOP, BranchingSpec, build_tree
from ultrawave.wavelet import GridFunction, WaveletIndex, wavelet_indices

MIXED = build_tree(BranchingSpec.per_level([2, 3, 2]))


def test_rho_reads_digits_as_mixed_radix(mixed23):
    assert rho(mixed23, (1, 2)) == Fraction(5, 6)
    assert rho(mixed23, (0, 0)) == 0


def test_rho_map_on_ternary_tree():
    tree = build_tree(BranchingSpec.homogeneous(3, 2))
    assert [rho(tree, leaf) for leaf in tree.leaves] == [Fraction(k, 9) for k in range(9)]


def test_preimage(binary3):
    assert rho_preimage(binary3, Fraction(1, 2)) == (1, 0, 0)
    assert rho_preimage(binary3, Fraction(3, 16)) == (0, 0, 1)
    assert rho_preimage(binary3, 1) == (1, 1, 1)
    with pytest.raises(UltrawaveError):
        rho_preimage(binary3, Fraction(9, 8))


def test_preimage_inverts_rho(ragged):
    for leaf in ragged.leaves:
        assert rho_preimage(ragged, rho(ragged, leaf)) == leaf


def test_intervals_tile_and_preserve_measure(ragged):
    for v in ragged.internal_vertices:
        left, right = ball_interval(ragged, v)
        assert right - left == ragged.measures[v]
        cuts = [ball_interval(ragged, c) for c in ragged.children(v)]
        assert cuts[0][0] == left and cuts[-1][1] == right
        assert all(a[1] == b[0] for a, b in zip(cuts, cuts[1:]))


def test_export_is_non_homogeneous(mixed23):
    fn = export_wavelet(mixed23, WaveletIndex((0,), 1))
    assert fn.breakpoints == (0, Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))
    roots = np.exp(2j * np.pi * np.arange(3) / 3)
    assert np.allclose(fn.values, np.sqrt(2) * roots, atol=1e-15)
    top = export_wavelet(mixed23, WaveletIndex(TOP, 1))
    assert top.widths() == [Fraction(1, 2), Fraction(1, 2)]


def test_export_haar_profile():
    tree = build_tree(BranchingSpec.homogeneous(2, 1))
    fn = export_wavelet(tree, WaveletIndex(TOP, 1))
    assert fn.breakpoints == (0, Fraction(1, 2), 1)
    assert np.allclose(fn.values, [1.0, -1.0], atol=1e-15)
    assert fn(Fraction(1, 4)) == pytest.approx(1.0)
    assert fn(Fraction(1, 2)) == pytest.approx(-1.0)
    assert fn(1) == 0


def test_export_rejects_bad_index(binary3):
    with pytest.raises(AddressError):
        export_wavelet(binary3, WaveletIndex((0,), 3))


def test_exported_family_is_orthonormal():
    family = [export_wavelet(MIXED, idx) for idx in wavelet_indices(MIXED)]
    family.append(export_mean(MIXED))
    gram = np.array([[f.inner(g) for g in family] for f in family])
    assert np.max(np.abs(gram - np.eye(MIXED.n_leaves))) < 1e-12


def test_dyadic_tree_exports_the_haar_system():
    tree = build_tree(BranchingSpec.homogeneous(2, 4))
    exported = {f.breakpoints: f for f in (export_wavelet(tree, i) for i in wavelet_indices(tree))}
    for haar in haar_system(4):
        match = exported[haar.breakpoints]
        scalar = haar.inner(match)
        assert abs(abs(scalar) - 1) < 1e-12
        assert np.max(np.abs(match.values - scalar * haar.values)) < 1e-12


def test_homogeneous_wavelet_shape():
    fn = homogeneous_wavelet(3, 1, 2, j=2)
    assert fn.support == (Fraction(2, 3), 1)
    assert abs(fn.norm() - 1) < 1e-12
    assert haar_function(0, 0).widths() == [Fraction(1, 2), Fraction(1, 2)]
    with pytest.raises(UltrawaveError):
        homogeneous_wavelet(3, 0, 0, j=3)


def test_push_and_pull(rooted, rng):
    f = GridFunction(rooted, rng.standard_normal(rooted.n_leaves))
    pushed = pushforward(f)
    assert abs(pushed.norm() - f.norm()) < 1e-12
    assert pullback(rooted, pushed).max_abs_diff(f) == 0


@settings(max_examples=300, deadline=None)
@given(x=st.sampled_from(MIXED.leaves), y=st.sampled_from(MIXED.leaves))
def test_holder_bound(x, y):
    gap, ultra = holder_gap(MIXED, x, y)
    assert gap <= ultra


def test_holder_bound_on_shifted_root(rooted):
    for x in rooted.leaves[::5]:
        for y in rooted.leaves:
            gap, ultra = holder_gap(rooted, x, y)
            assert gap <= ultra


def test_step_function_validation():
    with pytest.raises(DimensionError):
        PiecewiseConstantFn((0,), np.array([]))
    with pytest.raises(DimensionError):
        PiecewiseConstantFn((0, Fraction(1, 2), Fraction(1, 2)), np.array([1.0, 2.0]))
    with pytest.raises(DimensionError):
        PiecewiseConstantFn((0, 1), np.array([1.0, 2.0]))


def test_step_function_lookup_at_breakpoints():
    fn = PiecewiseConstantFn((0, Fraction(1, 4), Fraction(1, 2), 1), np.array([1.0, 2.0, 3.0]))
    assert fn(0) == 1.0
    assert fn(Fraction(1, 4)) == 2.0
    assert fn(Fraction(3, 8)) == 2.0
    assert fn(Fraction(1, 2)) == 3.0
    assert fn(Fraction(99, 100)) == 3.0
    assert fn(1) == 0j
    assert fn(-Fraction(1, 8)) == 0j
