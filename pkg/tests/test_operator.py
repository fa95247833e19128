from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from ultrawave.errors import AddressError, KernelError, SizeGuardError
from ultrawave.operator import (
    RadialKernel,
    apply_dense,
    apply_spectral,
    dense_matrix,
    eigenvalue_integral,
    eigenvalue_series,
    kernel_eval,
    kernel_matrix,
    make_kernel,
    random_kernel,
    spectrum,
)
from ultrawave.tree import TOP
from ultrawave.wavelet import GridFunction, WaveletIndex, basis_matrix, wavelet, wavelet_indices


def _random(tree, rng):
    n = tree.n_leaves
    return GridFunction(tree, rng.standard_normal(n) + 1j * rng.standard_normal(n))


def test_power_kernel_eigenvalue(binary3):
    # 16 * 1/4 + 4 * 1/2 * 1/2 + 1 * 1 * 1/2
    kernel = make_kernel(binary3, "power", 1.0)
    assert eigenvalue_series(binary3, kernel, (0, 1)) == pytest.approx(5.5, abs=1e-12)
    assert eigenvalue_integral(binary3, kernel, (0, 1)) == pytest.approx(5.5, abs=1e-12)


def test_constant_kernel_is_exact(rooted):
    kernel = make_kernel(rooted, "constant", Fraction(2, 3))
    for v in rooted.internal_vertices:
        assert eigenvalue_series(rooted, kernel, v, exact=True) == Fraction(2, 3) * Fraction(3, 2)


def test_series_matches_integral(ragged, rooted, rng):
    for tree in (ragged, rooted):
        kernel = random_kernel(tree, rng)
        series = spectrum(tree, kernel)
        integral = spectrum(tree, kernel, method="integral")
        for v in tree.internal_vertices:
            assert series[v] == pytest.approx(integral[v], rel=1e-12, abs=1e-300)


def test_wavelets_are_eigenvectors(rooted, rng):
    kernel = random_kernel(rooted, rng)
    lam = spectrum(rooted, kernel)
    for idx in wavelet_indices(rooted)[:12]:
        psi = wavelet(rooted, idx)
        image = apply_dense(rooted, kernel, psi)
        assert image.max_abs_diff(psi * lam[idx.vertex]) < 1e-10


def test_dense_and_spectral_agree(ragged, rooted, rng):
    for tree in (ragged, rooted):
        for kernel in (make_kernel(tree, "power", 0.5), random_kernel(tree, rng)):
            f = _random(tree, rng)
            dense = apply_dense(tree, kernel, f)
            assert dense.max_abs_diff(apply_spectral(tree, kernel, f)) < 1e-10


def test_constants_are_killed(mixed23):
    kernel = make_kernel(mixed23, "power", 0.5)
    one = GridFunction.constant(mixed23, 1.0)
    assert np.max(np.abs(apply_dense(mixed23, kernel, one).values)) < 1e-12
    assert np.max(np.abs(apply_spectral(mixed23, kernel, one).values)) < 1e-12


def test_zero_kernel_gives_zero(mixed23, rng):
    kernel = make_kernel(mixed23, "constant", 0.0)
    assert np.all(apply_spectral(mixed23, kernel, _random(mixed23, rng)).values == 0)


def test_symmetric_dense_matrix_is_nonnegative(rooted, rng):
    m = dense_matrix(rooted, random_kernel(rooted, rng), symmetric=True)
    assert np.max(np.abs(m - m.T)) < 1e-12
    assert np.linalg.eigvalsh((m + m.T) / 2)[0] > -1e-10


def test_dense_matrix_diagonalized_by_basis(mixed23):
    kernel = make_kernel(mixed23, "power", 1.0)
    basis = basis_matrix(mixed23)
    lam = np.append(spectrum(mixed23, kernel).factors(mixed23), 0.0)
    images = dense_matrix(mixed23, kernel) @ basis
    assert np.max(np.abs(images - basis * lam)) < 1e-10


def test_kernel_matrix_blocks(binary3):
    values = {v: float(len(v) + 1) for v in binary3.internal_vertices}
    k = kernel_matrix(binary3, make_kernel(binary3, "explicit", values))
    assert k[0, 0] == 0
    assert k[0, 1] == 3.0  # meet 00
    assert k[0, 2] == 2.0  # meet 0
    assert k[0, 7] == 1.0  # meet TOP
    assert np.array_equal(k, k.T)


def test_kernel_eval(binary3):
    kernel = make_kernel(binary3, "power", 0.0)
    assert kernel_eval(binary3, kernel, (0, 0, 0), (1, 1, 1)) == 1.0
    with pytest.raises(KernelError):
        kernel_eval(binary3, kernel, (0, 0, 0), (0, 0, 0))


def test_invalid_kernels(binary3):
    with pytest.raises(KernelError, match=">= 0"):
        make_kernel(binary3, "constant", -1.0)
    values = {v: 1.0 for v in binary3.internal_vertices}
    values[(1, 1)] = -0.5
    with pytest.raises(KernelError, match=">= 0"):
        make_kernel(binary3, "explicit", values)
    del values[(1, 1)]
    with pytest.raises(KernelError, match="missing"):
        make_kernel(binary3, "explicit", values)
    with pytest.raises(KernelError, match="non-internal"):
        RadialKernel({**values, (1, 1): 1.0, (0, 0, 0): 1.0}).check(binary3)
    with pytest.raises(KernelError, match="Unknown kernel"):
        make_kernel(binary3, "gaussian", 1.0)


def test_size_guards(binary3):
    with pytest.raises(SizeGuardError):
        kernel_matrix(binary3, make_kernel(binary3, "constant", 1.0), max_leaves=4)


def test_unknown_spectrum_method(binary3):
    with pytest.raises(ValueError):
        spectrum(binary3, make_kernel(binary3, "constant", 1.0), method="trace")


def test_spectral_output_on_top_wavelet(binary3):
    kernel = make_kernel(binary3, "constant", 1.0)
    psi = wavelet(binary3, WaveletIndex(TOP, 1))
    assert apply_spectral(binary3, kernel, psi).max_abs_diff(psi) < 1e-12


def test_non_finite_coefficients_are_rejected(mixed23):
    for value in (float("nan"), float("inf")):
        with pytest.raises(KernelError, match="finite"):
            make_kernel(mixed23, "constant", value)
    values = {v: 1.0 for v in mixed23.internal_vertices}
    values[(1,)] = float("nan")
    with pytest.raises(KernelError, match="finite"):
        make_kernel(mixed23, "explicit", values)


def test_integral_eigenvalue_of_arbitrary_kernel(ragged):
    values = {v: float(3 * len(v) + sum(v) + 1) for v in ragged.internal_vertices}
    kernel = make_kernel(ragged, "explicit", values)
    for v in ragged.internal_vertices:
        series = eigenvalue_series(ragged, kernel, v)
        assert eigenvalue_integral(ragged, kernel, v) == pytest.approx(series, rel=1e-12)
    with pytest.raises(AddressError):
        eigenvalue_integral(ragged, kernel, ragged.leaves[0])
