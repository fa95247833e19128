from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from ultrawave.errors import (
    AddressError,
    DimensionError,
    KernelError,
    TreeSpecError,
    UltrawaveError,
)
from ultrawave.loader import (
    format_rational,
    load_tree,
    load_tree_spec,
    parse_kernel_spec,
    parse_rational,
    read_coefficients,
    read_grid_function,
)
from ultrawave.tree import TOP, BranchingSpec, build_tree


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_inline_homogeneous_spec():
    tree = load_tree("{homogeneous: {p: 2, depth: 3}}")
    assert tree.n_leaves == 8
    assert tree.root == TOP


def test_json_file_with_root_and_measure(tmp_path):
    path = _write(
        tmp_path / "tree.json",
        json.dumps({"per_level": [2, 3, 2], "root": "01", "top_measure": "3/2"}),
    )
    tree = load_tree(path)
    assert tree.root == (0, 1)
    assert tree.top_measure == Fraction(3, 2)


def test_yaml_explicit_with_shorthand(tmp_path):
    path = _write(tmp_path / "tree.yml", "explicit:\n  - 2\n  - []\n  - [3, []]\n")
    tree = load_tree(path)
    assert tree.branching[TOP] == 3
    assert tree.is_leaf((1,))
    assert tree.branching[(2, 0)] == 3


def test_top_measure_root_keyword():
    tree = load_tree("{homogeneous: {p: 3, depth: 3}, root: '12', top_measure: root}")
    assert tree.measures[tree.root] == 1
    assert tree.top_measure == 9


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("{homogeneous: {p: 2}}", "missing depth"),
        ("{homogeneous: {p: 2, depth: 2}, per_level: [2]}", "exactly one"),
        ("{colour: red}", "exactly one"),
        ("{per_level: [2, 2], extra: 1}", "Unknown spec field"),
        ("{per_level: [2, 2], root: 01}", "root must be a quoted"),
        ("{per_level: [2, 2], top_measure: 0.5}", "top_measure"),
        ("{per_level: [2, 2], top_measure: '-1'}", "top_measure must be > 0"),
        ("{per_level: [2, 1]}", r"per_level\[1\]"),
        ("{per_level: [2, 2]", "Invalid YAML"),
        ("[1, 2]", "mapping"),
    ],
)
def test_malformed_specs(text, fragment):
    with pytest.raises(TreeSpecError, match=fragment):
        load_tree(text)


def test_missing_spec_file(tmp_path):
    with pytest.raises(TreeSpecError, match="File not found"):
        load_tree_spec(tmp_path / "nope.yml")
    with pytest.raises(TreeSpecError, match="File not found"):
        load_tree_spec("nope.json")


def test_root_outside_tree_is_a_spec_error():
    with pytest.raises(TreeSpecError):
        load_tree("{per_level: [2, 2], root: '3'}")


def test_rationals():
    assert parse_rational("3/2") == Fraction(3, 2)
    assert parse_rational(4) == 4
    assert parse_rational("0.25") == Fraction(1, 4)
    assert format_rational(Fraction(6, 4)) == "3/2"
    assert format_rational(Fraction(2)) == "2/1"
    for bad in (0.5, True, "x/2", "1/0"):
        with pytest.raises(UltrawaveError):
            parse_rational(bad)


def test_read_grid_function(tmp_path, mixed23):
    path = _write(
        tmp_path / "f.csv",
        "leaf_address,re,im\n12,1.5,0\n00,0,-1\n01,0,0\n02,0,0\n10,0,0\n11,2,0\n",
    )
    f = read_grid_function(path, mixed23)
    assert f[(1, 2)] == 1.5
    assert f[(0, 0)] == -1j
    assert f[(1, 1)] == 2


@pytest.mark.parametrize(
    "body, error",
    [
        ("00,1,0\n00,1,0\n01,0,0\n02,0,0\n10,0,0\n11,0,0\n", DimensionError),
        ("00,1,0\n01,0,0\n", DimensionError),
        ("0,1,0\n", DimensionError),
        ("00,x,0\n", DimensionError),
        ("05,1,0\n", AddressError),
    ],
)
def test_grid_function_rejects_bad_rows(tmp_path, mixed23, body, error):
    path = _write(tmp_path / "f.csv", "leaf_address,re,im\n" + body)
    with pytest.raises(error):
        read_grid_function(path, mixed23)


def test_grid_function_missing_column(tmp_path, mixed23):
    path = _write(tmp_path / "f.csv", "leaf,re,im\n00,1,0\n")
    with pytest.raises(DimensionError, match="leaf_address"):
        read_grid_function(path, mixed23)


def test_read_coefficients(tmp_path):
    tree = build_tree(BranchingSpec.homogeneous(2, 2))
    path = _write(
        tmp_path / "c.csv",
        "vertex_address,j,re,im\nTOP,1,1,0\n0,1,0,2\n1,1,0,0\nMEAN,0,0.5,0\n",
    )
    coeffs = read_coefficients(path, tree)
    assert np.allclose(coeffs.values, [1, 2j, 0])
    assert coeffs.mean == 0.5
    no_mean = _write(tmp_path / "n.csv", "vertex_address,j,re,im\nTOP,1,1,0\n0,1,0,2\n1,1,0,0\n")
    with pytest.raises(DimensionError, match="MEAN"):
        read_coefficients(no_mean, tree)
    short = _write(tmp_path / "s.csv", "vertex_address,j,re,im\nTOP,1,1,0\nMEAN,0,0,0\n")
    with pytest.raises(DimensionError, match="missing"):
        read_coefficients(short, tree)


def test_kernel_specs(tmp_path, binary3):
    assert parse_kernel_spec("constant:2.5", binary3)[TOP] == 2.5
    assert parse_kernel_spec("power:1", binary3)[(0, 1)] == pytest.approx(16.0)
    rows = "\n".join(
        f"{'TOP' if not v else ''.join(map(str, v))},1.0" for v in binary3.internal_vertices
    )
    path = _write(tmp_path / "k.csv", "vertex_address,value\n" + rows + "\n")
    assert parse_kernel_spec(str(path), binary3)[(1, 1)] == 1.0
    bad = _write(tmp_path / "bad.csv", "vertex_address,value\n" + rows.replace("11,1.0", "11,-1.0"))
    with pytest.raises(KernelError, match=">= 0"):
        parse_kernel_spec(str(bad), binary3)
    for text in ("constant:abc", "gauss:1", "missing.csv", "constant:-1"):
        with pytest.raises(KernelError):
            parse_kernel_spec(text, binary3)


def test_non_finite_kernels_are_rejected(tmp_path, binary3):
    for text in ("constant:nan", "constant:inf", "power:nan"):
        with pytest.raises(KernelError, match="finite"):
            parse_kernel_spec(text, binary3)
    rows = "\n".join(
        f"{'TOP' if not v else ''.join(map(str, v))},{'nan' if v == (0,) else '1.0'}"
        for v in binary3.internal_vertices
    )
    path = _write(tmp_path / "k.csv", "vertex_address,value\n" + rows + "\n")
    with pytest.raises(KernelError, match="finite"):
        parse_kernel_spec(str(path), binary3)
