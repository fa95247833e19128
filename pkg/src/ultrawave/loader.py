from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import yaml

from .errors import DimensionError, KernelError, TreeSpecError, UltrawaveError
from .operator import RadialKernel, make_kernel
from .tree import (
    BranchingSpec,
    TreeAddress,
    UltrametricTree,
    build_tree,
    parse_address,
    root_normalized,
)
from .wavelet import GridFunction, WaveletCoefficients, WaveletIndex

MEAN_LABEL = "MEAN"
SPEC_KINDS = ("homogeneous", "per_level", "explicit")


@dataclass(frozen=True)
class TreeSource:
    spec: BranchingSpec
    root: str | None = None
    top_measure: Fraction | str = Fraction(1)

    def build(self) -> UltrametricTree:
        """Build the tree; ``top_measure: root`` normalizes mu(D_R) to 1."""
        tree = build_tree(self.spec)
        root = parse_address(tree, self.root) if self.root is not None else None
        if self.top_measure == "root":
            return root_normalized(build_tree(self.spec, root=root))
        return build_tree(self.spec, root=root, top_measure=self.top_measure)


def _load_yaml(source: str | Path) -> dict[str, Any]:
    """Read a spec from a file path, or parse ``source`` itself as inline YAML/JSON."""
    path = Path(source)
    origin = str(source)
    try:
        is_file = path.is_file()
    except OSError:
        is_file = False
    if is_file:
        text = path.read_text(encoding="utf-8")
    elif isinstance(source, Path) or str(source).strip().endswith((".json", ".yml", ".yaml")):
        raise TreeSpecError(f"File not found: {path}")
    else:
        text = str(source)
        origin = "inline spec"

    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise TreeSpecError(f"Invalid YAML/JSON in {origin}: {e}") from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise TreeSpecError(f"Top-level spec must be a mapping in {origin}")
    return data


def parse_rational(value: Any, where: str = "value") -> Fraction:
    """Exact rational from ``"p/q"``, an integer or a decimal string."""
    if isinstance(value, bool):
        raise UltrawaveError(f"{where} must be a rational, got {value!r}")
    if isinstance(value, float):
        raise UltrawaveError(f"{where} must be given exactly as 'p/q' or an integer, got {value!r}")
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise UltrawaveError(f"{where} must be a rational like '3/2', got {value!r}") from e


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def load_tree_spec(source: str | Path) -> TreeSource:
    """Load a tree spec (file or inline) -> TreeSource."""
    data = _load_yaml(source)

    kinds = [k for k in SPEC_KINDS if k in data]
    if len(kinds) != 1:
        raise TreeSpecError(
            f"Spec must contain exactly one of {', '.join(SPEC_KINDS)}; found {kinds or 'none'}"
        )
    unknown = sorted(set(data) - set(SPEC_KINDS) - {"root", "top_measure"})
    if unknown:
        raise TreeSpecError(f"Unknown spec field(s): {', '.join(unknown)}")

    kind = kinds[0]
    raw = data[kind]
    if kind == "homogeneous":
        if not isinstance(raw, dict):
            raise TreeSpecError("homogeneous must be a mapping with keys p and depth")
        missing = [k for k in ("p", "depth") if k not in raw]
        if missing:
            raise TreeSpecError(f"homogeneous is missing {', '.join(missing)}")
        spec = BranchingSpec.homogeneous(raw["p"], raw["depth"])
    elif kind == "per_level":
        if not isinstance(raw, list):
            raise TreeSpecError("per_level must be a list of branching indices")
        spec = BranchingSpec.per_level(raw)
    else:
        if not isinstance(raw, (list, int)) or isinstance(raw, bool):
            raise TreeSpecError("explicit must be a nested list (or an integer child count)")
        spec = BranchingSpec.explicit(raw)
    spec.expand()

    root = data.get("root")
    if root is not None and not isinstance(root, str):
        raise TreeSpecError(f"root must be a quoted digit string such as \"01\", got {root!r}")

    top_measure: Fraction | str = Fraction(1)
    if "top_measure" in data:
        raw_measure = data["top_measure"]
        if raw_measure == "root":
            top_measure = "root"
        else:
            try:
                top_measure = parse_rational(raw_measure, "top_measure")
            except UltrawaveError as e:
                raise TreeSpecError(str(e)) from e
            if top_measure <= 0:
                raise TreeSpecError(f"top_measure must be > 0, got {raw_measure!r}")
    return TreeSource(spec, root, top_measure)


def load_tree(source: str | Path) -> UltrametricTree:
    try:
        return load_tree_spec(source).build()
    except TreeSpecError:
        raise
    except UltrawaveError as e:
        raise TreeSpecError(str(e)) from e


def _read_csv(path: str | Path, columns: list[str]) -> pd.DataFrame:
    p = Path(path)
    try:
        df = pd.read_csv(p, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise DimensionError(f"File not found: {p}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DimensionError(f"Invalid CSV in {p}: {e}") from e
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise DimensionError(f"Missing column(s) {', '.join(missing)} in {p}")
    return df


def _complex(re: str, im: str, where: str) -> complex:
    try:
        return complex(float(re), float(im))
    except ValueError as e:
        raise DimensionError(f"{where}: re/im must be numbers, got {re!r}, {im!r}") from e


def read_grid_function(path: str | Path, tree: UltrametricTree) -> GridFunction:
    """``leaf_address,re,im`` CSV -> GridFunction; every leaf exactly once."""
    df = _read_csv(path, ["leaf_address", "re", "im"])
    values: dict[TreeAddress, complex] = {}
    for i, row in enumerate(df.itertuples(index=False)):
        leaf = parse_address(tree, row.leaf_address)
        if not tree.is_leaf(leaf):
            raise DimensionError(f"row {i}: {row.leaf_address} is not a leaf")
        if leaf in values:
            raise DimensionError(f"row {i}: duplicate leaf {row.leaf_address}")
        values[leaf] = _complex(row.re, row.im, f"row {i}")
    if len(values) != tree.n_leaves:
        raise DimensionError(f"{path}: {len(values)} leaves given, tree has {tree.n_leaves}")
    return GridFunction(tree, np.array([values[leaf] for leaf in tree.leaves]))


def read_coefficients(path: str | Path, tree: UltrametricTree) -> WaveletCoefficients:
    """``vertex_address,j,re,im`` CSV with one ``MEAN,0,re,im`` row."""
    df = _read_csv(path, ["vertex_address", "j", "re", "im"])
    coeffs: dict[WaveletIndex, complex] = {}
    mean: complex | None = None
    for i, row in enumerate(df.itertuples(index=False)):
        value = _complex(row.re, row.im, f"row {i}")
        if row.vertex_address == MEAN_LABEL:
            if mean is not None:
                raise DimensionError(f"row {i}: duplicate {MEAN_LABEL} row")
            mean = value
            continue
        try:
            idx = WaveletIndex(parse_address(tree, row.vertex_address), int(row.j))
        except ValueError as e:
            raise DimensionError(f"row {i}: {e}") from e
        if idx in coeffs:
            raise DimensionError(f"row {i}: duplicate coefficient {row.vertex_address},{row.j}")
        coeffs[idx] = value
    if mean is None:
        raise DimensionError(f"{path}: missing {MEAN_LABEL} row")
    return WaveletCoefficients.from_mapping(tree, coeffs, mean)


def read_kernel(path: str | Path, tree: UltrametricTree) -> RadialKernel:
    """``vertex_address,value`` CSV -> explicit kernel."""
    try:
        df = _read_csv(path, ["vertex_address", "value"])
    except DimensionError as e:
        raise KernelError(str(e)) from e
    values: dict[TreeAddress, float] = {}
    for i, row in enumerate(df.itertuples(index=False)):
        try:
            values[parse_address(tree, row.vertex_address)] = float(row.value)
        except ValueError as e:
            raise KernelError(f"row {i}: {e}") from e
    return make_kernel(tree, "explicit", values)


def parse_kernel_spec(text: str, tree: UltrametricTree) -> RadialKernel:
    """``constant:c``, ``power:alpha``, or a path to a kernel CSV."""
    kind, sep, arg = text.partition(":")
    if sep and kind in ("constant", "power"):
        try:
            value = float(arg)
        except ValueError as e:
            raise KernelError(f"Invalid kernel parameter in '{text}'") from e
        return make_kernel(tree, kind, value)
    if Path(text).is_file():
        return read_kernel(text, tree)
    raise KernelError(
        f"Kernel spec must be constant:<c>, power:<alpha> or a CSV path, got '{text}'"
    )
