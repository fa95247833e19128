"""CSV outputs and the run manifest."""
from __future__ import annotations

import hashlib
import json
from decimal import Context, Decimal
from fractions import Fraction
from pathlib import Path

import pandas as pd

from . import __version__
from .changevar import PiecewiseConstantFn, rho
from .config import DEFAULT_PRECISION
from .loader import MEAN_LABEL, format_rational
from .operator import Spectrum
from .tree import UltrametricTree, format_address
from .wavelet import GridFunction, WaveletCoefficients, wavelet_indices


def format_float(x: float) -> str:
    """Shortest text that parses back to the same double."""
    return repr(float(x))


def format_decimal(value: Fraction, precision: int = DEFAULT_PRECISION) -> str:
    ctx = Context(prec=precision)
    return str(ctx.divide(Decimal(value.numerator), Decimal(value.denominator)))


def tree_frame(tree: UltrametricTree, precision: int = DEFAULT_PRECISION) -> pd.DataFrame:
    rows = []
    for v in tree.vertices:
        mu = tree.measures[v]
        rows.append(
            {
                "vertex_address": format_address(tree, v),
                "depth": len(v),
                "kind": "internal" if v in tree.branching else "leaf",
                "branching": tree.branching.get(v, 0),
                "measure": format_rational(mu),
                "measure_decimal": format_decimal(mu, precision),
            }
        )
    return pd.DataFrame(rows)


def grid_function_frame(f: GridFunction) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "leaf_address": [format_address(f.tree, leaf) for leaf in f.tree.leaves],
            "re": [format_float(v.real) for v in f.values],
            "im": [format_float(v.imag) for v in f.values],
        }
    )


def coefficients_frame(coeffs: WaveletCoefficients) -> pd.DataFrame:
    tree = coeffs.tree
    rows = [
        {
            "vertex_address": format_address(tree, idx.vertex),
            "j": idx.j,
            "re": format_float(c.real),
            "im": format_float(c.imag),
        }
        for idx, c in zip(wavelet_indices(tree), coeffs.values)
    ]
    rows.append(
        {
            "vertex_address": MEAN_LABEL,
            "j": 0,
            "re": format_float(coeffs.mean.real),
            "im": format_float(coeffs.mean.imag),
        }
    )
    return pd.DataFrame(rows)


def spectrum_frame(
    tree: UltrametricTree, series: Spectrum, integral: Spectrum | None = None
) -> pd.DataFrame:
    rows = []
    for v in tree.internal_vertices:
        row = {"vertex_address": format_address(tree, v), "lambda": format_float(series[v])}
        if integral is not None:
            row["lambda_integral"] = format_float(integral[v])
            row["diff"] = format_float(abs(series[v] - integral[v]))
        rows.append(row)
    return pd.DataFrame(rows)


def rho_map_frame(tree: UltrametricTree, precision: int = DEFAULT_PRECISION) -> pd.DataFrame:
    rows = []
    for leaf in tree.leaves:
        t = rho(tree, leaf)
        rows.append(
            {
                "leaf_address": format_address(tree, leaf),
                "t": format_rational(t),
                "t_decimal": format_decimal(t, precision),
            }
        )
    return pd.DataFrame(rows)


def piecewise_frame(fn: PiecewiseConstantFn, precision: int = DEFAULT_PRECISION) -> pd.DataFrame:
    rows = []
    for (a, b), v in zip(zip(fn.breakpoints, fn.breakpoints[1:]), fn.values):
        rows.append(
            {
                "t_left": format_decimal(a, precision),
                "t_right": format_decimal(b, precision),
                "re": format_float(v.real),
                "im": format_float(v.imag),
                "t_left_exact": format_rational(a),
                "t_right_exact": format_rational(b),
            }
        )
    return pd.DataFrame(rows)


def write_csv(df: pd.DataFrame, out_path: str | Path) -> tuple[str, int]:
    """Write the CSV and return (sha256_hex, row count)."""
    df.to_csv(out_path, index=False, lineterminator="\n")
    sha = hashlib.sha256(Path(out_path).read_bytes()).hexdigest()
    return sha, len(df)


def build_manifest(
    *,
    subcommand: str,
    tree_source: str | None,
    tree: UltrametricTree | None,
    mode: str | None,
    kernel: str | None,
    seed: int,
    tolerances: dict[str, float],
    output_file: str | None,
    output_sha256: str | None,
    row_count: int | None,
    out: str | Path = "manifest.json",
) -> dict:
    """Provenance record of one run; no timestamp, so equal runs give equal bytes."""
    manifest = {
        "producer": f"ultrawave {__version__}",
        "subcommand": subcommand,
        "mode": mode,
        "tree": {
            "source": tree_source,
            "leaves": tree.n_leaves if tree is not None else None,
            "internal_vertices": len(tree.internal_vertices) if tree is not None else None,
            "root": format_address(tree, tree.root) if tree is not None else None,
            "top_measure": format_rational(tree.top_measure) if tree is not None else None,
        },
        "kernel": kernel,
        "seed": seed,
        "tolerances": tolerances,
        "output": {"file": output_file, "rows": row_count, "sha256": output_sha256},
    }
    text = json.dumps(manifest, indent=2, ensure_ascii=False) + "\n"
    Path(out).write_text(text, encoding="utf-8")
    return manifest
