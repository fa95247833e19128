from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path
from typing import Annotated, NoReturn

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from .changevar import export_mean, export_wavelet, pushforward
from .config import (
    DEFAULT_PRECISION,
    DEFAULT_SEED,
    MAX_DENSE_LEAVES,
    RunConfig,
    Tolerances,
)
from .errors import UltrawaveError
from .loader import (
    MEAN_LABEL,
    load_tree,
    parse_kernel_spec,
    read_coefficients,
    read_grid_function,
)
from .operator import apply_dense, apply_spectral, spectrum
from .tree import UltrametricTree, format_address, parse_address
from .validator import FAIL, SKIP, run_selftest
from .wavelet import WaveletIndex, forward, inverse
from .writer import (
    build_manifest,
    coefficients_frame,
    grid_function_frame,
    piecewise_frame,
    rho_map_frame,
    spectrum_frame,
    tree_frame,
    write_csv,
)

app = typer.Typer(add_completion=False, help="Ultrametric wavelets, operators and rho.")
console = Console()
log = logging.getLogger(__name__)

TITLE = "ultrawave"
EXIT_OK, EXIT_INVALID, EXIT_INVARIANT = 0, 1, 2

TreeOpt = Annotated[
    str | None, typer.Option("--tree", help="Tree spec: YAML/JSON file or inline text")
]
OutOpt = Annotated[Path | None, typer.Option("--out", help="Output CSV path")]
InOpt = Annotated[Path | None, typer.Option("--in", help="Input CSV path")]
ManifestOpt = Annotated[
    bool, typer.Option("--manifest", help="Write manifest.json beside the output")
]
PrecisionOpt = Annotated[
    int, typer.Option("--precision", help="Significant digits of decimal columns")
]


@app.callback()
def main(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="DEBUG logging")] = False,
) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _fail(message: str, *, title: str = "ERROR", code: int = EXIT_INVALID) -> NoReturn:
    console.print(Panel(message, title=title, style="red"))
    raise typer.Exit(code=code)


def _tree(source: str | None) -> UltrametricTree:
    if source is None:
        _fail("--tree is required", title=TITLE)
    return load_tree(source)


def _mode(mode: str, allowed: tuple[str, ...]) -> str:
    mode = mode.lower()
    if mode not in allowed:
        _fail(f"--mode must be one of {', '.join(allowed)}, got '{mode}'", title=TITLE)
    return mode


def _require(path: Path | None, flag: str) -> Path:
    if path is None:
        _fail(f"{flag} is required in this mode", title=TITLE)
    return path


def _finish(
    config: RunConfig, tree: UltrametricTree, frame, *, manifest: bool, summary: str
) -> None:
    out = config.output
    sha, rows = write_csv(frame, out)
    log.debug("wrote %d rows to %s (sha256 %s)", rows, out, sha)
    if manifest:
        build_manifest(
            subcommand=config.subcommand,
            tree_source=config.tree,
            tree=tree,
            mode=config.mode,
            kernel=config.kernel,
            seed=config.seed,
            tolerances=dataclasses.asdict(config.tolerances),
            output_file=out.name,
            output_sha256=sha,
            row_count=rows,
            out=out.parent / "manifest.json",
        )
    console.print(Panel(f"{summary}\n{rows} rows -> {out}", title=TITLE, style="green"))


@app.command("tree")
def cmd_tree(
    tree: TreeOpt = None,
    out: OutOpt = None,
    precision: PrecisionOpt = DEFAULT_PRECISION,
    manifest: ManifestOpt = False,
) -> None:
    """Summarize a tree: leaf and vertex counts, measures per vertex."""
    config = RunConfig("tree", tree=tree, output=out, precision=precision)
    try:
        t = _tree(tree)
        frame = tree_frame(t, config.precision)
    except UltrawaveError as e:
        _fail(str(e), title=type(e).__name__)

    internal = len(t.internal_vertices)
    summary = (
        f"{t.n_leaves} leaves, {internal} internal, top_measure {t.top_measure}, "
        f"root {format_address(t, t.root)}"
    )
    table = Table(title="Vertices", show_lines=False)
    for col in ("vertex_address", "depth", "kind", "branching", "measure"):
        table.add_column(col)
    for row in frame.head(32).itertuples(index=False):
        table.add_row(row.vertex_address, str(row.depth), row.kind, str(row.branching), row.measure)
    console.print(table)
    if len(frame) > 32:
        console.print(f"... {len(frame) - 32} more vertices")

    if config.output is None:
        console.print(Panel(summary, title=TITLE, style="green"))
        raise typer.Exit(code=EXIT_OK)
    _finish(config, t, frame, manifest=manifest, summary=summary)


@app.command("transform")
def cmd_transform(
    tree: TreeOpt = None,
    in_path: InOpt = None,
    out: OutOpt = None,
    mode: Annotated[str, typer.Option("--mode", help="fwd or inv")] = "fwd",
    manifest: ManifestOpt = False,
) -> None:
    """Fast wavelet transform: leaf values -> coefficients (fwd) or back (inv)."""
    mode = _mode(mode, ("fwd", "inv"))
    in_path = _require(in_path, "--in")
    out = out or Path("coefficients.csv" if mode == "fwd" else "function.csv")
    try:
        t = _tree(tree)
        if mode == "fwd":
            coeffs = forward(read_grid_function(in_path, t))
            frame = coefficients_frame(coeffs)
            summary = f"forward: {t.n_leaves} leaf values -> {len(coeffs.values)} wavelets + mean"
        else:
            f = inverse(read_coefficients(in_path, t))
            frame = grid_function_frame(f)
            summary = f"inverse: {t.n_leaves} coefficients -> leaf values"
    except UltrawaveError as e:
        _fail(str(e), title=type(e).__name__)
    config = RunConfig("transform", tree=tree, input=in_path, output=out, mode=mode)
    _finish(config, t, frame, manifest=manifest, summary=summary)


@app.command("op")
def cmd_op(
    tree: TreeOpt = None,
    kernel: Annotated[
        str | None,
        typer.Option("--kernel", help="constant:<c>, power:<alpha> or a vertex_address,value CSV"),
    ] = None,
    in_path: InOpt = None,
    out: OutOpt = None,
    mode: Annotated[
        str, typer.Option("--mode", help="dense, spectral, spectrum or compare")
    ] = "spectral",
    tol_dense: Annotated[
        float, typer.Option("--tol-dense", help="Dense vs spectral tolerance")
    ] = Tolerances.dense,
    max_dense_leaves: Annotated[
        int, typer.Option("--max-dense-leaves", help="Size guard of the dense operator")
    ] = MAX_DENSE_LEAVES,
    manifest: ManifestOpt = False,
) -> None:
    """Apply the radial operator T, or dump its eigenvalues."""
    mode = _mode(mode, ("dense", "spectral", "spectrum", "compare"))
    if kernel is None:
        _fail("--kernel is required", title=TITLE)
    config = RunConfig(
        "op",
        tree=tree,
        kernel=kernel,
        input=in_path,
        output=out or Path("spectrum.csv" if mode == "spectrum" else "op.csv"),
        mode=mode,
        tolerances=Tolerances(dense=tol_dense),
        max_dense_leaves=max_dense_leaves,
    )
    try:
        t = _tree(tree)
        k = parse_kernel_spec(kernel, t)
        if mode == "spectrum":
            series = spectrum(t, k)
            integral = None
            if t.n_leaves <= config.max_gram_leaves:
                integral = spectrum(t, k, method="integral")
            else:
                log.warning(
                    "integral eigenvalues skipped above %d leaves", config.max_gram_leaves
                )
            frame = spectrum_frame(t, series, integral)
            summary = f"spectrum: {len(t.internal_vertices)} eigenvalues"
        else:
            f = read_grid_function(_require(in_path, "--in"), t)
            if mode == "dense":
                result = apply_dense(t, k, f, max_leaves=config.max_dense_leaves)
            else:
                result = apply_spectral(t, k, f)
            summary = f"{mode}: T f on {t.n_leaves} leaves"
            if mode == "compare":
                dense = apply_dense(t, k, f, max_leaves=config.max_dense_leaves)
                diff = dense.max_abs_diff(result)
                summary = f"compare: max |dense - spectral| = {diff:.3e} (tol {tol_dense:g})"
                if diff > config.tolerances.dense:
                    _fail(summary, title="INVARIANT", code=EXIT_INVARIANT)
            frame = grid_function_frame(result)
    except UltrawaveError as e:
        _fail(str(e), title=type(e).__name__)
    _finish(config, t, frame, manifest=manifest, summary=summary)


@app.command("rho")
def cmd_rho(
    tree: TreeOpt = None,
    in_path: InOpt = None,
    out: OutOpt = None,
    mode: Annotated[str, typer.Option("--mode", help="map, export or push")] = "map",
    vertex: Annotated[
        str, typer.Option("--vertex", help=f"Wavelet vertex for export, or {MEAN_LABEL}")
    ] = "TOP",
    j: Annotated[int, typer.Option("--j", help="Wavelet index 1..p-1 for export")] = 1,
    precision: PrecisionOpt = DEFAULT_PRECISION,
    manifest: ManifestOpt = False,
) -> None:
    """The change of variable onto [0, top_measure]: leaf map, exported wavelet or
    pushed-forward function."""
    mode = _mode(mode, ("map", "export", "push"))
    config = RunConfig(
        "rho", tree=tree, input=in_path, output=out or Path("rho.csv"), mode=mode,
        precision=precision,
    )
    try:
        t = _tree(tree)
        if mode == "map":
            frame = rho_map_frame(t, config.precision)
            summary = f"map: {t.n_leaves} leaves -> [0, {t.top_measure}]"
        elif mode == "export":
            if vertex == MEAN_LABEL:
                fn = export_mean(t)
            else:
                fn = export_wavelet(t, WaveletIndex(parse_address(t, vertex), j))
            frame = piecewise_frame(fn, config.precision)
            summary = f"export: {vertex}, j={j} -> {len(fn.values)} pieces"
        else:
            fn = pushforward(read_grid_function(_require(in_path, "--in"), t))
            frame = piecewise_frame(fn, config.precision)
            summary = f"push: {t.n_leaves} leaf values -> step function"
    except UltrawaveError as e:
        _fail(str(e), title=type(e).__name__)
    _finish(config, t, frame, manifest=manifest, summary=summary)


@app.command("selftest")
def cmd_selftest(
    seed: Annotated[int, typer.Option("--seed", help="Seed of the random suites")] = DEFAULT_SEED,
    tol: Annotated[float, typer.Option("--tol", help="Exact-path tolerance")] = Tolerances.exact,
    tol_dense: Annotated[
        float, typer.Option("--tol-dense", help="Dense vs spectral tolerance")
    ] = Tolerances.dense,
    perturb_phase: Annotated[
        bool, typer.Option("--perturb-phase", help="Rotate one wavelet phase (must FAIL)")
    ] = False,
    large: Annotated[
        bool, typer.Option("--large", help="N = 2^16 fast-path suites; dense oracles skipped")
    ] = False,
    kernels: Annotated[
        int, typer.Option("--kernels", help="Random kernels for eigenvalue agreement")
    ] = 1000,
    out: Annotated[Path | None, typer.Option("--out", help="Write the report as JSON")] = None,
) -> None:
    """Run every invariant suite; exit 0 iff all pass."""
    config = RunConfig(
        "selftest", output=out, seed=seed, tolerances=Tolerances(exact=tol, dense=tol_dense)
    )
    report = run_selftest(
        seed=config.seed,
        tolerances=config.tolerances,
        perturb_phase=perturb_phase,
        large=large,
        kernels=kernels,
        max_gram_leaves=config.max_gram_leaves,
    )
    if out is not None:
        payload = dataclasses.asdict(report)
        payload["tolerances"] = dataclasses.asdict(config.tolerances)
        out.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")

    table = Table(title=f"selftest ({report.mode}, seed {seed})")
    for col in ("suite", "status", "max error", "trees", "message"):
        table.add_column(col)
    style = {FAIL: "red", SKIP: "yellow"}
    for s in report.suites:
        table.add_row(
            s.name,
            f"[{style.get(s.status, 'green')}]{s.status}[/]",
            f"{s.max_error:.2e}" if s.status != SKIP else "-",
            "; ".join(s.trees[:3]) + (f" (+{len(s.trees) - 3})" if len(s.trees) > 3 else ""),
            s.message,
        )
    console.print(table)

    if report.decision == FAIL:
        failed = [name for name, status in report.controls.items() if status == FAIL]
        _fail(f"FAILED: {', '.join(failed)}", title="SELFTEST", code=EXIT_INVARIANT)
    console.print(Panel("OK: all invariant suites pass", title="SELFTEST", style="green"))
    raise typer.Exit(code=EXIT_OK)


if __name__ == "__main__":
    app()
