from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_SEED = 20240101
DEFAULT_PRECISION = 17
MAX_DENSE_LEAVES = 4096
MAX_GRAM_LEAVES = 1024


@dataclass(frozen=True)
class Tolerances:
    exact: float = 1e-12  # exact-path comparisons (orthonormality, round trips)
    dense: float = 1e-10  # dense vs spectral operator application
    negative_eigenvalue: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run depends on; two runs with equal configs write equal bytes."""

    subcommand: str
    tree: str | None = None
    kernel: str | None = None
    input: Path | None = None
    output: Path | None = None
    mode: str | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = DEFAULT_SEED
    precision: int = DEFAULT_PRECISION
    max_dense_leaves: int = MAX_DENSE_LEAVES
    max_gram_leaves: int = MAX_GRAM_LEAVES
