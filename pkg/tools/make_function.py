"""Write a seeded random GridFunction CSV (leaf_address,re,im) for a tree spec."""
import sys

import numpy as np

from ultrawave.config import DEFAULT_SEED
from ultrawave.loader import load_tree
from ultrawave.wavelet import GridFunction
from ultrawave.writer import grid_function_frame, write_csv

spec = sys.argv[1] if len(sys.argv) > 1 else "{homogeneous: {p: 2, depth: 3}}"
out = sys.argv[2] if len(sys.argv) > 2 else "function.csv"
seed = int(sys.argv[3]) if len(sys.argv) > 3 else DEFAULT_SEED

tree = load_tree(spec)
rng = np.random.default_rng(seed)
values = rng.standard_normal(tree.n_leaves) + 1j * rng.standard_normal(tree.n_leaves)
sha, rows = write_csv(grid_function_frame(GridFunction(tree, values)), out)
print(f"{out}: {rows} leaves, seed {seed}, sha256 {sha[:12]}")
