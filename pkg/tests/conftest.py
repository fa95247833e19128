from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from ultrawave.tree import BranchingSpec, build_tree


@pytest.fixture
def binary3():
    """p = 2, depth 3: 8 leaves of measure 1/8."""
    return build_tree(BranchingSpec.homogeneous(2, 3))


@pytest.fixture
def mixed23():
    """Two children at the top, three below each: 6 leaves of measure 1/6."""
    return build_tree(BranchingSpec.per_level([2, 3]))


@pytest.fixture
def ragged():
    return build_tree(BranchingSpec.explicit([3, [], [2, [[], [], []]], [[], 2]]))


@pytest.fixture
def rooted():
    """Mixed branching, root below the top vertex and a non-unit top measure."""
    return build_tree(
        BranchingSpec.per_level([3, 2, 2, 3]), root=(1, 0), top_measure=Fraction(3, 2)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
