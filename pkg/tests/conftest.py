import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from nbfeat.digraph import Digraph  # noqa: E402


@st.composite
def digraphs(draw, min_n=0, max_n=8):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Digraph(n, [e for e, k in zip(pairs, keep) if k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def three_cycle():
    return Digraph(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def transitive_triangle():
    return Digraph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return Digraph(3, [(0, 1), (1, 2)])


@pytest.fixture
def star():
    return Digraph(4, [(0, 1), (0, 2), (0, 3)])
