import sys

import numpy as np
import pytest

from tcdmap.chain import ChainOperator
from tcdmap.kernels import DiffusionOperator


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_stochastic(rng, n, sparsity=0.0):
    """Dense random row-stochastic matrix with a positive diagonal."""
    w = rng.uniform(0.05, 1.0, size=(n, n))
    if sparsity:
        w *= rng.uniform(size=(n, n)) > sparsity
    w[np.diag_indices(n)] += 0.5
    return w / w.sum(axis=1, keepdims=True)


def random_matrix_chain(rng, n, t):
    return ChainOperator([DiffusionOperator.from_matrix(random_stochastic(rng, n), i)
                          for i in range(1, t + 1)])


@pytest.fixture
def make_chain(rng):
    def make(n, t):
        return random_matrix_chain(rng, n, t)
    return make


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
