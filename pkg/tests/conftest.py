import itertools

import numpy as np
import pytest

from qblackbox.oracle import OracleTable


def all_tables(n):
    for bits in itertools.product((0, 1), repeat=1 << n):
        yield OracleTable(n, bits)


def balanced_tables(n):
    size = 1 << n
    for ones in itertools.combinations(range(size), size // 2):
        bits = np.zeros(size, dtype=np.uint8)
        bits[list(ones)] = 1
        yield OracleTable(n, bits)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
