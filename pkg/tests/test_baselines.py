import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from qblackbox.baselines import CommMatrix, build_comm_matrix, exact_rank, hamming_distance
from qblackbox.oracle import ArityError, OracleTable
from qblackbox.statevector import ResourceError

K = np.array([[1, 1], [1, 0]])


def test_eq_is_identity():
    assert np.array_equal(build_comm_matrix("EQ", 2).entries, np.eye(16))


def test_disjointness_n1_matrix():
    expected = [[1, 1, 1, 1], [1, 0, 1, 0], [1, 1, 0, 0], [1, 0, 0, 0]]
    assert build_comm_matrix("disjointness", 1).entries.tolist() == expected


@pytest.mark.parametrize("n", [1, 2, 3])
def test_disj_complements_disjointness(n):
    a, b = build_comm_matrix("DISJ", n), build_comm_matrix("disjointness", n)
    assert np.all(a.entries + b.entries == 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_disjointness_is_tensor_power(n):
    expected = np.array([[1]])
    for _ in range(1 << n):
        expected = np.kron(expected, K)
    assert np.array_equal(build_comm_matrix("disjointness", n).entries, expected)


def test_ip_matrix_entry():
    m = build_comm_matrix("IP", 1)
    assert m.entries[0b11, 0b11] == 0 and m.entries[0b10, 0b11] == 1


@pytest.mark.parametrize("pred,n,rank", [("EQ", 1, 4), ("disjointness", 1, 4), ("disjointness", 2, 16), ("DISJ", 1, 3), ("EQ", 2, 16)])
def test_rank_examples(pred, n, rank):
    assert exact_rank(build_comm_matrix(pred, n)) == rank


@pytest.mark.parametrize("pred", ["DISJ", "EQ", "IP", "disjointness"])
@pytest.mark.parametrize("n", [1, 2])
def test_rank_matches_sympy_and_transpose(pred, n):
    m = build_comm_matrix(pred, n)
    r = exact_rank(m)
    assert r == sympy.Matrix(m.entries.tolist()).rank()
    assert r == exact_rank(m.entries.T)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_rank_random_integer_matrices(r, c, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(-3, 4, size=(r, c)) * (rng.random((r, c)) < 0.5)
    assert exact_rank(a) == sympy.Matrix(a.tolist()).rank()


def test_size_cap():
    with pytest.raises(ResourceError):
        build_comm_matrix("EQ", 4)
    with pytest.raises(ValueError):
        build_comm_matrix("XYZ", 1)


def test_bit_matrix_round_trip(tmp_path):
    m = build_comm_matrix("disjointness", 1)
    path = tmp_path / "m.txt"
    m.save(path)
    assert path.read_text().splitlines()[1] == "1010"
    assert np.array_equal(CommMatrix.load(path, 1).entries, m.entries)


def test_hamming():
    g = OracleTable.random(3, 1)
    assert hamming_distance(g, g) == 0
    assert hamming_distance(OracleTable.from_string("0000"), OracleTable.from_string("0011")) == 2
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = OracleTable.random(3, rng), OracleTable.random(3, rng)
        assert hamming_distance(a, b) == hamming_distance(b, a)
    with pytest.raises(ArityError):
        hamming_distance(g, OracleTable.constant(2))
