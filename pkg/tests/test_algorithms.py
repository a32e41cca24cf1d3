import math

import numpy as np
import pytest

from conftest import all_tables, balanced_tables
from qblackbox.algorithms import (
    RunSchedule,
    deutsch_jozsa,
    grover_amplitude_law,
    grover_iterate,
    ladder_cap,
    marked_probability,
    or_decider,
)
from qblackbox.oracle import OracleTable, QueryCounter
from qblackbox.statevector import apply_circuit, euclidean_distance, hadamard_layer, new_state


def uniform(m):
    return apply_circuit(new_state(m + 1), hadamard_layer(range(m)))


# -- Deutsch-Jozsa -------------------------------------------------------------

def test_dj_constant_zero():
    res = deutsch_jozsa(OracleTable.constant(3, 0))
    assert (res.answer, res.queries) == (0, 1)
    assert res.success_probability == pytest.approx(1.0, abs=1e-9)


def test_dj_first_bit_parity():
    res = deutsch_jozsa(OracleTable.from_function(3, lambda x: x >> 2))
    assert (res.answer, res.queries) == (1, 1)
    assert res.success_probability == pytest.approx(1.0, abs=1e-9)


def test_dj_0101():
    res = deutsch_jozsa(OracleTable.from_string("0101"))
    assert res.answer == 1
    assert res.success_probability == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_dj_exhaustive(n):
    for f in [OracleTable.constant(n)] + list(balanced_tables(n)):
        res = deutsch_jozsa(f)
        assert res.queries == 1
        assert res.success_probability == pytest.approx(1.0, abs=1e-9)


def test_dj_sampled_n4():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        res = deutsch_jozsa(OracleTable.random_balanced(4, rng))
        assert res.queries == 1 and res.success_probability > 1 - 1e-9


def test_dj_outside_promise_has_no_truth():
    assert deutsch_jozsa(OracleTable.from_string("0111")).success_probability is None


# -- Grover --------------------------------------------------------------------

def test_grover_zero_iterations_unchanged():
    f = OracleTable.single_one(2, 1)
    s = uniform(2)
    assert euclidean_distance(grover_iterate(s, f, 0), s) == 0


def test_grover_single_marked_m2():
    f = OracleTable.single_one(2, 3)
    counter = QueryCounter()
    s = grover_iterate(uniform(2), f, 1, counter)
    assert marked_probability(s, f) == pytest.approx(1.0, abs=1e-9)
    assert counter.count == 1


def test_grover_two_marked_m3():
    f = OracleTable.from_string("01000100")
    s = grover_iterate(uniform(3), f, 1)
    assert marked_probability(s, f) == pytest.approx(math.sin(3 * math.asin(0.5)) ** 2, abs=1e-9)
    assert marked_probability(s, f) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_grover_amplitude_law(m):
    rng = np.random.default_rng(m)
    for t in range(1, (1 << m) + 1):
        bits = np.zeros(1 << m, dtype=np.uint8)
        bits[rng.permutation(1 << m)[:t]] = 1
        f = OracleTable(m, bits)
        s = uniform(m)
        for j in range(11):
            assert marked_probability(s, f) == pytest.approx(grover_amplitude_law(t, m, j), abs=1e-9)
            s = grover_iterate(s, f, 1)


# -- schedules -----------------------------------------------------------------

@pytest.mark.parametrize("m,runs", [(0, (1,)), (1, (1, 2)), (2, (1, 2)), (4, (1, 2, 3)), (6, (1, 2, 3, 5, 8))])
def test_ladder(m, runs):
    assert RunSchedule.ladder(m).runs == runs
    assert all(j <= ladder_cap(m) + 1 for j in runs)


def test_schedule_validation():
    with pytest.raises(ValueError):
        RunSchedule((), 2)
    with pytest.raises(ValueError):
        RunSchedule((9,), 2)
    with pytest.raises(ValueError):
        RunSchedule.ladder(2).repeated(0)


# -- OR decider ----------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 5])
def test_or_decider_never_errs_on_zero(k):
    res = or_decider(OracleTable.constant(3, 0), k=k)
    assert res.answer == 0
    assert res.success_probability == 1.0


def test_or_decider_single_one():
    res = or_decider(OracleTable.single_one(2, 2), k=3)
    assert res.answer == 1
    assert res.success_probability >= 1 - 2 ** -3


def test_or_decider_all_ones_k1():
    res = or_decider(OracleTable.constant(3, 1), k=1)
    assert res.answer == 1
    assert res.success_probability >= 0.5
    assert res.details["per_run_success"]


def test_or_decider_search_for_zeros():
    f = OracleTable.from_string("11101111")
    assert or_decider(f, k=3, marked=0).success_probability >= 1 - 2 ** -3
    assert or_decider(OracleTable.constant(3, 1), k=3, marked=0).p_one == 0.0


@pytest.mark.parametrize("m", [1, 2, 3])
def test_failure_monotone_in_k_and_bounded(m):
    rng = np.random.default_rng(m)
    fs = [f for f in all_tables(m) if f.weight()] if m <= 2 else [OracleTable.random(m, rng) for _ in range(30)]
    for f in fs:
        if not f.weight():
            continue
        prev = 1.0
        for k in range(1, 6):
            fail = 1 - or_decider(f, k=k).success_probability
            assert fail <= prev + 1e-12
            assert fail <= 2 ** -k + 1e-9
            prev = fail


def test_queries_and_measured_constant():
    res = or_decider(OracleTable.single_one(4, 5), k=2)
    assert res.queries == 2 * RunSchedule.ladder(4).queries_per_repetition()
    assert res.details["c_measured"] == pytest.approx(res.queries / (2 * 4))


def test_query_scaling_exponent():
    ms = np.arange(2, 7)
    qs = [or_decider(OracleTable.single_one(m, 0), k=3).queries for m in ms]
    slope = np.polyfit(np.log(2.0 ** ms), np.log(qs), 1)[0]
    assert 0.4 <= slope <= 0.6
