import math

import numpy as np
import pytest

from conftest import all_tables
from qblackbox.algorithms import or_decider
from qblackbox.nested import (
    ApproxParams,
    approx_g_gate,
    build_unitary_decider,
    choose_k,
    double_exp_params,
    nested_circuit,
    pi_d_eval,
    sigma2_eval,
    sigma_d_eval,
    verify_gate_distance,
)
from qblackbox.oracle import OracleTable, classical_predicate, f_gate_hook
from qblackbox.statevector import ResourceError, StateVector, apply_circuit, new_state, probability_of


# -- parameters ----------------------------------------------------------------

@pytest.mark.parametrize("n,m,eps,k", [(4, 0, 0.5, 12), (3, 3, 0.5, 4), (1, 0, 1 / 8, 10), (5, 1, 0.5, 12)])
def test_choose_k_examples(n, m, eps, k):
    assert choose_k(n, m, eps) == k


@pytest.mark.parametrize("eps", [0, 1, -0.1, 1.5])
def test_choose_k_rejects_epsilon(eps):
    with pytest.raises(ValueError):
        choose_k(3, 1, eps)


@pytest.mark.parametrize("n,d,delta,k", [(4, 2, 1, 4), (2, 1, 1, 4), (6, 2, 3, 2), (3, 1, 1, 8), (6, 3, 2, 2)])
def test_double_exp_examples(n, d, delta, k):
    params = double_exp_params(n, d, delta)
    assert params.ks == (k,) * d
    assert sum(params.widths) == n
    assert params.target_error == pytest.approx(2.0 ** -(2.0 ** (n / (delta * d) - 1)))


def test_double_exp_cap_message():
    with pytest.raises(ResourceError, match="expensive"):
        double_exp_params(20, 1, 1)


def test_params_validation_and_json(tmp_path):
    p = ApproxParams(4, (2, 2), (3, 20), epsilon=0.1)
    path = tmp_path / "p.json"
    path.write_text(p.to_json())
    assert ApproxParams.load(path) == p
    with pytest.raises(ValueError):
        ApproxParams(4, (2, 1), (3, 3))
    with pytest.raises(ValueError):
        ApproxParams(4, (2, 2), (3,))
    with pytest.raises(ValueError):
        ApproxParams(4, (2, 2), (3, 0))
    with pytest.raises(ValueError):
        ApproxParams(4, (2, 2), (3, 3), epsilon=1.0)


def test_default_params():
    assert ApproxParams.default(6, (2, 2, 2)).ks == (3, 30, 30)


# -- unitary decider -------------------------------------------------------------

def test_decider_m0_is_exact():
    f = OracleTable.from_string("0110")
    d = build_unitary_decider(f, 0, 3)
    assert d.beta_max == 0
    assert d.g_table() == f


def test_decider_all_ones_and():
    d = build_unitary_decider(OracleTable.constant(2, 1), 1, 3, sense="and")
    assert d.beta_max == pytest.approx(0, abs=1e-9)
    assert d.g_table().to_string() == "11"


def test_decider_mixed_m2_k3():
    f = OracleTable.from_string("11111011")
    d = build_unitary_decider(f, 2, 3)
    assert d.g_table().to_string() == "10"
    assert d.beta_max <= 2 ** -1.5


def test_decider_workspace_formula():
    d = build_unitary_decider(OracleTable.random(3, 0), 2, 2)
    assert d.workspace_qubits() == 1 + 1 + len(d.runs) * 3 + 1
    ops, layout = d.circuit()
    assert layout["num_qubits"] == d.workspace_qubits()


@pytest.mark.parametrize("sense", ["and", "or"])
def test_decider_answer_probability_matches_dense(sense):
    f = OracleTable.random(3, 5)
    d = build_unitary_decider(f, 2, 1, sense=sense)
    ops, layout = d.circuit()
    g = d.g_table()
    for x in range(2):
        bits = [0] * layout["num_qubits"]
        bits[layout["controls"][0]] = x
        out = apply_circuit(StateVector.basis(bits), ops, f_gate_hook(f))
        p1 = probability_of(out, layout["answer"], 1)
        wrong = p1 if g(x) == 0 else 1 - p1
        assert wrong == pytest.approx(d.wrong_probability[x], abs=1e-9)


# -- approximate gate ------------------------------------------------------------

def test_exact_gate_has_zero_distance():
    f = OracleTable.from_string("0110")
    gate = approx_g_gate(build_unitary_decider(f, 0, 1))
    rep = verify_gate_distance(gate, f, method="dense")
    assert rep.max_distance == pytest.approx(0, abs=1e-12)


def test_exact_gate_flips_target_and_restores_workspace():
    f = OracleTable.constant(2, 1)
    gate = approx_g_gate(build_unitary_decider(f, 1, 2, sense="and"))
    ops, layout = gate.circuit()
    for x in (0, 1):
        bits = [0] * layout["num_qubits"]
        bits[layout["controls"][0]] = x
        out = apply_circuit(StateVector.basis(bits), ops, f_gate_hook(f))
        expected = list(bits)
        expected[0] = 1
        assert abs(out.amplitudes[int("".join(map(str, expected)), 2)]) == pytest.approx(1, abs=1e-9)


def test_k2_gate_per_basis_bound():
    f = OracleTable.from_string("1011")
    d = build_unitary_decider(f, 1, 2)
    gate = approx_g_gate(d)
    rep = verify_gate_distance(gate, d.g_table(), method="dense")
    assert len(rep.per_basis) == 4
    assert all(v <= math.sqrt(2) * d.beta_max + 1e-9 for v in rep.per_basis.values())


@pytest.mark.parametrize("n,m,k", [(2, 1, 1), (2, 1, 2), (3, 1, 1), (3, 2, 1), (3, 2, 2), (4, 2, 1)])
def test_reduced_and_dense_distances_agree(n, m, k):
    rng = np.random.default_rng(n * 10 + m + k)
    for _ in range(3):
        f = OracleTable.random(n, rng)
        for sense in ("and", "or"):
            d = build_unitary_decider(f, m, k, sense=sense)
            gate = approx_g_gate(d)
            dense = verify_gate_distance(gate, d.g_table(), method="dense", dense_limit=30)
            reduced = verify_gate_distance(gate, d.g_table(), method="reduced")
            for key in dense.per_basis:
                assert dense.per_basis[key] == pytest.approx(reduced.per_basis[key], abs=1e-9)


@pytest.mark.parametrize("span", [1, 2, 3])
def test_distance_law_reduced(span):
    rng = np.random.default_rng(span)
    for m in (1, 2):
        for k in (1, 2, 3):
            f = OracleTable.random(span + m, rng, p=0.8)
            d = build_unitary_decider(f, m, k)
            rep = verify_gate_distance(approx_g_gate(d), d.g_table(), method="reduced")
            assert rep.max_distance <= math.sqrt(2) * d.beta_max + 1e-9


def test_gate_is_norm_preserving():
    f = OracleTable.random(3, 9)
    d = build_unitary_decider(f, 2, 1)
    ops, layout = approx_g_gate(d).circuit()
    for z in (0, 1):
        for x in (0, 1):
            bits = [0] * layout["num_qubits"]
            bits[0] = z
            bits[layout["controls"][0]] = x
            out = apply_circuit(StateVector.basis(bits), ops, f_gate_hook(f))
            assert out.norm() == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("n,m,eps", [(2, 1, 0.5), (3, 2, 0.5), (3, 1, 0.25), (4, 2, 0.5)])
def test_choose_k_superposition_bound(n, m, eps):
    k = choose_k(n, m, eps)
    rng = np.random.default_rng(k)
    for _ in range(4):
        f = OracleTable.random(n, rng, p=0.85)
        d = build_unitary_decider(f, m, k)
        rep = verify_gate_distance(approx_g_gate(d), d.g_table(), method="reduced")
        assert rep.superposition_bound <= eps + 1e-9
        assert rep.max_distance <= eps / math.sqrt(2 ** (n - m)) + 1e-9


# -- nested evaluation -----------------------------------------------------------

def test_sigma2_trivial():
    assert sigma2_eval(OracleTable.constant(3, 1), 1).answer == 1
    assert sigma2_eval(OracleTable.constant(3, 0), 1).answer == 0


def test_sigma2_example():
    res = sigma2_eval(OracleTable.from_string("1101"), 1)
    assert res.answer == 1
    assert res.success_probability >= 2 / 3


@pytest.mark.parametrize("m", [0, 1, 2])
def test_sigma2_exhaustive_n2(m):
    for f in all_tables(2):
        res = sigma2_eval(f, m)
        assert res.truth == classical_predicate("SIGMA_2", f, (2 - m, m))
        assert res.success_probability >= 2 / 3


def test_sigma2_monotone_in_inner_k():
    f = OracleTable.from_string("1110" "0111" "1011" "1101")
    probs = [sigma2_eval(f, 2, inner_k=k).success_probability for k in range(1, 6)]
    assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))


@pytest.mark.parametrize("f", [OracleTable.random(3, s) for s in range(8)])
def test_sigma2_m0_is_or(f):
    res = sigma2_eval(f, 0)
    ref = or_decider(f, k=3)
    assert res.queries <= 1.05 * ref.queries
    assert res.p_one == pytest.approx(ref.p_one, abs=1e-9)


def test_sigma2_m_equals_n_is_and():
    f = OracleTable.from_string("11111101")
    res = sigma2_eval(f, 3)
    d = build_unitary_decider(f, 3, res.details["inner_k"])
    assert d.g_table().to_string() == "0"
    assert res.p_one == pytest.approx(d.wrong_probability[0], abs=1e-12)
    assert res.answer == 0


def test_sigma2_query_scaling_constant():
    ratios = []
    for n in (2, 4, 6):
        res = sigma2_eval(OracleTable.random(n, n), n // 2)
        ratios.append(res.queries / (math.sqrt(2 ** n) * n))
    assert max(ratios) < 500


def test_sigma_d1_matches_or_decider():
    for f in all_tables(2):
        res = sigma_d_eval(f, ApproxParams(2, (2,), (3,)))
        ref = or_decider(f, k=3)
        assert (res.answer, res.queries, res.p_one) == (ref.answer, ref.queries, ref.p_one)


def test_sigma_d2_matches_sigma2():
    for f in all_tables(2):
        a = sigma_d_eval(f, ApproxParams(2, (1, 1), (3, choose_k(2, 1, 1 / 12))))
        b = sigma2_eval(f, 1)
        assert (a.answer, a.queries) == (b.answer, b.queries)
        assert a.p_one == pytest.approx(b.p_one, abs=1e-12)


def test_sigma3_example():
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = OracleTable.random(3, rng)
        if classical_predicate("SIGMA_3", f, (1, 1, 1)):
            break
    res = sigma_d_eval(f, ApproxParams.default(3, (1, 1, 1)))
    assert res.answer == 1
    assert res.success_probability >= 2 / 3


def test_pi_is_negation():
    f = OracleTable.random(3, 17)
    s = sigma_d_eval(f, ApproxParams.default(3, (1, 2)))
    p = pi_d_eval(f, ApproxParams.default(3, (1, 2)))
    assert p.p_one == pytest.approx(1 - s.p_one)
    assert p.truth == 1 - s.truth
    assert p.queries == s.queries


@pytest.mark.parametrize("widths,ks", [((1, 1), (1, 1)), ((1, 0, 1), (1, 1, 1)), ((0, 2), (1, 1)), ((2, 0), (2, 1))])
def test_reduced_engine_matches_dense_nested_circuit(widths, ks):
    n = sum(widths)
    params = ApproxParams(n, widths, ks)
    ops, width, ans = nested_circuit(params)
    for seed in range(3):
        f = OracleTable.random(n, seed)
        dense = probability_of(apply_circuit(new_state(width), ops, f_gate_hook(f)), ans, 1)
        sig = sigma_d_eval(f, params)
        assert sig.p_one == pytest.approx(dense, abs=1e-9)


def test_reduced_engine_matches_dense_three_bits():
    params = ApproxParams(3, (2, 1), (1, 1))
    ops, width, ans = nested_circuit(params)
    f = OracleTable.random(3, 77)
    dense = probability_of(apply_circuit(new_state(width), ops, f_gate_hook(f)), ans, 1)
    assert sigma_d_eval(f, params).p_one == pytest.approx(dense, abs=1e-9)


def test_word_budget_reports_tally():
    f = OracleTable.random(3, 2)
    with pytest.raises(ResourceError, match="level3"):
        sigma_d_eval(f, ApproxParams.default(3, (1, 1, 1)), word_budget=50)
