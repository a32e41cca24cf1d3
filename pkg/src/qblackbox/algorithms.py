"""Deutsch-Jozsa and Grover-based deciders, evaluated exactly.

Every algorithm is expressed as a circuit (a list of :class:`GateOp`) and
executed by a *runner*, a callable ``runner(circuit, num_qubits)`` that
returns the final :class:`StateVector`.  The default runner binds oracle
gates to the truth table; the protocol layer swaps in a runner that routes
each oracle gate through a two-party exchange instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .oracle import OracleTable, QueryCounter, apply_phase_oracle, classical_predicate, f_gate_hook
from .statevector import (
    GateOp,
    StateVector,
    apply_circuit,
    apply_gate,
    gate_h,
    gate_oracle,
    gate_x,
    hadamard_layer,
    inversion_about_mean,
    new_state,
    output_distribution,
    probability_of,
)

Runner = Callable[[Sequence[GateOp], int], StateVector]


@dataclass
class DeciderResult:
    """Exact outcome statistics of a decision procedure.

    ``p_one`` is the probability that the measured output bit is 1,
    ``answer`` the more likely output, and ``success_probability`` the
    probability of the output matching the classical value (``None`` when
    the input is outside a promise).
    """

    answer: int
    queries: int
    success_probability: float | None
    p_one: float
    truth: int | None = None
    details: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {
            "answer": self.answer,
            "queries": self.queries,
            "success_prob": self.success_probability,
            "p_one": self.p_one,
            **self.details,
        }


def _finish(p_one: float, truth: int | None, queries: int, **details) -> DeciderResult:
    p_one = min(max(p_one, 0.0), 1.0)
    success = None if truth is None else (p_one if truth == 1 else 1.0 - p_one)
    return DeciderResult(int(p_one > 0.5), queries, success, p_one, truth, details)


def table_runner(f: OracleTable, counter: QueryCounter) -> Runner:
    hook = f_gate_hook(f, counter)

    def run(circuit: Sequence[GateOp], num_qubits: int) -> StateVector:
        return apply_circuit(new_state(num_qubits), circuit, hook)

    return run


# ---------------------------------------------------------------------------
# Deutsch-Jozsa

def dj_circuit(n: int) -> tuple[list[GateOp], int]:
    """H^n, one phase-oracle query, H^n.  Qubits 0..n-1 input, n the ancilla."""
    anc = n
    inputs = list(range(n))
    circuit = (
        hadamard_layer(inputs)
        + [gate_x(anc), gate_h(anc), gate_oracle(inputs, anc), gate_h(anc), gate_x(anc)]
        + hadamard_layer(inputs)
    )
    return circuit, n + 1


def dj_decision(state: StateVector, n: int) -> float:
    """Probability that Deutsch-Jozsa reports "balanced" (non-zero outcome)."""
    dist = output_distribution(state, list(range(n)), drop_below=0.0)
    return 1.0 - dist["0" * n]


def deutsch_jozsa(f: OracleTable, runner: Runner | None = None, counter: QueryCounter | None = None) -> DeciderResult:
    """Decide BAL(f) with one query; exact under the constant-0/balanced promise."""
    counter = QueryCounter() if counter is None else counter
    start = counter.snapshot()
    runner = table_runner(f, counter) if runner is None else runner
    circuit, width = dj_circuit(f.n)
    p_one = dj_decision(runner(circuit, width), f.n)
    return _finish(p_one, classical_predicate("BAL", f), counter.snapshot() - start)


# ---------------------------------------------------------------------------
# Grover / BBHT-style OR decision

FIB_LADDER = (1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233)


def ladder_cap(m: int) -> int:
    return math.ceil(math.sqrt(2 ** m))


@dataclass(frozen=True)
class RunSchedule:
    """Grover run lengths for one repetition of the decider.

    The default rule is deterministic: the Fibonacci ladder 1, 2, 3, 5, 8, ...
    truncated at ``ceil(sqrt(2^m))``.  ``seed`` is recorded for provenance only.
    """

    runs: tuple[int, ...]
    m: int
    rule: str = "fibonacci-ladder"
    seed: int | None = None

    def __post_init__(self):
        runs = tuple(int(j) for j in self.runs)
        if not runs:
            raise ValueError("a schedule needs at least one run")
        limit = ladder_cap(self.m) + 1
        bad = [j for j in runs if j < 0 or j > limit]
        if bad:
            raise ValueError(f"run lengths {bad} outside [0, {limit}] for m={self.m}")
        object.__setattr__(self, "runs", runs)

    @classmethod
    def ladder(cls, m: int, seed: int | None = None) -> "RunSchedule":
        cap = ladder_cap(m)
        return cls(tuple(j for j in FIB_LADDER if j <= cap), m, seed=seed)

    def repeated(self, k: int) -> tuple[int, ...]:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return self.runs * k

    def queries_per_repetition(self) -> int:
        """Grover iterations plus one verification query per run."""
        return sum(j + 1 for j in self.runs)


def grover_iterate(
    state: StateVector,
    f: OracleTable,
    j: int,
    counter: QueryCounter | None = None,
    search: Sequence[int] | None = None,
    ancilla: int | None = None,
) -> StateVector:
    """Apply ``j`` rounds of phase oracle followed by inversion about the mean.

    By default the search register is qubits ``0..n-1`` and the phase
    ancilla (holding ``|0>``) is qubit ``n``.
    """
    search = list(range(f.n)) if search is None else list(search)
    ancilla = f.n if ancilla is None else ancilla
    diffusion = inversion_about_mean(search)
    for _ in range(j):
        state = apply_phase_oracle(state, f, search, ancilla, counter)
        for op in diffusion:
            state = apply_gate(state, op)
    return state


def marked_probability(state: StateVector, f: OracleTable, search: Sequence[int] | None = None, marked: int = 1) -> float:
    search = list(range(f.n)) if search is None else list(search)
    dist = output_distribution(state, search, drop_below=0.0)
    return sum(p for key, p in dist.items() if f(int(key, 2) if key else 0) == marked)


def grover_run_circuit(m: int, j: int, marked: int = 1) -> tuple[list[GateOp], int, int]:
    """One Grover run with a deferred verification query.

    Layout: search ``0..m-1``, phase ancilla ``m``, record ``m+1``.  The
    record ends as 1 exactly on branches whose candidate ``y`` has
    ``f(y) == marked``.  Searching for zeros uses the same iterate: the
    phase oracle for the complement differs only by a global sign.
    Returns ``(circuit, num_qubits, record_qubit)``.
    """
    search = list(range(m))
    anc, rec = m, m + 1
    circuit: list[GateOp] = hadamard_layer(search) + [gate_x(anc), gate_h(anc)]
    diffusion = inversion_about_mean(search)
    for _ in range(j):
        circuit.append(gate_oracle(search, anc))
        circuit.extend(diffusion)
    circuit += [gate_h(anc), gate_x(anc)]
    if marked == 0:
        circuit.append(gate_x(rec))
    circuit.append(gate_oracle(search, rec))
    return circuit, m + 2, rec


def or_decider(
    f: OracleTable,
    k: int = 3,
    schedule: RunSchedule | None = None,
    *,
    marked: int = 1,
    runner: Runner | None = None,
    counter: QueryCounter | None = None,
) -> DeciderResult:
    """One-sided decision of ``exists y: f(y) == marked``.

    Runs the schedule ``k`` times.  Each run's candidate is verified with one
    extra query, so an instance without a marked item is never reported as
    satisfiable.  Runs use fresh registers, hence the overall failure
    probability is the product of the per-run failure probabilities.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    schedule = RunSchedule.ladder(f.n) if schedule is None else schedule
    if schedule.m != f.n:
        raise ValueError(f"schedule built for m={schedule.m}, oracle has n={f.n}")
    counter = QueryCounter() if counter is None else counter
    start = counter.snapshot()
    runner = table_runner(f, counter) if runner is None else runner

    found_by_length: dict[int, float] = {}
    miss = 1.0
    for j in schedule.repeated(k):
        circuit, width, rec = grover_run_circuit(f.n, j, marked)
        p_found = probability_of(runner(circuit, width), rec, 1)
        found_by_length.setdefault(j, p_found)
        miss *= 1.0 - p_found
    queries = counter.snapshot() - start
    truth = int(bool((f.bits == marked).any()))
    return _finish(
        1.0 - miss,
        truth,
        queries,
        k=k,
        runs=list(schedule.runs),
        per_run_success={str(j): p for j, p in sorted(found_by_length.items())},
        c_measured=queries / (k * math.sqrt(2 ** f.n)),
    )


def grover_amplitude_law(t: int, m: int, j: int) -> float:
    """Closed form ``sin^2((2j+1) asin(sqrt(t/2^m)))``."""
    theta = math.asin(math.sqrt(t / 2 ** m))
    return math.sin((2 * j + 1) * theta) ** 2
