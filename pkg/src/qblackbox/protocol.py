"""Two-party simulation of oracle circuits for ``F(L(g, h))``.

Alice holds ``g`` and runs the circuit; Bob holds ``h``.  Every call of the
combined gate for ``f = L(g, h)`` becomes one round trip:

1. Alice computes ``g(x)`` into a fresh ancilla (her own gate, free).
2. She sends the ``n`` input qubits, the output qubit and the ancilla to Bob.
3. Bob applies ``|x>|y>|a> -> |x>|L(a, h(x)) xor y>|a>`` and sends all
   ``n + 2`` qubits back.
4. Alice uncomputes the ancilla with another ``g``-gate.

so a circuit with ``t`` oracle calls costs exactly ``t (2n + 4)`` qubits of
communication.  Qubit transfer is ownership reassignment over one global
state vector; a gate touching a qubit its party does not hold raises
:class:`LocalityError`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algorithms import RunSchedule, dj_circuit, dj_decision, or_decider
from .nested import ApproxParams, sigma_d_eval
from .oracle import (
    AND,
    XOR,
    ArityError,
    CombinerSpec,
    OracleTable,
    QueryCounter,
    f_gate_hook,
    pointwise_combine,
)
from .statevector import (
    ATOL,
    GateOp,
    StateVector,
    adjoint,
    apply_circuit,
    apply_gate,
    flip_where,
    gate_h,
    gate_x,
    new_state,
    output_distribution,
    probability_of,
)

ALICE = "alice"
BOB = "bob"
DISJ_K = 3


class ProtocolError(RuntimeError):
    """A protocol run broke its own bookkeeping (e.g. a dirty ancilla)."""


class LocalityError(ProtocolError):
    """A party touched a qubit it does not currently hold."""


@dataclass(frozen=True)
class TranscriptEvent:
    sender: str
    receiver: str
    qubits: int
    step: str = ""
    repeat: int = 1

    def as_dict(self) -> dict:
        out = {"sender": self.sender, "receiver": self.receiver, "qubits": self.qubits, "step": self.step}
        if self.repeat != 1:
            out["repeat"] = self.repeat
        return out


@dataclass
class Transcript:
    events: list[TranscriptEvent] = field(default_factory=list)
    output_party: str = ALICE

    def send(self, sender: str, receiver: str, qubits: int, step: str = "", repeat: int = 1) -> None:
        if qubits < 0 or repeat < 0:
            raise ValueError("message sizes are non-negative")
        self.events.append(TranscriptEvent(sender, receiver, qubits, step, repeat))

    @property
    def total_qubits(self) -> int:
        return sum(e.qubits * e.repeat for e in self.events)

    @property
    def one_way(self) -> bool:
        return all(e.sender == ALICE for e in self.events)

    def to_json(self) -> str:
        return json.dumps({
            "events": [e.as_dict() for e in self.events],
            "total_qubits": self.total_qubits,
            "output_party": self.output_party,
            "one_way": self.one_way,
        })


@dataclass
class PartyLedger:
    g: OracleTable
    h: OracleTable
    L: CombinerSpec
    owner: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.g.n != self.h.n:
            raise ArityError(f"Alice's input has arity {self.g.n}, Bob's {self.h.n}")

    @property
    def n(self) -> int:
        return self.g.n

    def check(self, party: str, qubits: Sequence[int], step: str) -> None:
        for q in qubits:
            held = self.owner.get(q)
            if held != party:
                raise LocalityError(f"{step}: {party} touched qubit {q}, held by {held or 'nobody'}")

    def transfer(self, qubits: Sequence[int], sender: str, receiver: str, transcript: Transcript, step: str) -> None:
        self.check(sender, qubits, step)
        for q in qubits:
            self.owner[q] = receiver
        transcript.send(sender, receiver, len(qubits), step)


def simulate_combined_oracle_call(
    state: StateVector,
    ledger: PartyLedger,
    transcript: Transcript,
    inputs: Sequence[int],
    output: int,
    ancilla: int,
    step: str = "call",
) -> StateVector:
    """One ``L(g, h)``-gate call as an Alice -> Bob -> Alice round trip."""
    n = ledger.n
    if len(inputs) != n:
        raise ArityError(f"combined gate of arity {n} wired to {len(inputs)} inputs")
    wires = list(inputs) + [output, ancilla]
    ledger.check(ALICE, wires, f"{step}/alice-prepare")
    if probability_of(state, ancilla, 1) > ATOL:
        raise ProtocolError(f"{step}: ancilla qubit {ancilla} is not |0>")
    psi = flip_where(state.tensor(), list(inputs), ancilla, ledger.g.bits)
    ledger.transfer(wires, ALICE, BOB, transcript, f"{step}/to-bob")
    ledger.check(BOB, wires, f"{step}/bob")
    # T(x, a) = L(a, h(x)), indexed by (x, a) with a least significant
    lut = np.array(ledger.L.table, dtype=np.uint8)
    table = lut[2 * np.array([0, 1], dtype=np.uint8)[None, :] + ledger.h.bits[:, None]].reshape(-1)
    psi = flip_where(psi, list(inputs) + [ancilla], output, table)
    ledger.transfer(wires, BOB, ALICE, transcript, f"{step}/to-alice")
    ledger.check(ALICE, wires, f"{step}/alice-uncompute")
    psi = flip_where(psi, list(inputs), ancilla, ledger.g.bits)
    state = state._with(psi)
    if probability_of(state, ancilla, 1) > ATOL:
        raise ProtocolError(f"{step}: ancilla not restored to |0>")
    return state


@dataclass
class ProtocolRun:
    state: StateVector
    transcript: Transcript
    t: int
    num_qubits: int

    def distribution(self, qubits: Sequence[int] | None = None) -> dict[str, float]:
        qubits = list(range(self.num_qubits)) if qubits is None else list(qubits)
        return output_distribution(self.state, qubits, drop_below=0.0)


def run_protocol(
    circuit: Sequence[GateOp],
    num_qubits: int,
    L: CombinerSpec,
    g: OracleTable,
    h: OracleTable,
    *,
    bob_qubits: Sequence[int] = (),
    transcript: Transcript | None = None,
    counter: QueryCounter | None = None,
) -> ProtocolRun:
    """Alice executes ``circuit``; every oracle gate becomes a combined call.

    Alice starts holding qubits ``0..num_qubits-1`` (minus ``bob_qubits``)
    plus her ancilla at index ``num_qubits``.
    """
    ledger = PartyLedger(g, h, L)
    for q in range(num_qubits + 1):
        ledger.owner[q] = ALICE
    for q in bob_qubits:
        ledger.owner[q] = BOB
    transcript = Transcript() if transcript is None else transcript
    ancilla = num_qubits
    state = new_state(num_qubits + 1)
    calls = [0]

    def execute(state: StateVector, op: GateOp, inverse: bool, where: str) -> StateVector:
        if op.kind == "adjoint":
            body = op.body if inverse else list(reversed(op.body))
            for i, sub in enumerate(body):
                state = execute(state, sub, not inverse, f"{where}.{i}")
            return state
        if op.kind == "oracle":
            calls[0] += 1
            if counter is not None:
                counter.add(1)
            return simulate_combined_oracle_call(
                state, ledger, transcript, op.targets[:-1], op.targets[-1], ancilla, f"call {calls[0]} at {where}"
            )
        ledger.check(ALICE, op.qubits(), f"gate {where} ({op.kind})")
        return apply_gate(state, adjoint([op]) if inverse else op)

    for i, op in enumerate(circuit):
        state = execute(state, op, False, str(i))
    return ProtocolRun(state, transcript, calls[0], num_qubits)


def direct_distribution(
    circuit: Sequence[GateOp], num_qubits: int, f: OracleTable, qubits: Sequence[int] | None = None
) -> dict[str, float]:
    qubits = list(range(num_qubits)) if qubits is None else list(qubits)
    final = apply_circuit(new_state(num_qubits), circuit, f_gate_hook(f))
    return output_distribution(final, qubits, drop_below=0.0)


# ---------------------------------------------------------------------------
# instantiated protocols

@dataclass
class ProtocolResult:
    problem: str
    n: int
    t: int
    comm_qubits: int
    success_prob: float | None
    one_way: bool
    answer: int
    p_one: float
    transcript: Transcript = field(repr=False)
    details: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {
            "problem": self.problem,
            "n": self.n,
            "t": self.t,
            "comm_qubits": self.comm_qubits,
            "success_prob": self.success_prob,
            "one_way": self.one_way,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_row())


def _protocol_runner(L, g, h, transcript, counter):
    def run(circuit, num_qubits):
        return run_protocol(circuit, num_qubits, L, g, h, transcript=transcript, counter=counter).state

    return run


def disj_protocol(g: OracleTable, h: OracleTable, k: int = DISJ_K, schedule: RunSchedule | None = None) -> ProtocolResult:
    """``DISJ(g, h) = OR_x (g(x) and h(x))`` via the OR decider on ``AND(g, h)``."""
    if g.n != h.n:
        raise ArityError(f"arity mismatch {g.n} vs {h.n}")
    transcript, counter = Transcript(), QueryCounter()
    f = pointwise_combine(AND, g, h)
    res = or_decider(f, k=k, schedule=schedule, runner=_protocol_runner(AND, g, h, transcript, counter), counter=counter)
    return ProtocolResult("disj", g.n, res.queries, transcript.total_qubits, res.success_probability,
                          transcript.one_way, res.answer, res.p_one, transcript, {"k": k})


def eqprime_protocol(g: OracleTable, h: OracleTable, one_way: bool = True) -> ProtocolResult:
    """Exact EQ' decision (1 iff ``g == h``) under the promise ``Delta in {0, 2^(n-1)}``.

    One-way form: Alice prepares ``sum_x |x>|->``, kicks back ``(-1)^g(x)``
    and sends the ``n + 1`` qubits; Bob kicks back ``(-1)^h(x)``, applies
    ``H^n`` and outputs "equal" iff he sees ``0^n``.  The two-way form runs
    Deutsch-Jozsa through :func:`run_protocol` with ``L = XOR``.
    """
    if g.n != h.n:
        raise ArityError(f"arity mismatch {g.n} vs {h.n}")
    n = g.n
    delta = int((g.bits != h.bits).sum())
    truth = int(delta == 0) if delta in (0, (1 << n) // 2 if n else 0) else None
    if not one_way:
        transcript = Transcript()
        circuit, width = dj_circuit(n)
        run = run_protocol(circuit, width, XOR, g, h, transcript=transcript)
        p_one = 1.0 - dj_decision(run.state, n)
        t = run.t
    else:
        transcript = Transcript(output_party=BOB)
        ledger = PartyLedger(g, h, XOR, {q: ALICE for q in range(n + 1)})
        xs, y = list(range(n)), n
        state = new_state(n + 1)
        for q in xs:
            state = apply_gate(state, gate_h(q))
        state = apply_gate(apply_gate(state, gate_x(y)), gate_h(y))
        ledger.check(ALICE, xs + [y], "alice-g-gate")
        state = state._with(flip_where(state.tensor(), xs, y, g.bits))
        ledger.transfer(xs + [y], ALICE, BOB, transcript, "to-bob")
        ledger.check(BOB, xs + [y], "bob-h-gate")
        state = state._with(flip_where(state.tensor(), xs, y, h.bits))
        state = apply_gate(apply_gate(state, gate_h(y)), gate_x(y))
        for q in xs:
            state = apply_gate(state, gate_h(q))
        p_one = output_distribution(state, xs, drop_below=0.0).get("0" * n, 0.0)
        t = 1
    p_one = min(max(p_one, 0.0), 1.0)
    success = None if truth is None else (p_one if truth else 1.0 - p_one)
    return ProtocolResult("eqprime", n, t, transcript.total_qubits, success, transcript.one_way,
                          int(p_one > 0.5), p_one, transcript, {"delta": delta})


def _engine_gate(ledger: PartyLedger, width: int):
    """Reduced-engine hook: route each innermost f-gate through a combined call."""
    scratch = Transcript()

    def gate(arr: np.ndarray, prefix: int, prefix_bits: int, target_axis: int) -> np.ndarray:
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            return arr.copy()
        Y = arr.shape[0]
        psi = np.zeros((1 << prefix_bits, Y, 2, 2, 2), dtype=np.complex128)
        psi[prefix, :, :, :, 0] = arr / norm
        total = prefix_bits + width + 3
        for q in range(total):
            ledger.owner[q] = ALICE
        state = StateVector(psi.reshape(-1))
        inputs = list(range(prefix_bits + width))
        output = prefix_bits + width + (target_axis - 1)
        state = simulate_combined_oracle_call(state, ledger, scratch, inputs, output, total - 1)
        scratch.events.clear()
        return state.tensor().reshape(psi.shape)[prefix, :, :, :, 0] * norm

    return gate


def ac0_protocol(
    widths: Sequence[int],
    L: CombinerSpec,
    g: OracleTable,
    h: OracleTable,
    ks: Sequence[int] | None = None,
    predicate: str = "SIGMA",
) -> ProtocolResult:
    """``SIGMA_d``/``PI_d`` of ``L(g, h)`` through the nested deciders.

    ``d = 1`` runs the OR decider's circuits through :func:`run_protocol`
    (identical to :func:`disj_protocol` for ``L = AND``).  Deeper formulas use
    the reduced engine with each innermost oracle application routed through
    a combined call; the transcript then records ``t`` round trips, ``t``
    being the engine's query count.
    """
    if g.n != h.n:
        raise ArityError(f"arity mismatch {g.n} vs {h.n}")
    n = g.n
    widths = tuple(widths)
    ks = (DISJ_K,) + (5 * n,) * (len(widths) - 1) if ks is None else tuple(ks)
    params = ApproxParams(n, widths, ks)
    f = pointwise_combine(L, g, h)
    key = predicate.upper()
    if params.d == 1 and key == "SIGMA":
        transcript, counter = Transcript(), QueryCounter()
        res = or_decider(f, k=ks[0], runner=_protocol_runner(L, g, h, transcript, counter), counter=counter)
    else:
        inner = [i for i, w in enumerate(widths) if w > 0]
        width = widths[inner[-1]] if inner else 0
        ledger = PartyLedger(g, h, L)
        res = sigma_d_eval(f, params, predicate=key, f_gate=_engine_gate(ledger, width) if inner else None)
        transcript = Transcript()
        transcript.send(ALICE, BOB, n + 2, "calls/to-bob", repeat=res.queries)
        transcript.send(BOB, ALICE, n + 2, "calls/to-alice", repeat=res.queries)
    return ProtocolResult(f"ac0-{key.lower()}{params.d}", n, res.queries, transcript.total_qubits,
                          res.success_probability, transcript.one_way, res.answer, res.p_one, transcript,
                          {"widths": list(widths), "ks": list(ks), "combiner": L.name})
