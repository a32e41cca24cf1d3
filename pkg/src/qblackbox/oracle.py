"""Black-box inputs as explicit truth tables, and the gates that query them.

Truth-table index convention: ``x = (x_1, ..., x_n)`` lives at index
``sum(x_i * 2**(n - i))`` (``x_1`` most significant), matching the qubit
order of :mod:`qblackbox.statevector`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .statevector import (
    GateError,
    StateVector,
    apply_gate,
    flip_where,
    gate_h,
    gate_x,
)


class ArityError(ValueError):
    """Oracle arity does not match the wires or the other operand."""


@dataclass(frozen=True, eq=False)
class OracleTable:
    n: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        if self.n < 0:
            raise ValueError(f"arity must be non-negative, got {self.n}")
        if bits.size != 1 << self.n:
            raise ValueError(f"truth table for n={self.n} needs {1 << self.n} entries, got {bits.size}")
        if np.any(bits > 1):
            raise ValueError("truth-table entries must be 0 or 1")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    # -- construction ------------------------------------------------------
    @classmethod
    def from_string(cls, bits: str) -> "OracleTable":
        if any(c not in "01" for c in bits):
            raise ValueError(f"bit string may only contain 0/1, got {bits!r}")
        size = len(bits)
        if size == 0 or size & (size - 1):
            raise ValueError(f"bit string length must be a power of two, got {size}")
        return cls(size.bit_length() - 1, np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_function(cls, n: int, fn) -> "OracleTable":
        return cls(n, [int(bool(fn(x))) for x in range(1 << n)])

    @classmethod
    def constant(cls, n: int, value: int = 0) -> "OracleTable":
        return cls(n, np.full(1 << n, value, dtype=np.uint8))

    @classmethod
    def single_one(cls, n: int, x: int) -> "OracleTable":
        bits = np.zeros(1 << n, dtype=np.uint8)
        bits[x] = 1
        return cls(n, bits)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator | int | None = None, p: float = 0.5) -> "OracleTable":
        rng = np.random.default_rng(rng)
        return cls(n, (rng.random(1 << n) < p).astype(np.uint8))

    @classmethod
    def random_balanced(cls, n: int, rng: np.random.Generator | int | None = None) -> "OracleTable":
        rng = np.random.default_rng(rng)
        bits = np.zeros(1 << n, dtype=np.uint8)
        bits[rng.permutation(1 << n)[: 1 << (n - 1)]] = 1
        return cls(n, bits)

    # -- accessors ---------------------------------------------------------
    def __call__(self, x: int) -> int:
        return int(self.bits[x])

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other) -> bool:
        return isinstance(other, OracleTable) and self.n == other.n and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.n, self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"OracleTable(n={self.n}, bits={self.to_string()!r})"

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def weight(self) -> int:
        return int(self.bits.sum())

    def negate(self) -> "OracleTable":
        return OracleTable(self.n, 1 - self.bits)

    def restrict(self, prefix: int, prefix_bits: int) -> "OracleTable":
        """``y -> f(prefix, y)`` with the first ``prefix_bits`` inputs fixed."""
        m = self.n - prefix_bits
        return OracleTable(m, self.bits[prefix << m:(prefix + 1) << m])

    # -- JSON file format --------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({"n": self.n, "bits": self.to_string()})

    @classmethod
    def from_json(cls, text: str) -> "OracleTable":
        data = json.loads(text)
        if set(data) != {"n", "bits"}:
            raise ValueError(f"oracle JSON needs exactly keys n, bits; got {sorted(data)}")
        table = cls.from_string(data["bits"])
        if table.n != data["n"]:
            raise ValueError(f"declared n={data['n']} but bits encode n={table.n}")
        return table

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "OracleTable":
        return cls.from_json(Path(path).read_text())


class QueryCounter:
    """Number of oracle invocations charged to a run (1 per gate call)."""

    __slots__ = ("count",)

    def __init__(self, count: int = 0):
        self.count = count

    def add(self, calls: int = 1) -> None:
        if calls < 0:
            raise ValueError("query count cannot decrease")
        self.count += calls

    def snapshot(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return f"QueryCounter({self.count})"


@dataclass(frozen=True)
class CombinerSpec:
    """``L : {0,1} x {0,1} -> {0,1}`` as the table ``(L(0,0), L(0,1), L(1,0), L(1,1))``."""

    table: tuple[int, int, int, int]
    name: str = ""

    def __post_init__(self):
        table = tuple(int(v) for v in self.table)
        if len(table) != 4 or any(v not in (0, 1) for v in table):
            raise ValueError(f"combiner table needs exactly 4 bits, got {self.table!r}")
        object.__setattr__(self, "table", table)

    def __call__(self, a: int, b: int) -> int:
        return self.table[2 * a + b]

    @classmethod
    def named(cls, name: str) -> "CombinerSpec":
        try:
            return COMBINERS[name.upper()]
        except KeyError:
            raise ValueError(f"unknown combiner {name!r}; known: {sorted(COMBINERS)}") from None


AND = CombinerSpec((0, 0, 0, 1), "AND")
OR = CombinerSpec((0, 1, 1, 1), "OR")
XOR = CombinerSpec((0, 1, 1, 0), "XOR")
COMBINERS = {c.name: c for c in (AND, OR, XOR)}


def pointwise_combine(L: CombinerSpec, g: OracleTable, h: OracleTable) -> OracleTable:
    """``L(g, h)(x) = L(g(x), h(x))`` for every ``x``."""
    if g.n != h.n:
        raise ArityError(f"cannot combine arity {g.n} with arity {h.n}")
    lut = np.array(L.table, dtype=np.uint8)
    return OracleTable(g.n, lut[2 * g.bits + h.bits])


# ---------------------------------------------------------------------------
# gates

def _check_wires(state: StateVector, f: OracleTable, inputs: Sequence[int], output: int) -> None:
    if len(inputs) != f.n:
        raise ArityError(f"oracle of arity {f.n} wired to {len(inputs)} input qubits")
    wires = list(inputs) + [output]
    if len(set(wires)) != len(wires):
        raise GateError(f"oracle wires collide: {wires}")
    for q in wires:
        if not 0 <= q < state.num_qubits:
            raise GateError(f"qubit index {q} out of range")


def apply_f_gate(
    state: StateVector,
    f: OracleTable,
    inputs: Sequence[int],
    output: int,
    counter: QueryCounter | None = None,
) -> StateVector:
    """``|x>|y> -> |x>|f(x) xor y>`` on the given wires; one query."""
    _check_wires(state, f, inputs, output)
    if counter is not None:
        counter.add(1)
    return state._with(flip_where(state.tensor(), list(inputs), output, f.bits))


def apply_phase_oracle(
    state: StateVector,
    f: OracleTable,
    inputs: Sequence[int],
    ancilla: int,
    counter: QueryCounter | None = None,
) -> StateVector:
    """``|x> -> (-1)^f(x) |x>`` by phase kickback; one query.

    ``ancilla`` must hold ``|0>``; it is turned into ``(|0>-|1>)/sqrt2`` for
    the f-gate call and returned to ``|0>`` afterwards.
    """
    _check_wires(state, f, inputs, ancilla)
    state = apply_gate(apply_gate(state, gate_x(ancilla)), gate_h(ancilla))
    state = apply_f_gate(state, f, inputs, ancilla, counter)
    return apply_gate(apply_gate(state, gate_h(ancilla)), gate_x(ancilla))


def f_gate_hook(f: OracleTable, counter: QueryCounter | None = None):
    """Bind ``oracle``-kind gates of a circuit to the f-gate of ``f``."""

    def hook(state: StateVector, inputs: Sequence[int], output: int) -> StateVector:
        return apply_f_gate(state, f, inputs, output, counter)

    return hook


# ---------------------------------------------------------------------------
# classical predicates (full enumeration)

PREDICATES = ("OR", "AND", "PARITY", "MAJORITY", "BAL", "SIGMA", "PI")
OUTSIDE_PROMISE = None


def sigma_value(f: OracleTable, widths: Sequence[int]) -> int:
    """Alternating ``OR, AND, OR, ...`` over consecutive blocks of ``widths`` bits."""
    widths = [int(w) for w in widths]
    if any(w < 0 for w in widths) or sum(widths) != f.n:
        raise ValueError(f"quantifier widths {widths} must be non-negative and sum to n={f.n}")
    values = f.bits.astype(bool)
    # fold from the innermost quantifier outwards
    for level in range(len(widths) - 1, -1, -1):
        block = values.reshape(-1, 1 << widths[level])
        values = block.any(axis=1) if level % 2 == 0 else block.all(axis=1)
    return int(values[0])


def classical_predicate(name: str, f: OracleTable, widths: Sequence[int] | None = None):
    """Exact value of a predicate of ``f`` by enumeration.

    ``BAL`` returns 0 (constant zero), 1 (balanced) or ``None`` when ``f``
    is outside the promise.  ``SIGMA``/``PI`` need ``widths`` summing to ``n``;
    ``PI`` is the negation of ``SIGMA`` on the same table.  By De Morgan that
    is the ``AND, OR, ...`` alternation applied to the negated table.
    """
    key = name.upper()
    if key.startswith("SIGMA_") or key.startswith("PI_"):
        key, _, depth = key.partition("_")
        if widths is not None and len(widths) != int(depth):
            raise ValueError(f"{name} needs {depth} widths, got {len(widths)}")
    weight = f.weight()
    size = len(f)
    if key == "OR":
        return int(weight > 0)
    if key == "AND":
        return int(weight == size)
    if key == "PARITY":
        return weight & 1
    if key == "MAJORITY":
        return int(weight > size // 2)
    if key == "BAL":
        if weight == 0:
            return 0
        if 2 * weight == size:
            return 1
        return OUTSIDE_PROMISE
    if key in ("SIGMA", "PI"):
        if widths is None:
            raise ValueError(f"{name} needs quantifier widths")
        value = sigma_value(f, widths)
        return value if key == "SIGMA" else 1 - value
    raise ValueError(f"unknown predicate {name!r}; known: {PREDICATES}")
