"""Unitary OR/AND deciders, approximate g-gates and nested quantifier evaluation.

Construction
------------
A level decides ``Q_y g_child(p, y)`` (``Q`` is OR or AND) for a classical
prefix ``p`` held on control wires.  Its unitary stage ``G`` runs the Grover
schedule ``k`` times; every run owns a fresh search register, a phase
ancilla and a record qubit, and ends with one verification query into the
record (deferred measurement of "did this run find a witness").  The answer
qubit is then the OR (or NOR, for AND levels) of the records.  The
approximate g-gate is ``V = G, CNOT(answer -> z), G^dagger``.

Exact reduced simulation
------------------------
Write ``P_r`` for run ``r`` of ``G`` and ``Pi_r`` for "record reads 0".  Since
runs touch disjoint registers, ``V`` restricted to control value ``p`` is::

    V_p = I - (I - X_z) (x) Proj_p,
    Proj_p = Q_p (AND level) or I - Q_p (OR level),   Q_p = (x)_r P_r^dag Pi_r P_r

so the whole workspace only ever holds linear combinations of *words*
``Q_{p1} Q_{p2} ... |0>``.  Inner products of words factor over runs, and
runs with equal length are identical, so a Gram entry is a product of a few
small run-register inner products raised to the repetition count.  This is
exact: no truncation other than dropping amplitudes below ``PRUNE``.
Levels nest: a run register of level ``i`` contains the workspace words of
level ``i + 1``.  :meth:`UnitaryDecider.circuit` builds the literal gate list
for the innermost level so the reduced model can be checked against a
dense simulation where the register fits.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .algorithms import DeciderResult, RunSchedule, _finish, or_decider
from .oracle import OracleTable, classical_predicate, f_gate_hook, sigma_value
from .statevector import (
    GateOp,
    ResourceError,
    StateVector,
    adjoint,
    apply_circuit,
    check_qubit_budget,
    euclidean_distance,
    gate_cnot,
    gate_h,
    gate_mcx,
    gate_oracle,
    gate_x,
    hadamard_layer,
    inversion_about_mean,
)

PRUNE = 1e-15
DEFAULT_EPSILON = 1 / 12
OUTER_K = 3
DEFAULT_K_CAP = 64
DEFAULT_WORD_BUDGET = 200_000


# ---------------------------------------------------------------------------
# parameters

def choose_k(n: int, m: int, epsilon: float) -> int:
    """Smallest integer ``k >= 2(n-m) + 2 log2(2/epsilon)``."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    bound = 2 * (n - m) + 2 * math.log2(2 / epsilon)
    return math.ceil(round(bound, 12))


@dataclass(frozen=True)
class ApproxParams:
    n: int
    widths: tuple[int, ...]
    ks: tuple[int, ...]
    epsilon: float = DEFAULT_EPSILON
    delta: float | None = None
    target_error: float | None = None

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        ks = tuple(int(k) for k in self.ks)
        if not widths:
            raise ValueError("need at least one quantifier level")
        if any(w < 0 for w in widths) or sum(widths) != self.n:
            raise ValueError(f"widths {widths} must be non-negative and sum to n={self.n}")
        if len(ks) != len(widths):
            raise ValueError(f"{len(widths)} widths but {len(ks)} repetition counts")
        if any(k < 1 for k in ks):
            raise ValueError(f"repetition counts must be >= 1, got {ks}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.delta is not None and self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "ks", ks)

    @property
    def d(self) -> int:
        return len(self.widths)

    @classmethod
    def default(cls, n: int, widths: Sequence[int], outer_k: int = OUTER_K) -> "ApproxParams":
        """Outer repetition count fixed, every inner level at ``5n``."""
        widths = tuple(widths)
        return cls(n, widths, (outer_k,) + (5 * n,) * (len(widths) - 1))

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "widths": list(self.widths),
            "ks": list(self.ks),
            "epsilon": self.epsilon,
            "delta": self.delta,
        })

    @classmethod
    def from_json(cls, text: str) -> "ApproxParams":
        data = json.loads(text)
        return cls(
            data["n"],
            tuple(data["widths"]),
            tuple(data["ks"]),
            data.get("epsilon", DEFAULT_EPSILON),
            data.get("delta"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ApproxParams":
        return cls.from_json(Path(path).read_text())


def even_widths(n: int, d: int) -> tuple[int, ...]:
    base, extra = divmod(n, d)
    return tuple(base + (1 if i < extra else 0) for i in range(d))


def double_exp_params(
    n: int,
    d: int,
    delta: float,
    widths: Sequence[int] | None = None,
    k_cap: int = DEFAULT_K_CAP,
) -> ApproxParams:
    """Every level repeated ``ceil(2^(n/(delta d)))`` times.

    The implied error target is ``2^-(2^(n/(delta d) - 1))``; it underflows
    to 0.0 in double precision for exponents beyond ~10.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    exponent = n / (delta * d)
    k = math.ceil(round(2 ** exponent, 12))
    if k > k_cap:
        raise ResourceError(
            f"double-exponential variant wants k = 2^{exponent:g} = {k} repetitions per level, "
            f"over the cap of {k_cap}; this variant is astronomically expensive beyond toy sizes"
        )
    widths = even_widths(n, d) if widths is None else tuple(widths)
    target = 2.0 ** -(2.0 ** (exponent - 1))
    return ApproxParams(n, widths, (k,) * d, epsilon=0.5, delta=delta, target_error=target)


# ---------------------------------------------------------------------------
# reduced engine

FGate = Callable[[np.ndarray, int, int, int], np.ndarray]


def _table_f_gate(bits: np.ndarray, width: int) -> FGate:
    def gate(arr: np.ndarray, prefix: int, prefix_bits: int, target_axis: int) -> np.ndarray:
        lo = prefix << width
        mask = bits[lo:lo + (1 << width)].astype(bool)
        out = arr.copy()
        out[mask] = np.flip(arr[mask], axis=target_axis)
        return out

    return gate


def _walsh(width: int) -> np.ndarray:
    h = np.array([[1.0]])
    for _ in range(width):
        h = np.kron(h, np.array([[1, 1], [1, -1]]) / math.sqrt(2))
    return h


class _Level:
    """One quantifier level of the reduced engine.

    Run-register vectors are dicts ``child_word_index -> ndarray(Y, 2, 2)``
    over axes (search y, phase ancilla z, record).  For the innermost level
    the only child word is 0 (the oracle has no workspace).
    """

    def __init__(
        self,
        offset: int,
        width: int,
        sense: str,
        runs: Sequence[int],
        child: "_Level | None",
        f_gate: FGate | None,
        word_budget: int,
        name: str,
    ):
        if sense not in ("or", "and"):
            raise ValueError(f"sense must be 'or' or 'and', got {sense!r}")
        if width < 1:
            raise ValueError("reduced levels need a search register of >= 1 qubit")
        self.offset = offset
        self.width = width
        self.Y = 1 << width
        self.sense = sense
        self.runs = tuple(runs)
        self.run_counts = sorted(Counter(self.runs).items())
        self.child = child
        self.f_gate = f_gate
        self.word_budget = word_budget
        self.name = name
        self.words: list[tuple[int, ...]] = [()]
        self.index = {(): 0}
        self._push: dict[tuple[int, int], int] = {}
        self._runvec: dict[tuple[int, int], dict[int, np.ndarray]] = {}
        self._gram: dict[tuple[int, int], complex] = {}
        self._walsh = _walsh(width)
        self.simulated_calls = 0

    # -- costs -------------------------------------------------------------
    def gate_cost(self) -> int:
        """f-queries of one call of this level's approximate gate ``V``."""
        return 2 * self.decider_cost()

    def decider_cost(self) -> int:
        """f-queries of one application of ``G``."""
        inner = 1 if self.child is None else self.child.gate_cost()
        return sum(j + 1 for j in self.runs) * inner

    def tally(self) -> list[str]:
        rows = [f"{self.name}: width={self.width} sense={self.sense} runs={len(self.runs)} words={len(self.words)}"]
        return rows + (self.child.tally() if self.child is not None else [])

    # -- words -------------------------------------------------------------
    def push(self, prefix: int, word: int) -> int:
        key = (prefix, word)
        hit = self._push.get(key)
        if hit is not None:
            return hit
        w = self.words[word]
        new = w if w and w[0] == prefix else (prefix,) + w
        idx = self.index.get(new)
        if idx is None:
            if len(self.words) >= self.word_budget:
                raise ResourceError(
                    "workspace word budget exhausted "
                    f"({self.word_budget}); per-level tally: " + "; ".join(self.tally())
                )
            idx = len(self.words)
            self.words.append(new)
            self.index[new] = idx
        self._push[key] = idx
        return idx

    # -- run-register operators ---------------------------------------------
    def _child_call(self, vec: dict, prefix: int, target_axis: int) -> dict:
        """Apply the child gate (exact f-gate or approximate V) on every y branch."""
        self.simulated_calls += 1
        if self.child is None:
            return {w: self.f_gate(a, prefix, self.offset, target_axis) for w, a in vec.items()}
        child = self.child
        # Q v: push each branch's child prefix onto the child word
        qv: dict[int, np.ndarray] = {}
        base = prefix << self.width
        for w, a in vec.items():
            for y in range(self.Y):
                slab = a[y]
                if not slab.any():
                    continue
                nw = child.push(base | y, w)
                acc = qv.get(nw)
                if acc is None:
                    acc = qv[nw] = np.zeros_like(a)
                acc[y] += slab
        out = {w: a.copy() for w, a in vec.items()}
        if child.sense == "and":
            # v - (I - X) Q v
            for w, a in qv.items():
                d = a - np.flip(a, axis=target_axis)
                cur = out.get(w)
                out[w] = -d if cur is None else cur - d
        else:
            # X v + (I - X) Q v
            out = {w: np.flip(a, axis=target_axis).copy() for w, a in vec.items()}
            for w, a in qv.items():
                d = a - np.flip(a, axis=target_axis)
                cur = out.get(w)
                out[w] = d if cur is None else cur + d
        return {w: a for w, a in out.items() if np.abs(a).max() > PRUNE}

    def _hz(self, vec: dict) -> dict:
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        return {w: np.einsum("ij,yjr->yir", h, a) for w, a in vec.items()}

    def _xz(self, vec: dict) -> dict:
        return {w: a[:, ::-1, :].copy() for w, a in vec.items()}

    def _xrec(self, vec: dict) -> dict:
        return {w: a[:, :, ::-1].copy() for w, a in vec.items()}

    def _hy(self, vec: dict) -> dict:
        return {w: np.tensordot(self._walsh, a, axes=([1], [0])) for w, a in vec.items()}

    def _diffuse(self, vec: dict) -> dict:
        return {w: 2 * a.mean(axis=0, keepdims=True) - a for w, a in vec.items()}

    def forward(self, vec: dict, j: int, prefix: int) -> dict:
        vec = self._hy(self._hz(self._xz(vec)))
        for _ in range(j):
            vec = self._diffuse(self._child_call(vec, prefix, 1))
        if self.sense == "and":
            vec = self._xrec(vec)
        return self._child_call(vec, prefix, 2)

    def backward(self, vec: dict, j: int, prefix: int) -> dict:
        vec = self._child_call(vec, prefix, 2)
        if self.sense == "and":
            vec = self._xrec(vec)
        for _ in range(j):
            vec = self._child_call(self._diffuse(vec), prefix, 1)
        return self._xz(self._hz(self._hy(vec)))

    @staticmethod
    def _keep_record_zero(vec: dict) -> dict:
        out = {}
        for w, a in vec.items():
            b = a.copy()
            b[:, :, 1] = 0
            if np.abs(b).max() > PRUNE:
                out[w] = b
        return out

    def _e0(self) -> dict:
        a = np.zeros((self.Y, 2, 2), dtype=np.complex128)
        a[0, 0, 0] = 1.0
        return {0: a}

    def run_vec(self, j: int, word: int) -> dict:
        """``Q_{j,w1} Q_{j,w2} ... |0>`` on one run register of length ``j``."""
        key = (j, word)
        hit = self._runvec.get(key)
        if hit is not None:
            return hit
        w = self.words[word]
        if not w:
            vec = self._e0()
        else:
            inner = self.run_vec(j, self.index[w[1:]])
            vec = self.backward(self._keep_record_zero(self.forward(inner, j, w[0])), j, w[0])
        self._runvec[key] = vec
        return vec

    def found_probability(self, j: int, prefix: int) -> float:
        """Probability that a run of length ``j`` on control ``prefix`` records a witness."""
        out = self.forward(self._e0(), j, prefix)
        hit = {}
        for w, a in out.items():
            b = a.copy()
            b[:, :, 0] = 0
            if np.abs(b).max() > PRUNE:
                hit[w] = b
        return min(max(self.ip(hit, hit).real, 0.0), 1.0)

    # -- inner products -----------------------------------------------------
    def ip(self, u: dict, v: dict) -> complex:
        if not u or not v:
            return 0j
        if self.child is None:
            return complex(sum(np.vdot(u[w], v[w]) for w in u.keys() & v.keys()))
        ku, kv = list(u), list(v)
        g = self.child.gram_block(ku, kv)
        U = np.stack([u[w].reshape(-1) for w in ku])
        V = np.stack([v[w].reshape(-1) for w in kv])
        return complex(np.sum(g * (U.conj() @ V.T)))

    def gram(self, a: int, b: int) -> complex:
        if a == b == 0:
            return 1.0 + 0j
        key = (a, b) if a <= b else (b, a)
        hit = self._gram.get(key)
        if hit is None:
            hit = 1.0 + 0j
            for j, cnt in self.run_counts:
                hit *= self.ip(self.run_vec(j, key[0]), self.run_vec(j, key[1])) ** cnt
            self._gram[key] = hit
        return hit if a <= b else hit.conjugate()

    def _flat(self, j: int, w: int) -> np.ndarray:
        vec = self.run_vec(j, w)
        if not vec:
            return np.zeros(self.Y * 4, dtype=np.complex128)
        return vec[0].reshape(-1)

    def gram_block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        if self.child is None:
            out = np.ones((len(rows), len(cols)), dtype=np.complex128)
            for j, cnt in self.run_counts:
                R = np.stack([self._flat(j, w) for w in rows])
                C = np.stack([self._flat(j, w) for w in cols])
                out *= (R.conj() @ C.T) ** cnt
            return out
        return np.array([[self.gram(a, b) for b in cols] for a in rows], dtype=np.complex128)

    # -- gate-level quantities ---------------------------------------------
    def answer_distribution(self, prefix: int) -> tuple[float, float]:
        """``(P(answer=0), P(answer=1))`` after ``G`` on control ``prefix``.

        Both entries are formed without cancellation so that tiny error
        probabilities keep full relative precision.
        """
        log_miss = 0.0
        for j, cnt in self.run_counts:
            found = self.found_probability(j, prefix)
            log_miss = -math.inf if found >= 1.0 else log_miss + cnt * math.log1p(-found)
        miss, some = math.exp(log_miss), -math.expm1(log_miss)
        return (some, miss) if self.sense == "and" else (miss, some)

    def p_answer_one(self, prefix: int) -> float:
        return self.answer_distribution(prefix)[1]

    def apply_gate_to_basis(self, z: int, prefix: int) -> dict[int, np.ndarray]:
        """``V |z>|prefix>|0...0>`` as ``word -> amplitudes over the target bit``."""
        e = np.zeros(2, dtype=np.complex128)
        e[z] = 1.0
        w = self.push(prefix, 0)
        proj = {w: e.copy()} if self.sense == "and" else {0: e.copy(), w: -e}
        out = {0: e.copy()}
        for word, a in proj.items():
            d = a - a[::-1]
            out[word] = out.get(word, np.zeros(2, dtype=np.complex128)) - d
        return out

    def norm2(self, vec: dict[int, np.ndarray]) -> float:
        keys = list(vec)
        g = self.gram_block(keys, keys)
        A = np.stack([vec[w] for w in keys])
        return float(np.sum(g * (A.conj() @ A.T)).real)


def _level_stack(
    f: OracleTable,
    widths: Sequence[int],
    ks: Sequence[int],
    senses: Sequence[str],
    f_gate: FGate | None = None,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> _Level | None:
    """Build levels innermost-first; zero-width levels are identities and are skipped."""
    child = None
    offsets = np.cumsum([0] + list(widths))
    for i in range(len(widths) - 1, -1, -1):
        if widths[i] == 0:
            continue
        runs = RunSchedule.ladder(widths[i]).repeated(ks[i])
        gate = (f_gate or _table_f_gate(f.bits, widths[i])) if child is None else None
        child = _Level(int(offsets[i]), widths[i], senses[i], runs, child, gate, word_budget, f"level{i + 1}")
    return child


# ---------------------------------------------------------------------------
# unitary decider and approximate gate

@dataclass
class UnitaryDecider:
    """``G`` for ``g(x) = Q_y f(x, y)`` with the first ``n - m`` inputs as controls.

    Register layout of the literal circuit (see :meth:`circuit`): answer,
    control inputs (``n-m``), phase ancilla, then per run ``m`` search qubits
    followed by its record qubit.  ``beta_max`` is the worst-case amplitude of
    the wrong answer over all control settings, computed exactly.
    """

    f: OracleTable
    m: int
    k: int
    sense: str
    schedule: RunSchedule | None
    beta_max: float
    wrong_probability: dict[int, float]
    level: _Level | None = field(repr=False)

    @property
    def control_bits(self) -> int:
        return self.f.n - self.m

    @property
    def runs(self) -> tuple[int, ...]:
        return () if self.schedule is None else self.schedule.repeated(self.k)

    def g_table(self) -> OracleTable:
        blocks = self.f.bits.reshape(1 << self.control_bits, 1 << self.m).astype(bool)
        vals = blocks.all(axis=1) if self.sense == "and" else blocks.any(axis=1)
        return OracleTable(self.control_bits, vals.astype(np.uint8))

    def workspace_qubits(self) -> int:
        """Control inputs + answer + one run register (m + record) per run + phase ancilla."""
        if self.m == 0:
            return self.control_bits + 1
        return self.control_bits + 1 + len(self.runs) * (self.m + 1) + 1

    def queries(self) -> int:
        return 1 if self.level is None else self.level.decider_cost()

    def circuit(self, offset: int = 0) -> tuple[list[GateOp], dict]:
        """Literal gate list of ``G`` with qubits shifted by ``offset``.

        Oracle gates query ``f`` on (controls, search register).
        """
        check_qubit_budget(self.workspace_qubits() + offset, "unitary decider")
        ans = offset
        ctrl = list(range(offset + 1, offset + 1 + self.control_bits))
        if self.m == 0:
            return [gate_oracle(ctrl, ans)], {"answer": ans, "controls": ctrl}
        anc = ctrl[-1] + 1 if ctrl else offset + 1
        nxt = anc + 1
        runs_layout = []
        ops: list[GateOp] = [gate_x(anc), gate_h(anc)]
        for j in self.runs:
            search = list(range(nxt, nxt + self.m))
            rec = nxt + self.m
            nxt = rec + 1
            runs_layout.append((search, rec))
            ops += hadamard_layer(search)
            diffusion = inversion_about_mean(search)
            for _ in range(j):
                ops.append(gate_oracle(ctrl + search, anc))
                ops += diffusion
            if self.sense == "and":
                ops.append(gate_x(rec))
            ops.append(gate_oracle(ctrl + search, rec))
        ops += [gate_h(anc), gate_x(anc)]
        records = [rec for _, rec in runs_layout]
        ops.append(gate_mcx(records, ans, [0] * len(records)))
        if self.sense == "or":
            ops.append(gate_x(ans))
        layout = {"answer": ans, "controls": ctrl, "phase_ancilla": anc, "runs": runs_layout, "num_qubits": nxt}
        return ops, layout


def build_unitary_decider(
    f: OracleTable,
    m: int,
    k: int,
    schedule: RunSchedule | None = None,
    sense: str = "and",
) -> UnitaryDecider:
    """Purely unitary decider for ``g(x) = AND_y f(x, y)`` (or OR with ``sense='or'``)."""
    if not 0 <= m <= f.n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={f.n}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    control = f.n - m
    if m == 0:
        g = f
        return UnitaryDecider(f, 0, k, sense, None, 0.0, {x: 0.0 for x in range(1 << control)}, None)
    schedule = RunSchedule.ladder(m) if schedule is None else schedule
    if schedule.m != m:
        raise ValueError(f"schedule built for m={schedule.m}, decider searches m={m}")
    level = _Level(control, m, sense, schedule.repeated(k), None, _table_f_gate(f.bits, m), DEFAULT_WORD_BUDGET, "inner")
    decider = UnitaryDecider(f, m, k, sense, schedule, 0.0, {}, level)
    g = decider.g_table()
    wrong = {}
    for x in range(1 << control):
        p0, p1 = level.answer_distribution(x)
        wrong[x] = p0 if g(x) else p1
    decider.wrong_probability = wrong
    decider.beta_max = math.sqrt(max(wrong.values()))
    return decider


@dataclass
class ApproxGate:
    """``V = G, CNOT(answer -> z), G^dagger`` acting on ``|z>|x>|workspace>``."""

    decider: UnitaryDecider
    distance_bound: float

    def circuit(self) -> tuple[list[GateOp], dict]:
        """Gate list with qubit 0 = z, qubit 1 = answer, then the decider layout."""
        g_ops, layout = self.decider.circuit(offset=1)
        ops = list(g_ops) + [gate_cnot(layout["answer"], 0)] + [adjoint(g_ops)]
        layout = dict(layout, z=0, num_qubits=layout.get("num_qubits", 2 + self.decider.control_bits))
        return ops, layout

    def reduced_output(self, z: int, x: int) -> dict[int, np.ndarray] | None:
        level = self.decider.level
        return None if level is None else level.apply_gate_to_basis(z, x)


def approx_g_gate(decider: UnitaryDecider) -> ApproxGate:
    return ApproxGate(decider, math.sqrt(2) * decider.beta_max)


@dataclass
class GateDistanceReport:
    max_distance: float
    per_basis: dict[tuple[int, int], float]
    superposition_bound: float
    aggregate_formula: float
    method: str

    def as_dict(self) -> dict:
        return {
            "max_distance": self.max_distance,
            "superposition_bound": self.superposition_bound,
            "aggregate_formula": self.aggregate_formula,
            "method": self.method,
        }


def _dense_gate_outputs(gate: ApproxGate, ideal: OracleTable) -> dict[tuple[int, int], float]:
    ops, layout = gate.circuit()
    num = layout["num_qubits"]
    hook = f_gate_hook(gate.decider.f)
    ctrl = layout["controls"]
    out = {}
    for z in (0, 1):
        for x in range(1 << gate.decider.control_bits):
            bits = [0] * num
            bits[0] = z
            for i, q in enumerate(ctrl):
                bits[q] = (x >> (len(ctrl) - 1 - i)) & 1
            start = StateVector.basis(bits)
            got = apply_circuit(start, ops, hook)
            bits[0] = z ^ ideal(x)
            out[(z, x)] = euclidean_distance(got, StateVector.basis(bits))
    return out


def verify_gate_distance(gate: ApproxGate, ideal: OracleTable, method: str = "auto", dense_limit: int = 18) -> GateDistanceReport:
    """Max over basis inputs ``|z>|x>|0>`` of ``||V b - U_g b||``.

    ``method`` is ``"reduced"`` (exact word model), ``"dense"`` (literal
    circuit on a state vector) or ``"auto"`` (dense when it has at most
    ``dense_limit`` qubits).
    """
    d = gate.decider
    if ideal.n != d.control_bits:
        raise ValueError(f"ideal gate has arity {ideal.n}, decider controls {d.control_bits} bits")
    if method == "auto":
        method = "dense" if d.workspace_qubits() + 1 <= dense_limit else "reduced"
    if d.level is None:
        per = {(z, x): 0.0 for z in (0, 1) for x in range(1 << d.control_bits)}
        if method == "dense":
            per = _dense_gate_outputs(gate, ideal)
    elif method == "dense":
        per = _dense_gate_outputs(gate, ideal)
    elif method == "reduced":
        per = {}
        for z in (0, 1):
            for x in range(1 << d.control_bits):
                out = gate.reduced_output(z, x)
                target = z ^ ideal(x)
                out[0] = out.get(0, np.zeros(2, dtype=np.complex128)).copy()
                out[0][target] -= 1.0
                per[(z, x)] = math.sqrt(max(d.level.norm2(out), 0.0))
    else:
        raise ValueError(f"unknown method {method!r}")
    worst = max(per.values())
    span = d.control_bits
    return GateDistanceReport(
        worst,
        per,
        math.sqrt(2 ** (span + 1)) * worst,
        2 ** (span / 2 + 1 - d.k / 2),
        method,
    )


def nested_circuit(params: ApproxParams) -> tuple[list[GateOp], int, int]:
    """Literal gate list of the top-level ``G`` for the full nested stack.

    Every oracle call below the innermost level is replaced by the child's
    ``V = G, CNOT, G^dagger`` acting on a workspace owned by the calling run.
    Returns ``(ops, num_qubits, answer_qubit)``; only practical for a
    handful of qubits, it exists to cross-check the reduced engine.
    """
    senses = _senses(params.d)
    levels = [i for i, w in enumerate(params.widths) if w > 0]
    next_free = [0]

    def alloc(count: int) -> list[int]:
        start = next_free[0]
        next_free[0] += count
        return list(range(start, start + count))

    def build(pos: int, controls: list[int]) -> tuple[list[GateOp], int]:
        i = levels[pos]
        width = params.widths[i]
        (ans,) = alloc(1)
        (anc,) = alloc(1)
        ops: list[GateOp] = [gate_x(anc), gate_h(anc)]
        records = []
        for j in RunSchedule.ladder(width).repeated(params.ks[i]):
            search = alloc(width)
            (rec,) = alloc(1)
            records.append(rec)
            if pos + 1 < len(levels):
                child_ops, child_ans = build(pos + 1, controls + search)

                def call(target: int, child_ops=child_ops, child_ans=child_ans) -> list[GateOp]:
                    return list(child_ops) + [gate_cnot(child_ans, target), adjoint(child_ops)]
            else:
                def call(target: int, search=search) -> list[GateOp]:
                    return [gate_oracle(controls + search, target)]
            ops += hadamard_layer(search)
            diffusion = inversion_about_mean(search)
            for _ in range(j):
                ops += call(anc)
                ops += diffusion
            if senses[i] == "and":
                ops.append(gate_x(rec))
            ops += call(rec)
        ops += [gate_h(anc), gate_x(anc)]
        ops.append(gate_mcx(records, ans, [0] * len(records)))
        if senses[i] == "or":
            ops.append(gate_x(ans))
        return ops, ans

    if not levels:
        (ans,) = alloc(1)
        return [gate_oracle([], ans)], 1, ans
    ops, ans = build(0, [])
    check_qubit_budget(next_free[0], "nested circuit")
    return ops, next_free[0], ans


# ---------------------------------------------------------------------------
# nested evaluation

def _senses(d: int) -> list[str]:
    return ["or" if i % 2 == 0 else "and" for i in range(d)]


def _evaluate_stack(f: OracleTable, params: ApproxParams, f_gate: FGate | None, word_budget: int) -> tuple[float, int, dict]:
    top = _level_stack(f, params.widths, params.ks, _senses(params.d), f_gate, word_budget)
    if top is None:
        # every quantifier is empty: the answer is f on the empty input
        return float(f.bits[0]), 1, {"levels": []}
    p_one = top.p_answer_one(0)
    tally, lvl = [], top
    while lvl is not None:
        tally.append({"level": lvl.name, "width": lvl.width, "sense": lvl.sense,
                      "runs": len(lvl.runs), "words": len(lvl.words)})
        lvl = lvl.child
    return p_one, top.decider_cost(), {"levels": tally}


def sigma_d_eval(
    f: OracleTable,
    params: ApproxParams,
    *,
    predicate: str = "SIGMA",
    f_gate: FGate | None = None,
    word_budget: int = DEFAULT_WORD_BUDGET,
) -> DeciderResult:
    """Decide ``SIGMA_d(f)`` (or ``PI_d``, its negation) with nested unitary deciders.

    ``d = 1`` is exactly :func:`or_decider` with ``k = ks[0]``.  For deeper
    nesting the innermost level decides through the oracle, every outer level
    through the approximate gate of the level below, and the top level's
    unitary stage is measured once.
    """
    if params.n != f.n:
        raise ValueError(f"params for n={params.n}, oracle has n={f.n}")
    key = predicate.upper()
    if key not in ("SIGMA", "PI"):
        raise ValueError(f"predicate must be SIGMA or PI, got {predicate!r}")
    if params.d == 1 and f_gate is None:
        res = or_decider(f, k=params.ks[0])
        p_one, queries, details = res.p_one, res.queries, dict(res.details)
    else:
        p_one, queries, details = _evaluate_stack(f, params, f_gate, word_budget)
    truth = sigma_value(f, params.widths)
    if key == "PI":
        p_one, truth = 1.0 - p_one, 1 - truth
    details.update(d=params.d, widths=list(params.widths), ks=list(params.ks),
                   c_measured=queries / (math.sqrt(2 ** f.n) * max(f.n, 1) ** max(params.d - 1, 0)))
    return _finish(p_one, truth, queries, **details)


def sigma2_eval(
    f: OracleTable,
    m: int,
    epsilon: float = DEFAULT_EPSILON,
    *,
    outer_k: int = OUTER_K,
    inner_k: int | None = None,
    f_gate: FGate | None = None,
) -> DeciderResult:
    """``OR_x AND_y f(x, y)`` with ``|y| = m``; inner repetitions from :func:`choose_k`."""
    if not 0 <= m <= f.n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={f.n}")
    k = choose_k(f.n, m, epsilon) if inner_k is None else inner_k
    params = ApproxParams(f.n, (f.n - m, m), (outer_k, k), epsilon)
    res = sigma_d_eval(f, params, f_gate=f_gate)
    res.details.update(m=m, epsilon=epsilon, inner_k=k)
    return res


def pi_d_eval(f: OracleTable, params: ApproxParams, **kw) -> DeciderResult:
    return sigma_d_eval(f, params, predicate="PI", **kw)


def brute_sigma(f: OracleTable, widths: Sequence[int]) -> int:
    return classical_predicate("SIGMA", f, widths)
