"""Dense state-vector register with exact (non-sampling) read-out.

Basis convention: qubit 0 is the most significant bit of the amplitude
index, so the amplitude of ``|b_0 b_1 ... b_{m-1}>`` sits at index
``sum(b_i << (m - 1 - i))``.  Internally the amplitudes are viewed as an
``m``-axis tensor of shape ``(2,) * m`` where axis ``i`` is qubit ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

ATOL = 1e-9
DEFAULT_QUBIT_CAP = 26

_qubit_cap = DEFAULT_QUBIT_CAP


class ResourceError(RuntimeError):
    """A register or workspace would exceed a configured cap."""


class GateError(ValueError):
    """Malformed gate: bad indices, collisions or a non-unitary matrix."""


def get_qubit_cap() -> int:
    return _qubit_cap


def set_qubit_cap(cap: int) -> int:
    """Set the process-wide register cap; returns the previous value."""
    global _qubit_cap
    if cap < 1:
        raise ValueError(f"qubit cap must be positive, got {cap}")
    previous, _qubit_cap = _qubit_cap, int(cap)
    return previous


def check_qubit_budget(num_qubits: int, what: str = "register") -> None:
    if num_qubits > _qubit_cap:
        raise ResourceError(
            f"{what} needs {num_qubits} qubits; cap is {_qubit_cap} "
            f"(2^{_qubit_cap} amplitudes). Raise it with set_qubit_cap/--cap."
        )


class StateVector:
    """Normalised amplitudes of an ``num_qubits`` register.

    Instances are treated as values: gate application returns a new object
    and never mutates its argument.
    """

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes: Iterable[complex], *, normalized_check: bool = True):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        size = amps.size
        if size == 0 or size & (size - 1):
            raise ValueError(f"amplitude count must be a power of two, got {size}")
        num_qubits = size.bit_length() - 1
        if num_qubits < 1:
            raise ValueError("a register needs at least one qubit")
        check_qubit_budget(num_qubits)
        if normalized_check:
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1.0) > ATOL:
                raise ValueError(f"state is not normalised (norm^2 = {norm!r})")
        amps.setflags(write=False)
        self.num_qubits = num_qubits
        self.amplitudes = amps

    # -- constructors -----------------------------------------------------
    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> "StateVector":
        """Computational basis state, e.g. ``StateVector.basis("101")``."""
        bits = [int(b) for b in bits]
        amps = np.zeros(1 << len(bits), dtype=np.complex128)
        amps[int("".join(map(str, bits)), 2)] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, num_qubits: int, rng: np.random.Generator) -> "StateVector":
        amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
        return cls(amps / np.linalg.norm(amps))

    # -- views ------------------------------------------------------------
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __len__(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"

    def _with(self, tensor: np.ndarray) -> "StateVector":
        out = StateVector.__new__(StateVector)
        amps = np.ascontiguousarray(tensor).reshape(-1)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ATOL:
            raise ArithmeticError(f"norm drifted to {norm!r}; invariant breached")
        amps.setflags(write=False)
        out.num_qubits = self.num_qubits
        out.amplitudes = amps
        return out


def new_state(num_qubits: int, cap: int | None = None) -> StateVector:
    """``|0...0>`` on ``num_qubits`` qubits."""
    limit = _qubit_cap if cap is None else cap
    if num_qubits < 1:
        raise ValueError(f"num_qubits must be >= 1, got {num_qubits}")
    if num_qubits > limit:
        raise ResourceError(f"register of {num_qubits} qubits exceeds the cap of {limit}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps)


# ---------------------------------------------------------------------------
# gates

H_MATRIX = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=np.complex128)

GATE_KINDS = ("unitary", "cnot", "mcx", "reflect", "oracle", "adjoint")

OracleHook = Callable[[StateVector, Sequence[int], int], StateVector]


@dataclass(frozen=True)
class GateOp:
    """One circuit element.

    kinds:
      ``unitary``  2x2 ``matrix`` on ``targets[0]``
      ``cnot``     ``controls[0]`` -> ``targets[0]``
      ``mcx``      X on ``targets[0]`` when every control matches ``control_values``
      ``reflect``  ``2|0..0><0..0| - I`` on ``targets`` (inversion about zero)
      ``oracle``   f-gate with inputs ``targets[:-1]`` and output ``targets[-1]``
      ``adjoint``  inverse of the sub-circuit ``body``
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    matrix: np.ndarray | None = field(default=None, compare=False)
    control_values: tuple[int, ...] = ()
    body: tuple["GateOp", ...] = ()
    label: str = ""

    def qubits(self) -> tuple[int, ...]:
        if self.kind == "adjoint":
            seen: list[int] = []
            for op in self.body:
                for q in op.qubits():
                    if q not in seen:
                        seen.append(q)
            return tuple(seen)
        return self.controls + self.targets

    def is_oracle(self) -> bool:
        return self.kind == "oracle" or (
            self.kind == "adjoint" and any(op.is_oracle() for op in self.body)
        )


def gate_unitary(target: int, matrix, label: str = "U") -> GateOp:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (2, 2):
        raise GateError(f"single-qubit matrix must be 2x2, got {m.shape}")
    if not np.allclose(m @ m.conj().T, np.eye(2), atol=ATOL, rtol=0):
        raise GateError(f"matrix for {label!r} is not unitary")
    m = m.copy()
    m.setflags(write=False)
    return GateOp("unitary", (target,), matrix=m, label=label)


def gate_h(target: int) -> GateOp:
    return gate_unitary(target, H_MATRIX, "H")


def gate_x(target: int) -> GateOp:
    return gate_unitary(target, X_MATRIX, "X")


def gate_z(target: int) -> GateOp:
    return gate_unitary(target, Z_MATRIX, "Z")


def gate_cnot(control: int, target: int) -> GateOp:
    return GateOp("cnot", (target,), controls=(control,), label="CNOT")


def gate_mcx(controls: Sequence[int], target: int, values: Sequence[int] | None = None) -> GateOp:
    controls = tuple(controls)
    values = tuple(1 for _ in controls) if values is None else tuple(int(v) for v in values)
    if len(values) != len(controls) or any(v not in (0, 1) for v in values):
        raise GateError("control_values must be bits, one per control")
    return GateOp("mcx", (target,), controls=controls, control_values=values, label="MCX")


def gate_reflect(qubits: Sequence[int]) -> GateOp:
    return GateOp("reflect", tuple(qubits), label="R0")


def gate_oracle(inputs: Sequence[int], output: int, label: str = "f") -> GateOp:
    return GateOp("oracle", tuple(inputs) + (output,), label=label)


def adjoint(circuit: Sequence[GateOp]) -> GateOp:
    return GateOp("adjoint", (), body=tuple(circuit), label="adj")


def hadamard_layer(qubits: Iterable[int]) -> list[GateOp]:
    return [gate_h(q) for q in qubits]


def inversion_about_mean(qubits: Sequence[int]) -> list[GateOp]:
    """``2|s><s| - I`` on ``qubits`` with ``|s>`` the uniform superposition."""
    qubits = list(qubits)
    if not qubits:
        return []
    return hadamard_layer(qubits) + [gate_reflect(qubits)] + hadamard_layer(qubits)


def _validate(op: GateOp, num_qubits: int) -> None:
    if op.kind not in GATE_KINDS:
        raise GateError(f"unknown gate kind {op.kind!r}")
    if op.kind == "adjoint":
        for sub in op.body:
            _validate(sub, num_qubits)
        return
    qs = op.qubits()
    for q in qs:
        if not 0 <= q < num_qubits:
            raise GateError(f"qubit index {q} out of range for {num_qubits}-qubit register")
    if len(set(qs)) != len(qs):
        raise GateError(f"{op.label or op.kind} addresses the same qubit twice: {qs}")
    if op.kind == "unitary":
        m = op.matrix
        if m is None or not np.allclose(m @ m.conj().T, np.eye(2), atol=ATOL, rtol=0):
            raise GateError(f"matrix for {op.label!r} is not unitary")


# -- in-place kernels on the (2,)*m tensor ----------------------------------

def _apply_1q(psi: np.ndarray, matrix: np.ndarray, q: int) -> np.ndarray:
    moved = np.tensordot(matrix, psi, axes=([1], [q]))
    return np.moveaxis(moved, 0, q)


def _index(m: int, fixed: Mapping[int, int]) -> tuple:
    idx = [slice(None)] * m
    for q, v in fixed.items():
        idx[q] = v
    return tuple(idx)


def _apply_mcx(psi: np.ndarray, controls, values, target: int) -> np.ndarray:
    out = psi.copy()
    m = psi.ndim
    base = dict(zip(controls, values))
    i0 = _index(m, {**base, target: 0})
    i1 = _index(m, {**base, target: 1})
    out[i0], out[i1] = psi[i1], psi[i0]
    return out


def _apply_reflect(psi: np.ndarray, qubits) -> np.ndarray:
    out = -psi
    zero = _index(psi.ndim, {q: 0 for q in qubits})
    out[zero] = psi[zero]
    return out


def flip_where(psi: np.ndarray, inputs: Sequence[int], output: int, mask: np.ndarray) -> np.ndarray:
    """Swap the two values of ``output`` on every input pattern where ``mask`` is set.

    ``mask`` is indexed by the integer value of the ``inputs`` qubits (first
    input most significant).  This is the kernel behind every f-gate.
    """
    n = len(inputs)
    order = list(inputs) + [output]
    moved = np.moveaxis(psi, order, list(range(n + 1)))
    shape = moved.shape
    flat = moved.reshape(1 << n, 2, -1).copy()
    sel = np.flatnonzero(mask)
    flat[sel, 0], flat[sel, 1] = flat[sel, 1].copy(), flat[sel, 0].copy()
    return np.moveaxis(flat.reshape(shape), list(range(n + 1)), order)


def _run(state: StateVector, op: GateOp, oracle: OracleHook | None, inverse: bool) -> StateVector:
    if op.kind == "adjoint":
        body = op.body
        if inverse:
            for sub in body:
                state = _run(state, sub, oracle, False)
        else:
            for sub in reversed(body):
                state = _run(state, sub, oracle, True)
        return state
    if op.kind == "oracle":
        if oracle is None:
            raise GateError("oracle gate executed without an oracle binding")
        return oracle(state, op.targets[:-1], op.targets[-1])
    psi = state.tensor()
    if op.kind == "unitary":
        matrix = op.matrix.conj().T if inverse else op.matrix
        psi = _apply_1q(psi, matrix, op.targets[0])
    elif op.kind == "cnot":
        psi = _apply_mcx(psi, op.controls, (1,), op.targets[0])
    elif op.kind == "mcx":
        psi = _apply_mcx(psi, op.controls, op.control_values, op.targets[0])
    elif op.kind == "reflect":
        psi = _apply_reflect(psi, op.targets)
    return state._with(psi)


def apply_gate(state: StateVector, op: GateOp, oracle: OracleHook | None = None) -> StateVector:
    """Apply one gate; ``oracle`` binds ``oracle``-kind gates to an f-gate implementation."""
    _validate(op, state.num_qubits)
    return _run(state, op, oracle, False)


def apply_circuit(state: StateVector, circuit: Iterable[GateOp], oracle: OracleHook | None = None) -> StateVector:
    for op in circuit:
        state = apply_gate(state, op, oracle)
    return state


def apply_adjoint(state: StateVector, circuit: Sequence[GateOp], oracle: OracleHook | None = None) -> StateVector:
    """Apply the inverse of ``circuit``: inverse gates in reverse order.

    Oracle gates are involutions, so they are re-applied as-is.
    """
    for op in circuit:
        _validate(op, state.num_qubits)
    for op in reversed(list(circuit)):
        state = _run(state, op, oracle, True)
    return state


# ---------------------------------------------------------------------------
# read-out

def output_distribution(state: StateVector, qubits: Sequence[int], *, drop_below: float = 1e-15) -> dict[str, float]:
    """Exact marginal distribution of ``qubits`` (in the given order).

    Keys are bit strings; outcomes with probability below ``drop_below``
    are omitted.  Nothing is collapsed.
    """
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise GateError(f"duplicate qubit indices in {qubits}")
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise GateError(f"qubit index {q} out of range")
    probs = np.abs(state.tensor()) ** 2
    rest = [q for q in range(state.num_qubits) if q not in qubits]
    marg = probs.sum(axis=tuple(rest)) if rest else probs
    # sum() keeps the remaining axes in ascending order; reorder to `qubits`
    ascending = sorted(qubits)
    marg = np.transpose(marg, [ascending.index(q) for q in qubits]).reshape(-1)
    k = len(qubits)
    return {
        format(i, f"0{k}b"): float(p)
        for i, p in enumerate(marg)
        if p >= drop_below
    }


def probability_of(state: StateVector, qubit: int, value: int = 1) -> float:
    probs = np.abs(state.tensor()) ** 2
    return float(probs[_index(state.num_qubits, {qubit: value})].sum())


def euclidean_distance(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))


def sample(state: StateVector, qubits: Sequence[int], shots: int, seed: int | None = None) -> dict[str, int]:
    """Seeded measurement sampling; demos only, tests use ``output_distribution``."""
    dist = output_distribution(state, qubits, drop_below=0.0)
    keys = list(dist)
    p = np.array([dist[k] for k in keys])
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(keys), size=shots, p=p / p.sum())
    counts = np.bincount(draws, minlength=len(keys))
    return {k: int(c) for k, c in zip(keys, counts) if c}
