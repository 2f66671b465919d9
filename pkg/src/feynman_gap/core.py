"""Gates, circuits, programs and the computational ray they trace out.

Basis convention: qubit 0 is the least-significant bit of the integer label of
a computational basis state, so ``|q0 q1 ...>`` with ``q0 = 1`` has label 1.
Inside a gate matrix the convention is the textbook one: ``targets[0]`` is the
most-significant bit of the gate's local index, so ``CNOT`` with targets
``(c, t)`` has the usual ``diag(1, 1, X)`` block form with ``c`` as control.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import unitary_group

from .errors import BudgetExhaustedError, InvalidGateError, InvalidStateError

__all__ = [
    "HALT", "DEFAULT_BUDGET", "GATE_KINDS", "Gate", "gate", "Circuit", "Program",
    "QubitState", "RayTrace", "apply_gate", "run_forward",
    "ray_orthonormality_defect", "collect_circuit", "random_circuit",
]

DEFAULT_BUDGET = 1024
UNITARY_TOL = 1e-12
NORM_TOL = 1e-10


class _Halt:
    """Marker returned by a gate generator once the computation has halted."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "HALT"

    def __reduce__(self):
        return (_Halt, ())


HALT = _Halt()

_SQ2 = 1.0 / np.sqrt(2.0)
_LIBRARY = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]]),
    "S": np.array([[1, 0], [0, 1j]]),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CZ": np.diag([1, 1, 1, -1]),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}
_SELF_ADJOINT = {"I", "X", "Y", "Z", "H", "CNOT", "CZ", "SWAP"}
GATE_KINDS = tuple(_LIBRARY) + ("custom",)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary acting on one or two qubits.

    ``dagger`` only matters for library gates that are not self-adjoint
    (``S``, ``T``); custom gates always carry their actual matrix.
    """

    kind: str
    targets: tuple
    matrix: np.ndarray
    dagger: bool = False

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        if not 1 <= len(targets) <= 2:
            raise InvalidGateError(f"gates act on 1 or 2 qubits, got targets {targets}")
        if len(set(targets)) != len(targets) or min(targets) < 0:
            raise InvalidGateError(f"targets must be distinct and non-negative: {targets}")
        matrix = _frozen(self.matrix)
        dim = 2 ** len(targets)
        if matrix.shape != (dim, dim):
            raise InvalidGateError(
                f"{self.kind} on {len(targets)} qubit(s) needs a {dim}x{dim} matrix, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidGateError("gate matrix has non-finite entries")
        defect = np.max(np.abs(matrix.conj().T @ matrix - np.eye(dim)))
        if defect > UNITARY_TOL:
            raise InvalidGateError(f"gate matrix is not unitary (defect {defect:.3e})")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", matrix)

    @property
    def width(self) -> int:
        return len(self.targets)

    def adjoint(self) -> "Gate":
        if self.kind in _SELF_ADJOINT:
            return self
        if self.kind == "custom":
            return Gate("custom", self.targets, self.matrix.conj().T)
        return Gate(self.kind, self.targets, self.matrix.conj().T, dagger=not self.dagger)

    def unitarity_defect(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))

    def descriptor(self) -> dict:
        """JSON-ready description, the inverse of :func:`gate_from_descriptor`."""
        d = {"kind": self.kind, "targets": list(self.targets)}
        if self.kind == "custom":
            d["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]
        elif self.dagger:
            d["dagger"] = True
        return d

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (self.kind == other.kind and self.targets == other.targets
                and self.dagger == other.dagger and np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.kind, self.targets, self.dagger, self.matrix.tobytes()))

    def __repr__(self):
        name = self.kind + ("†" if self.dagger else "")
        return f"Gate({name}, targets={self.targets})"


def gate(kind: str, *targets: int, matrix=None, dagger: bool = False) -> Gate:
    """Build a library gate (``gate("CNOT", 0, 1)``) or a custom one (``matrix=...``)."""
    if kind == "custom":
        if matrix is None:
            raise InvalidGateError("custom gates need a matrix")
        return Gate("custom", targets, matrix)
    if kind not in _LIBRARY:
        raise InvalidGateError(f"unknown gate kind {kind!r}")
    m = _LIBRARY[kind]
    # Arity check happens in Gate.__post_init__ via the shape test.
    if dagger and kind not in _SELF_ADJOINT:
        return Gate(kind, targets, np.conj(m).T, dagger=True)
    return Gate(kind, targets, m)


def gate_from_descriptor(d: dict) -> Gate:
    kind = d.get("kind")
    targets = d.get("targets")
    if targets is None:
        raise InvalidGateError(f"gate descriptor without targets: {d}")
    if kind == "custom":
        try:
            matrix = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidGateError(f"malformed custom matrix: {exc}") from None
        return Gate("custom", targets, matrix)
    return gate(kind, *targets, dagger=bool(d.get("dagger", False)))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple

    def __post_init__(self):
        if self.num_qubits < 1:
            raise InvalidGateError("a circuit needs at least one qubit")
        gates = tuple(self.gates)
        for g in gates:
            _check_gate(g, self.num_qubits)
        object.__setattr__(self, "gates", gates)

    def __len__(self):
        return len(self.gates)

    def as_program(self, budget: int = DEFAULT_BUDGET) -> "Program":
        gates = self.gates

        def next_gate(step: int):
            return gates[step - 1] if step <= len(gates) else HALT

        return Program(self.num_qubits, next_gate, budget)


def _check_gate(g, num_qubits: int) -> Gate:
    if not isinstance(g, Gate):
        raise InvalidGateError(f"expected a Gate, got {g!r}")
    if max(g.targets) >= num_qubits:
        raise InvalidGateError(f"{g!r} targets a qubit outside a {num_qubits}-qubit register")
    return g


@dataclass(frozen=True)
class Program:
    """A deterministic gate stream ``step -> Gate | HALT`` with a step budget.

    Steps are numbered from 1. If ``next_gate(T + 1)`` returns ``HALT`` the
    program halted after executing ``T`` gates. ``endless`` is a promise by
    the source (e.g. a repeat-forever stream) that ``HALT`` never comes; it
    is never inferred.
    """

    num_qubits: int
    next_gate: Callable[[int], Union[Gate, _Halt]]
    budget: int = DEFAULT_BUDGET
    endless: bool = False

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.num_qubits < 1:
            raise InvalidGateError("a program needs at least one qubit")

    def gate_at(self, step: int):
        g = self.next_gate(step)
        if g is HALT:
            return HALT
        return _check_gate(g, self.num_qubits)

    def with_budget(self, budget: int) -> "Program":
        return Program(self.num_qubits, self.next_gate, budget, self.endless)

    @classmethod
    def repeating(cls, num_qubits: int, gates: Sequence[Gate],
                  halt_after: Optional[int] = None, budget: int = DEFAULT_BUDGET) -> "Program":
        """Cycle through ``gates`` forever, or until ``halt_after`` steps."""
        gates = tuple(gates)
        if not gates:
            raise InvalidGateError("a repeating program needs at least one gate")

        def next_gate(step: int):
            if halt_after is not None and step > halt_after:
                return HALT
            return gates[(step - 1) % len(gates)]

        return cls(num_qubits, next_gate, budget, endless=halt_after is None)


@dataclass(frozen=True, eq=False)
class QubitState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size < 2 or amps.size != 2 ** n:
            raise InvalidStateError(f"state length must be a power of two >= 2, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("state has non-finite amplitudes")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "QubitState":
        amps = np.zeros(2 ** num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "QubitState":
        """Validated constructor for user-supplied initial states."""
        state = cls(amplitudes)
        if abs(state.norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"initial state is not normalized (norm {state.norm!r})")
        return state

    def fidelity(self, other: "QubitState") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def apply_matrix(arr: np.ndarray, matrix: np.ndarray, targets, num_qubits: int) -> np.ndarray:
    """Apply a ``w``-qubit matrix to the last axis (length ``2**n``) of ``arr``.

    Leading axes are batch axes, so whole clock/sign blocks go through in one
    call.
    """
    batch = arr.shape[:-1]
    w = len(targets)
    psi = arr.reshape((-1,) + (2,) * num_qubits)
    # reshape puts qubit n-1 on the first tensor axis
    axes = [1 + num_qubits - 1 - t for t in targets]
    op = matrix.reshape((2,) * (2 * w))
    out = np.tensordot(op, psi, axes=(list(range(w, 2 * w)), axes))
    out = np.moveaxis(out, list(range(w)), axes)
    return out.reshape(batch + (2 ** num_qubits,))


def apply_gate(state: QubitState, g: Gate) -> QubitState:
    _check_gate(g, state.num_qubits)
    return QubitState(apply_matrix(state.amplitudes, g.matrix, g.targets, state.num_qubits))


@dataclass(frozen=True)
class RayTrace:
    """Qubit states ``U_l ... U_1 |b0>`` for ``l = 0, 1, ...``.

    The clocked states ``|psi_l>|l>`` are orthogonal by their clock labels, so
    only the stored norms are checked.
    """

    states: tuple
    halted_at: Optional[int] = None
    exhausted: bool = False
    gates: tuple = field(default=(), repr=False)

    def __len__(self):
        return len(self.states)

    @property
    def num_qubits(self) -> int:
        return self.states[0].num_qubits


def run_forward(program: Program, initial: Optional[QubitState] = None) -> RayTrace:
    """Execute ``program`` from ``initial`` (default ``|0...0>``) up to its budget."""
    if initial is None:
        initial = QubitState.basis(program.num_qubits)
    if initial.num_qubits != program.num_qubits:
        raise InvalidStateError(
            f"initial state has {initial.num_qubits} qubits, program has {program.num_qubits}")
    states = [initial]
    gates = []
    halted_at = None
    for step in range(1, program.budget + 1):
        g = program.gate_at(step)
        if g is HALT:
            halted_at = step - 1
            break
        gates.append(g)
        states.append(apply_gate(states[-1], g))
    else:
        # the program may halt exactly at the budget
        if program.gate_at(program.budget + 1) is HALT:
            halted_at = program.budget
    return RayTrace(tuple(states), halted_at, halted_at is None, tuple(gates))


def ray_orthonormality_defect(trace: RayTrace) -> float:
    if not trace.states:
        raise InvalidStateError("empty trace")
    return max(abs(s.norm - 1.0) for s in trace.states)


def collect_circuit(program: Program) -> Circuit:
    """Gather the gates of a program that halts within its budget."""
    trace_gates = []
    for step in range(1, program.budget + 2):
        g = program.gate_at(step)
        if g is HALT:
            return Circuit(program.num_qubits, tuple(trace_gates))
        if step > program.budget:
            break
        trace_gates.append(g)
    raise BudgetExhaustedError(
        f"no HALT within the budget of {program.budget} steps")


def random_circuit(num_qubits: int, depth: int, rng: np.random.Generator,
                   custom_fraction: float = 0.3) -> Circuit:
    """Random mix of library and Haar-random custom gates."""
    one = ["X", "Y", "Z", "H", "S", "T"]
    two = ["CNOT", "CZ", "SWAP"]
    gates = []
    for _ in range(depth):
        width = 2 if num_qubits > 1 and rng.random() < 0.5 else 1
        targets = tuple(int(t) for t in rng.choice(num_qubits, size=width, replace=False))
        if rng.random() < custom_fraction:
            u = unitary_group.rvs(2 ** width, random_state=rng)
            gates.append(Gate("custom", targets, u))
        else:
            kind = str(rng.choice(two if width == 2 else one))
            gates.append(gate(kind, *targets))
    return Circuit(num_qubits, tuple(gates))
