"""Clocked step unitaries ``U = sum_l U_l (x) |l+1><l|``.

Two schedules are supported. A halting circuit of ``T`` gates is closed into
a cycle of period ``m = 2T``: the gates run forward, then their adjoints run
in reverse order, so the register returns to its initial state. A sign qubit
records which leg is running. A non-halting program is truncated to clock
labels ``-L..L``; negative labels run the computation backwards with
``U_{-l} = U_l^dagger``.

Full-space vectors are laid out as ``clock (x) sign (x) qubits`` with the
clock as the slowest index: ``index = (c * S + s) * 2**n + q`` where ``c`` is
the clock position (label ``l`` for cyclic, ``l + L`` for truncated), ``S``
is 2 for cyclic schedules and 1 for truncated ones.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .core import HALT, Circuit, Gate, Program, QubitState, RayTrace, apply_matrix
from .errors import DimensionCapError, ScheduleError, SectorMismatchError

__all__ = [
    "SignBit", "CyclicSchedule", "TruncatedSchedule", "StepUnitary",
    "cyclic_closure", "truncate_two_sided", "build_step_unitary",
    "ray_basis", "DENSE_CAP", "AMPLITUDE_CAP",
]

DENSE_CAP = 4096
AMPLITUDE_CAP = 2 ** 22


class SignBit(enum.IntEnum):
    PLUS = 0
    MINUS = 1

    def __str__(self):
        return "+" if self is SignBit.PLUS else "-"


@dataclass(frozen=True)
class CyclicSchedule:
    num_qubits: int
    forward: tuple

    @property
    def halting_step(self) -> int:
        return len(self.forward)

    @property
    def period(self) -> int:
        return 2 * len(self.forward)

    @property
    def num_labels(self) -> int:
        return self.period

    @property
    def num_signs(self) -> int:
        return 2

    @property
    def labels(self) -> range:
        return range(self.period)

    def position(self, label: int) -> int:
        return label % self.period

    def step_gate(self, step: int) -> Gate:
        """Gate applied by step ``step`` (clock ``step-1 -> step``), ``1 <= step <= m``."""
        T, m = self.halting_step, self.period
        if not 1 <= step <= m:
            raise IndexError(f"step {step} outside 1..{m}")
        if step <= T:
            return self.forward[step - 1]
        return self.forward[m - step].adjoint()

    @cached_property
    def step_gates(self) -> tuple:
        return tuple(self.step_gate(s) for s in range(1, self.period + 1))

    def sign_of(self, label: int) -> SignBit:
        return SignBit.PLUS if label % self.period <= self.halting_step else SignBit.MINUS

    @cached_property
    def transitions(self) -> tuple:
        """``(src, dst, gate, flips_sign)`` for every clock hop, by position."""
        m = self.period
        out = []
        for c in range(m):
            nxt = (c + 1) % m
            # for m = 2 the flip into the return leg and the wraparound coincide
            out.append((c, nxt, self.step_gates[c], self.sign_of(c) != self.sign_of(nxt)))
        return tuple(out)

    def mirror_defect(self) -> float:
        """max_j ||step_gate[T+j] step_gate[T+1-j] - I||_max."""
        T = self.halting_step
        worst = 0.0
        for j in range(1, T + 1):
            a, b = self.step_gate(T + j), self.step_gate(T + 1 - j)
            if a.targets != b.targets:
                return float("inf")
            prod = a.matrix @ b.matrix
            worst = max(worst, float(np.max(np.abs(prod - np.eye(prod.shape[0])))))
        return worst

    def to_dict(self) -> dict:
        return {
            "type": "cyclic",
            "num_qubits": self.num_qubits,
            "period": self.period,
            "halting_step": self.halting_step,
            "steps": [{"step": s, "from": s - 1, "to": s % self.period,
                       "gate": g.descriptor()} for s, g in enumerate(self.step_gates, 1)],
            "sign": {str(label): str(self.sign_of(label)) for label in self.labels},
        }


@dataclass(frozen=True)
class TruncatedSchedule:
    """Two-sided truncation; ``forward[i]`` is gate ``i+1`` of the program.

    The hop out of label ``l >= 0`` applies gate ``l+1``; the hop out of
    label ``l < 0`` applies ``adjoint(gate -l)``. Label ``+L`` has no hop.
    """

    num_qubits: int
    forward: tuple

    @property
    def half_width(self) -> int:
        return len(self.forward)

    @property
    def num_labels(self) -> int:
        return 2 * self.half_width + 1

    @property
    def num_signs(self) -> int:
        return 1

    @property
    def labels(self) -> range:
        return range(-self.half_width, self.half_width + 1)

    def position(self, label: int) -> int:
        if not -self.half_width <= label <= self.half_width:
            raise IndexError(f"label {label} outside -{self.half_width}..{self.half_width}")
        return label + self.half_width

    def step_gate(self, label: int) -> Gate:
        """Gate on the hop ``label -> label+1``, ``-L <= label < L``."""
        L = self.half_width
        if not -L <= label < L:
            raise IndexError(f"no hop out of label {label}")
        if label >= 0:
            return self.forward[label]
        return self.forward[-label - 1].adjoint()

    @cached_property
    def transitions(self) -> tuple:
        L = self.half_width
        return tuple((l + L, l + L + 1, self.step_gate(l), False) for l in range(-L, L))

    def to_dict(self) -> dict:
        return {
            "type": "truncated",
            "num_qubits": self.num_qubits,
            "half_width": self.half_width,
            "steps": [{"from": l, "to": l + 1, "gate": self.step_gate(l).descriptor()}
                      for l in range(-self.half_width, self.half_width)],
        }


Schedule = Union[CyclicSchedule, TruncatedSchedule]


def cyclic_closure(circuit: Circuit) -> CyclicSchedule:
    if len(circuit.gates) == 0:
        raise ScheduleError("cannot close an empty circuit into a cycle")
    return CyclicSchedule(circuit.num_qubits, tuple(circuit.gates))


def truncate_two_sided(program: Program, half_width: int) -> TruncatedSchedule:
    if half_width < 1:
        raise ScheduleError("half-width must be at least 1")
    gates = []
    for step in range(1, half_width + 1):
        g = program.gate_at(step)
        if g is HALT:
            raise SectorMismatchError(
                f"program halts after {step - 1} steps, inside the truncation "
                f"half-width {half_width}; use cyclic_closure instead")
        gates.append(g)
    return TruncatedSchedule(program.num_qubits, tuple(gates))


@dataclass(frozen=True, eq=False)
class StepUnitary:
    """Matrix-free ``U``; ``apply`` takes vectors ``(dim,)`` or blocks ``(dim, k)``."""

    schedule: Schedule
    cap: int = AMPLITUDE_CAP

    def __post_init__(self):
        if self.dimension > self.cap:
            raise DimensionCapError(
                f"state dimension {self.dimension} exceeds the cap of {self.cap} amplitudes")

    @property
    def num_qubits(self) -> int:
        return self.schedule.num_qubits

    @property
    def block_shape(self) -> tuple:
        s = self.schedule
        return (s.num_labels, s.num_signs, 2 ** s.num_qubits)

    @property
    def dimension(self) -> int:
        c, s, q = self.block_shape
        return c * s * q

    @cached_property
    def _hops(self):
        return tuple((src, dst, g.matrix, g.matrix.conj().T, g.targets, flip)
                     for src, dst, g, flip in self.schedule.transitions)

    def _split(self, v):
        v = np.asarray(v, dtype=np.complex128)
        if v.shape[0] != self.dimension:
            raise ValueError(f"vector of length {v.shape[0]} for operator of dimension {self.dimension}")
        c, s, q = self.block_shape
        return v.reshape(c, s, q, -1).transpose(0, 1, 3, 2), v.ndim == 1

    def _join(self, x, vector: bool):
        out = x.transpose(0, 1, 3, 2).reshape(self.dimension, -1)
        return out[:, 0] if vector else out

    def apply(self, v):
        x, vector = self._split(v)
        out = np.zeros_like(x)
        n = self.num_qubits
        for src, dst, mat, _, targets, flip in self._hops:
            blk = apply_matrix(x[src], mat, targets, n)
            out[dst] += blk[::-1] if flip else blk
        return self._join(out, vector)

    def apply_adjoint(self, v):
        x, vector = self._split(v)
        out = np.zeros_like(x)
        n = self.num_qubits
        for src, dst, _, adj, targets, flip in self._hops:
            blk = x[dst][::-1] if flip else x[dst]
            out[src] += apply_matrix(blk, adj, targets, n)
        return self._join(out, vector)

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.dimension > cap:
            raise DimensionCapError(f"dense materialization of dimension {self.dimension} exceeds {cap}")
        return self.apply(np.eye(self.dimension, dtype=np.complex128))

    def clocked(self, state: QubitState, label: int, sign: SignBit = SignBit.PLUS) -> np.ndarray:
        """Embed ``|psi> (x) |sign> (x) |label>`` into the full space."""
        c, s, q = self.block_shape
        x = np.zeros((c, s, q), dtype=np.complex128)
        x[self.schedule.position(label), int(sign) if s == 2 else 0] = state.amplitudes
        return x.reshape(-1)


def build_step_unitary(schedule: Schedule, cap: int = AMPLITUDE_CAP) -> StepUnitary:
    return StepUnitary(schedule, cap)


def ray_basis(U: StepUnitary, trace: RayTrace):
    """Clocked computational states in clock order, as columns, plus their labels.

    Cyclic: labels ``0..m-1``, label ``T+j`` carries ``states[T-j]`` with the
    minus sign. Truncated: labels ``-L..L``, label ``-l`` carries
    ``states[l]`` because the backward leg repeats the forward computation.
    """
    sched = U.schedule
    if isinstance(sched, CyclicSchedule):
        T, m = sched.halting_step, sched.period
        if len(trace.states) < T + 1:
            raise ScheduleError(f"trace has {len(trace.states)} states, cyclic schedule needs {T + 1}")
        pairs = [(l, trace.states[l if l <= T else m - l], sched.sign_of(l)) for l in range(m)]
    else:
        L = sched.half_width
        if len(trace.states) < L + 1:
            raise ScheduleError(f"trace has {len(trace.states)} states, truncation needs {L + 1}")
        pairs = [(l, trace.states[abs(l)], SignBit.PLUS) for l in sched.labels]
    cols = np.stack([U.clocked(psi, l, sign) for l, psi, sign in pairs], axis=1)
    return cols, np.array([l for l, _, _ in pairs])
