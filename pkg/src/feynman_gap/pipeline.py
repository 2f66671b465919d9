"""Program -> schedule -> U -> H -> ray matrix, for either sector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .clock import (CyclicSchedule, StepUnitary, TruncatedSchedule, build_step_unitary,
                    cyclic_closure, truncate_two_sided)
from .core import Circuit, Program, QubitState, RayTrace, run_forward
from .errors import BudgetExhaustedError, SectorMismatchError
from .hamiltonian import HamiltonianOp, RayMatrix, build_hamiltonian, restrict_to_ray

__all__ = ["Sector", "classify", "halting_sector", "truncated_sector"]


@dataclass(frozen=True, eq=False)
class Sector:
    trace: RayTrace
    schedule: object
    U: StepUnitary
    H: HamiltonianOp
    ray: RayMatrix

    @property
    def halting(self) -> bool:
        return isinstance(self.schedule, CyclicSchedule)


def classify(program: Program, initial: Optional[QubitState] = None) -> str:
    """``"halting"``, ``"endless"`` (declared by the source) or ``"exhausted"`` (budget ran out).

    This only reports what happened within the budget; it decides nothing
    about programs that have not halted yet.
    """
    if program.endless:
        return "endless"
    trace = run_forward(program, initial)
    return "halting" if trace.halted_at is not None else "exhausted"


def halting_sector(program: Program, initial: Optional[QubitState] = None) -> Sector:
    if program.endless:
        raise SectorMismatchError("program never halts; use the truncated (gap-scan) analysis")
    trace = run_forward(program, initial)
    if trace.halted_at is None:
        raise BudgetExhaustedError(f"no HALT within the budget of {program.budget} steps")
    schedule = cyclic_closure(Circuit(program.num_qubits, trace.gates))
    U = build_step_unitary(schedule)
    H = build_hamiltonian(U)
    return Sector(trace, schedule, U, H, restrict_to_ray(H, trace))


def truncated_sector(program: Program, half_width: int,
                     initial: Optional[QubitState] = None) -> Sector:
    schedule: TruncatedSchedule = truncate_two_sided(program, half_width)
    trace = run_forward(program.with_budget(half_width), initial)
    U = build_step_unitary(schedule)
    H = build_hamiltonian(U)
    return Sector(trace, schedule, U, H, restrict_to_ray(H, trace))
