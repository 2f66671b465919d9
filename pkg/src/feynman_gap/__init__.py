"""Feynman clock Hamiltonians ``H = U + U^dagger`` for clocked quantum programs.

Halting programs are closed into a cycle and give a discrete, gapped
spectrum ``2 cos(2 pi k / m)``; non-halting programs are truncated and give
a band whose gap closes as the truncation grows.
"""

from importlib import resources

from .core import (DEFAULT_BUDGET, HALT, Circuit, Gate, Program, QubitState, RayTrace, apply_gate,
                   collect_circuit, gate, random_circuit, ray_orthonormality_defect, run_forward)
from .clock import (CyclicSchedule, SignBit, StepUnitary, TruncatedSchedule, build_step_unitary,
                    cyclic_closure, truncate_two_sided)
from .hamiltonian import (HamiltonianOp, LocalTerm, RayMatrix, UnaryClockLayout, assemble_from_terms,
                          build_hamiltonian, emit_local_terms, restrict_to_ray)
from .spectral import (analytic_halting_spectrum, analytic_nonhalting_value, gap_scan, numeric_spectrum,
                       spectral_gap, verify_plane_waves)
from .dynamics import bounce_metrics, evolve, spread_metrics

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BUDGET", "HALT", "Circuit", "Gate", "Program", "QubitState", "RayTrace", "apply_gate",
    "collect_circuit", "gate", "random_circuit", "ray_orthonormality_defect", "run_forward",
    "CyclicSchedule", "SignBit", "StepUnitary", "TruncatedSchedule", "build_step_unitary",
    "cyclic_closure", "truncate_two_sided",
    "HamiltonianOp", "LocalTerm", "RayMatrix", "UnaryClockLayout", "assemble_from_terms",
    "build_hamiltonian", "emit_local_terms", "restrict_to_ray",
    "analytic_halting_spectrum", "analytic_nonhalting_value", "gap_scan", "numeric_spectrum",
    "spectral_gap", "verify_plane_waves",
    "bounce_metrics", "evolve", "spread_metrics", "example_path",
]


def example_path(name: str) -> str:
    """Filesystem path of a bundled example program, e.g. ``example_path("bell.json")``."""
    return str(resources.files(__package__) / "programs" / name)
