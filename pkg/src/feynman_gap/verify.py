"""Invariant suite run by ``feynman-gap verify``.

Each check returns a :class:`Check` with the measured value and the limit it
was held to. Tolerance names are the keys of :data:`DEFAULT_TOLERANCES` and
can be overridden from the command line with ``--tol.<name>=<value>``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .clock import DENSE_CAP, ray_basis
from .core import Program, QubitState, run_forward
from .dynamics import bounce_metrics, default_times, evolve, evolve_states, propagate_expm, spread_metrics
from .errors import FeynmanGapError
from .hamiltonian import (UnaryClockLayout, assemble_from_terms, commutator_defect, cycle_adjacency,
                          emit_local_terms, hermiticity_defect, legal_embedding, norm_bound_excess,
                          path_adjacency)
from .pipeline import Sector, halting_sector, truncated_sector
from .spectral import (analytic_gap, analytic_halting_spectrum, band_filling_distance, gap_scan,
                       numeric_spectrum, spectral_gap, verify_plane_waves)

__all__ = ["Check", "DEFAULT_TOLERANCES", "verify_halting", "verify_nonhalting"]

DEFAULT_TOLERANCES = {
    "gate_unitary": 1e-12,
    "norm": 1e-10,
    "step_unitary": 1e-10,
    "cyclic_return": 1e-9,
    "mirror": 1e-12,
    "ray_fidelity": 1e-10,
    "isometry": 1e-10,
    "hermitian": 1e-10,
    "norm_bound": 1e-10,
    "commutator": 1e-9,
    "ray_matrix": 1e-12,
    "spectrum": 1e-9,
    "gap": 1e-9,
    "plane_wave": 1e-9,
    "eigen_range": 1e-9,
    "reassembly": 1e-10,
    "propagator": 1e-8,
    "evolution_norm": 1e-9,
    "period": 0.05,
    "fit_exponent": 0.2,
    "fit_r2": 1e-3,
    "band": 0.05,
    "spread_r2": 0.01,
    "degeneracy": 1e-7,
}

PROPAGATOR_DIM = 64


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _le(name, value, limit, detail=""):
    value = float(value)
    return Check(name, value, float(limit), bool(value <= limit), detail)


def _guard(name: str, fn: Callable[[], Check]) -> Check:
    try:
        return fn()
    except FeynmanGapError as exc:
        return Check(name, float("nan"), float("nan"), False, f"{type(exc).__name__}: {exc}")


def _common(sector: Sector, tol: dict, rng) -> list:
    H = sector.H
    gates = sector.trace.gates
    return [
        _le("gate_unitarity", max(g.unitarity_defect() for g in gates), tol["gate_unitary"]),
        _le("ray_norm", max(abs(s.norm - 1) for s in sector.trace.states), tol["norm"]),
        _le("hermiticity", hermiticity_defect(H, rng), tol["hermitian"]),
        _le("norm_bound", max(norm_bound_excess(H, rng), 0.0), tol["norm_bound"]),
        _le("ray_matrix_hermitian", sector.ray.hermiticity_defect(), tol["ray_matrix"]),
    ]


def _reassembly(sector: Sector, tol: dict) -> list:
    schedule = sector.schedule
    layout = UnaryClockLayout.for_schedule(schedule)
    terms = emit_local_terms(schedule, layout)
    widest = max(len(t.sites) for t in terms)
    expected = 4 if any(g.width == 2 for _, _, g, _ in schedule.transitions) else 3
    out = [Check("term_locality", widest, 4, widest <= 4 and widest == expected,
                 f"{len(terms)} terms, widest support {widest}")]
    if sector.U.dimension <= DENSE_CAP and layout.legal_dimension <= DENSE_CAP:
        idx = legal_embedding(sector.U)
        dense = sector.H.dense()[np.ix_(idx, idx)]
        out.append(_le("term_reassembly", np.max(np.abs(assemble_from_terms(terms, layout) - dense)),
                       tol["reassembly"]))
    return out


def _propagator(sector: Sector, index: int, tol: dict) -> list:
    if sector.ray.dimension > PROPAGATOR_DIM:
        return []
    times = [0.1, 0.5, 1.0, 2.5]
    diff = evolve_states(sector.ray, index, times) - propagate_expm(sector.ray, index, times)
    return [_le("propagator_oracle", np.max(np.linalg.norm(diff, axis=1)), tol["propagator"])]


def verify_halting(program: Program, initial: Optional[QubitState] = None,
                   tolerances: Optional[dict] = None, seed: int = 0) -> list:
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    rng = np.random.default_rng(seed)
    sector = halting_sector(program, initial)
    sched, U, H, trace, ray = sector.schedule, sector.U, sector.H, sector.trace, sector.ray
    m = sched.period
    checks = _common(sector, tol, rng)

    again = run_forward(program, initial)
    same = all(np.array_equal(a.amplitudes, b.amplitudes) for a, b in zip(trace.states, again.states))
    checks.append(Check("determinism", 0.0 if same else 1.0, 0.0, same))
    checks.append(_le("mirror_property", sched.mirror_defect(), tol["mirror"]))

    if U.dimension <= DENSE_CAP:
        D = U.dense()
        checks.append(_le("step_unitarity", np.max(np.abs(D.conj().T @ D - np.eye(U.dimension))),
                          tol["step_unitary"]))

    V, _ = ray_basis(U, trace)
    W = V.copy()
    fidelities = []
    for ell in range(m):
        if ell <= sched.halting_step:
            fidelities.append(abs(np.vdot(V[:, ell], W[:, 0])) ** 2)
        W = U.apply(W)
    checks.append(_le("ray_reproduction", 1.0 - min(fidelities), tol["ray_fidelity"]))
    checks.append(_le("cyclic_return", np.max(np.linalg.norm(W - V, axis=0)), tol["cyclic_return"]))
    checks.append(_le("commutator", commutator_defect(H, rng), tol["commutator"]))
    checks.append(_le("ray_matrix_cycle", np.max(np.abs(ray.entries - cycle_adjacency(m))), tol["ray_matrix"]))

    report = numeric_spectrum(ray.entries)
    analytic = np.sort([p.h_eigenvalue for p in analytic_halting_spectrum(m)])
    checks.append(_le("spectrum_vs_analytic", np.max(np.abs(report.eigenvalues - analytic)), tol["spectrum"]))
    gap = spectral_gap(report)
    checks.append(_le("gap_formula", abs(gap - analytic_gap(m)), tol["gap"],
                      f"gap {gap!r}, analytic {analytic_gap(m)!r}, m={m}"))
    checks.append(_le("eigenvalue_range", max(np.max(np.abs(report.eigenvalues)) - 2.0, 0.0), tol["eigen_range"]))
    pw = verify_plane_waves(sched, trace)
    checks.append(_le("plane_wave_h", pw.h_residual, tol["plane_wave"]))
    checks.append(_le("plane_wave_u", pw.u_residual, tol["plane_wave"]))
    checks.extend(_reassembly(sector, tol))
    checks.extend(_propagator(sector, 0, tol))

    times = default_times(ray)
    traj = evolve(ray, 0, times)
    checks.append(_le("evolution_norm", np.max(np.abs(traj.norms - 1.0)), tol["evolution_norm"]))

    def bounce():
        coarse = bounce_metrics(traj).estimated_period
        fine = bounce_metrics(evolve(ray, 0, np.linspace(times[0], times[-1], 10 * len(times)))).estimated_period
        return _le("bounce_period", abs(coarse - fine) / fine, tol["period"],
                   f"period {coarse!r} vs refined {fine!r}")

    checks.append(_guard("bounce_period", bounce))
    return checks


def verify_nonhalting(program: Program, half_widths, initial: Optional[QubitState] = None,
                      tolerances: Optional[dict] = None, seed: int = 0) -> list:
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    rng = np.random.default_rng(seed)
    widths = tuple(half_widths)
    L = widths[-1]
    sector = truncated_sector(program, L, initial)
    U, ray = sector.U, sector.ray
    checks = _common(sector, tol, rng)
    checks.append(_le("ray_matrix_path", np.max(np.abs(ray.entries - path_adjacency(2 * L + 1))),
                      tol["ray_matrix"]))

    # isometry on clock labels -L..L-1 (the block at +L has no successor)
    c, s, q = U.block_shape
    v = rng.standard_normal((c, s, q, 4)) + 1j * rng.standard_normal((c, s, q, 4))
    v[-1] = 0
    v = v.reshape(-1, 4)
    checks.append(_le("interior_isometry", np.max(np.linalg.norm(U.apply_adjoint(U.apply(v)) - v, axis=0)
                                                  / np.linalg.norm(v, axis=0)), tol["isometry"]))

    scan = gap_scan(program, widths, initial)
    decreasing = bool(np.all(np.diff(scan.gaps) < 0))
    checks.append(Check("gaps_decreasing", float(np.max(np.diff(scan.gaps))) if len(widths) > 1 else 0.0,
                        0.0, decreasing, f"gaps {[float(g) for g in scan.gaps]}"))
    if len(widths) > 1:
        checks.append(_le("fit_exponent", abs(scan.fit_exponent + 2.0), tol["fit_exponent"],
                          f"exponent {scan.fit_exponent!r}"))
        checks.append(_le("fit_r2", 1.0 - scan.fit_r2, tol["fit_r2"], f"R^2 {scan.fit_r2!r}"))
    path_gaps = np.array([2 * np.cos(np.pi / (2 * w + 2)) - 2 * np.cos(2 * np.pi / (2 * w + 2)) for w in widths])
    checks.append(_le("path_gap_formula", np.max(np.abs(scan.gaps - path_gaps)), tol["gap"]))
    checks.append(_le("band_filling", band_filling_distance(scan.spectra[-1].eigenvalues), tol["band"],
                      f"L={L}"))
    checks.append(_le("eigenvalue_range", max(np.max(np.abs(scan.spectra[-1].eigenvalues)) - 2.0, 0.0),
                      tol["eigen_range"]))

    small = sector if widths[0] == L else truncated_sector(program, widths[0], initial)
    checks.extend(_reassembly(small, tol))
    checks.extend(_propagator(small, small.ray.index_of(0), tol))

    traj = evolve(ray, ray.index_of(0), default_times(ray))
    checks.append(_le("evolution_norm", np.max(np.abs(traj.norms - 1.0)), tol["evolution_norm"]))
    checks.append(_guard("ballistic_spread",
                         lambda: _le("ballistic_spread", 1.0 - spread_metrics(traj).r2, tol["spread_r2"])))
    return checks
