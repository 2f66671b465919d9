"""Eigenvalues of clocked Hamiltonians, analytic and numeric.

On a halting ray of period ``m`` the step unitary has the ``m``-th roots of
unity as eigenvalues and ``H`` has ``2 cos(2 pi k / m)``, with plane-wave
eigenvectors. On a non-halting ray every ``2 cos(2 pi a)``, ``0 <= a < 1``,
occurs; here that band is approached by two-sided truncations whose gap
closes like ``L**-2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats

from .clock import CyclicSchedule, build_step_unitary, ray_basis, truncate_two_sided
from .core import Program, QubitState, RayTrace
from .errors import ConvergenceError, DimensionCapError, NotHermitianError
from .hamiltonian import build_hamiltonian
from .pipeline import truncated_sector

__all__ = [
    "AnalyticEigenpair", "SpectrumReport", "GapScan", "PlaneWaveCheck",
    "analytic_halting_spectrum", "analytic_nonhalting_value", "analytic_gap",
    "numeric_spectrum", "jacobi_eigvalsh", "spectral_gap", "gap_scan",
    "band_filling_distance", "verify_plane_waves", "collapse_levels",
]

DEGENERACY_TOL = 1e-7
HERMITIAN_TOL = 1e-10
NUMERIC_CAP = 4096


@dataclass(frozen=True, eq=False)
class AnalyticEigenpair:
    label: float
    u_eigenvalue: complex
    h_eigenvalue: float
    vector: Optional[np.ndarray] = None


def analytic_halting_spectrum(m: int) -> list:
    """Plane waves ``e^{-2 pi i k l / m} / sqrt(m)`` over ray index ``l``, ``k = 0..m-1``."""
    if m < 2 or m % 2:
        raise ValueError(f"period must be an even integer >= 2, got {m}")
    ell = np.arange(m)
    out = []
    for k in range(m):
        u = complex(np.exp(2j * np.pi * k / m))
        vec = np.exp(-2j * np.pi * k * ell / m) / math.sqrt(m)
        out.append(AnalyticEigenpair(k, u, 2.0 * math.cos(2 * math.pi * k / m), vec))
    return out


def analytic_nonhalting_value(a: float) -> AnalyticEigenpair:
    # the eigenvector is not normalizable, so none is returned
    if not 0.0 <= a < 1.0:
        raise ValueError(f"a must lie in [0, 1), got {a}")
    return AnalyticEigenpair(a, complex(np.exp(2j * np.pi * a)), 2.0 * math.cos(2 * math.pi * a))


def analytic_gap(m: int) -> float:
    """Gap of the ``m``-cycle adjacency; ``m = 2`` is the doubled edge with levels ``+-2``."""
    if m == 2:
        return 4.0
    return 4.0 * math.sin(math.pi / m) ** 2


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    levels: np.ndarray
    multiplicities: np.ndarray
    gap: Optional[float]

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)

    def level_index(self) -> np.ndarray:
        """Level number of each eigenvalue, in eigenvalue order."""
        return np.repeat(np.arange(self.levels.size), self.multiplicities)


def collapse_levels(eigenvalues: np.ndarray, tol: float = DEGENERACY_TOL):
    """Group ascending eigenvalues whose neighbours differ by at most ``tol``."""
    ev = np.asarray(eigenvalues, dtype=float)
    if ev.size == 0:
        return np.array([]), np.array([], dtype=int)
    breaks = np.nonzero(np.diff(ev) > tol)[0] + 1
    groups = np.split(ev, breaks)
    return np.array([g.mean() for g in groups]), np.array([g.size for g in groups])


def jacobi_eigvalsh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    A phase on column ``q`` makes the ``(p, q)`` entry real, then the usual
    real rotation zeroes it.
    """
    a = np.array(a, dtype=np.complex128)
    n = a.shape[0]
    if n == 1:
        return a.real.diagonal().copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * scale:
            return np.sort(a.diagonal().real)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b <= 1e-300:
                    continue
                phase = apq / b
                alpha, beta = a[p, p].real, a[q, q].real
                zeta = (beta - alpha) / (2.0 * b)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def numeric_spectrum(matrix, degeneracy_tol: float = DEGENERACY_TOL,
                     method: str = "lapack", hermitian_tol: float = HERMITIAN_TOL) -> SpectrumReport:
    """Ascending eigenvalues, degeneracy-collapsed levels and gap of a Hermitian matrix.

    ``method`` is ``"lapack"`` (``numpy.linalg.eigvalsh``) or ``"jacobi"``.
    """
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > NUMERIC_CAP:
        raise DimensionCapError(f"dimension {a.shape[0]} exceeds {NUMERIC_CAP}")
    defect = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if defect > hermitian_tol:
        raise NotHermitianError(f"matrix Hermiticity defect {defect:.3e} exceeds {hermitian_tol}")
    if method == "lapack":
        try:
            ev = np.linalg.eigvalsh(a)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(str(exc)) from None
    elif method == "jacobi":
        ev = jacobi_eigvalsh(a)
    else:
        raise ValueError(f"unknown method {method!r}")
    ev = np.sort(np.asarray(ev, dtype=float))
    levels, mult = collapse_levels(ev, degeneracy_tol)
    gap = float(levels[1] - levels[0]) if levels.size >= 2 else None
    return SpectrumReport(ev, levels, mult, gap)


def spectral_gap(report: SpectrumReport) -> float:
    if report.levels.size < 2:
        raise ValueError("spectrum has a single level; no gap is defined")
    return float(report.levels[1] - report.levels[0])


@dataclass(frozen=True, eq=False)
class GapScan:
    half_widths: tuple
    gaps: np.ndarray
    fit_exponent: float
    fit_r2: float
    spectra: tuple

    def to_dict(self) -> dict:
        return {"half_widths": list(self.half_widths), "gaps": [float(g) for g in self.gaps],
                "fit_exponent": self.fit_exponent, "fit_r2": self.fit_r2}


def _truncated_spectrum(program: Program, L: int, initial) -> SpectrumReport:
    return numeric_spectrum(truncated_sector(program, L, initial).ray.entries)


def gap_scan(program: Program, half_widths: Sequence[int],
             initial: Optional[QubitState] = None, max_workers: Optional[int] = None) -> GapScan:
    """Gap of the truncated ray Hamiltonian for each ``L`` and a log-log power-law fit."""
    widths = tuple(int(L) for L in half_widths)
    if not widths or any(b <= a for a, b in zip(widths, widths[1:])):
        raise ValueError(f"half-widths must be non-empty and strictly ascending: {widths}")
    # surfaces a halting program before any work is spread over threads
    truncate_two_sided(program, widths[-1])
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            spectra = tuple(pool.map(lambda L: _truncated_spectrum(program, L, initial), widths))
    else:
        spectra = tuple(_truncated_spectrum(program, L, initial) for L in widths)
    gaps = np.array([spectral_gap(s) for s in spectra])
    if len(widths) >= 2:
        fit = stats.linregress(np.log(widths), np.log(gaps))
        exponent, r2 = float(fit.slope), float(fit.rvalue ** 2)
    else:
        exponent = r2 = float("nan")
    return GapScan(widths, gaps, exponent, r2, spectra)


def band_filling_distance(eigenvalues, probes: int = 100, band=(-2.0, 2.0)) -> float:
    """Largest distance from a uniform probe point in ``band`` to the nearest eigenvalue."""
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    pts = np.linspace(band[0], band[1], probes)
    pos = np.clip(np.searchsorted(ev, pts), 1, ev.size - 1) if ev.size > 1 else np.zeros(probes, int)
    dist = np.abs(ev[pos] - pts)
    if ev.size > 1:
        dist = np.minimum(dist, np.abs(ev[pos - 1] - pts))
    return float(dist.max())


class PlaneWaveCheck(NamedTuple):
    h_residual: float
    u_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.h_residual, self.u_residual)


def verify_plane_waves(schedule: CyclicSchedule, trace: RayTrace) -> PlaneWaveCheck:
    """Residuals of the full-space plane waves as eigenvectors of ``H`` and ``U``."""
    if not isinstance(schedule, CyclicSchedule):
        raise TypeError("plane waves are defined for cyclic schedules only")
    U = build_step_unitary(schedule)
    H = build_hamiltonian(U)
    V, _ = ray_basis(U, trace)
    m = schedule.period
    pairs = analytic_halting_spectrum(m)
    waves = V @ np.stack([p.vector for p in pairs], axis=1)
    u_eig = np.array([p.u_eigenvalue for p in pairs])
    h_eig = np.array([p.h_eigenvalue for p in pairs])
    h_res = np.linalg.norm(H.apply(waves) - waves * h_eig, axis=0)
    u_res = np.linalg.norm(U.apply(waves) - waves * u_eig, axis=0)
    return PlaneWaveCheck(float(h_res.max()), float(u_res.max()))
