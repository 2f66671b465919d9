"""Continuous-time walk of the clock under ``exp(-iHt)`` on the ray subspace.

A halting ray is a cycle, so the walk keeps returning to its start; a
truncated non-halting ray is a path, on which the walk spreads ballistically
until it meets the ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import linalg, stats

from .errors import ConvergenceError, EmptyWindowError, NoPeaksError, SectorMismatchError
from .hamiltonian import RayMatrix

__all__ = [
    "WalkTrajectory", "BounceReport", "SpreadFit", "evolve", "propagate_expm",
    "evolve_states", "default_times", "bounce_metrics", "spread_metrics", "max_return_probability",
]

PEAK_THRESHOLD = 0.5
DEFAULT_SAMPLES = 200


@dataclass(frozen=True, eq=False)
class WalkTrajectory:
    times: np.ndarray
    clock_distributions: np.ndarray  # (len(times), ray dimension)
    return_probability: np.ndarray
    mean_sq_displacement: np.ndarray
    labels: np.ndarray
    periodic: bool
    initial_index: int
    norms: np.ndarray

    @property
    def rms_displacement(self) -> np.ndarray:
        return np.sqrt(self.mean_sq_displacement)


def default_times(ray: RayMatrix, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """``[0, 4m]`` for a cycle of ``m`` sites, ``[0, L]`` for a path on ``-L..L``."""
    if ray.periodic:
        return np.linspace(0.0, 4.0 * ray.dimension, samples)
    return np.linspace(0.0, float(np.max(np.abs(ray.labels))), samples)


def _displacements(ray: RayMatrix, index: int) -> np.ndarray:
    d = ray.labels - ray.labels[index]
    if ray.periodic:
        m = ray.dimension
        d = (d + m // 2) % m - m // 2
    return d.astype(float)


def evolve(ray: RayMatrix, initial_index: int, times: Sequence[float]) -> WalkTrajectory:
    """Propagate the ray basis state ``initial_index`` by full eigendecomposition."""
    times = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    if not 0 <= initial_index < ray.dimension:
        raise IndexError(f"initial index {initial_index} outside 0..{ray.dimension - 1}")
    probs = np.abs(evolve_states(ray, initial_index, times)) ** 2
    d2 = _displacements(ray, initial_index) ** 2
    return WalkTrajectory(
        times=times,
        clock_distributions=probs,
        return_probability=probs[:, initial_index],
        mean_sq_displacement=probs @ d2,
        labels=ray.labels,
        periodic=ray.periodic,
        initial_index=initial_index,
        norms=np.sqrt(probs.sum(axis=1)),
    )


def propagate_expm(ray: RayMatrix, initial_index: int, times: Sequence[float]) -> np.ndarray:
    """States ``expm(-iHt) e_i`` by scaling and squaring, one row per time."""
    psi0 = np.zeros(ray.dimension, dtype=np.complex128)
    psi0[initial_index] = 1.0
    return np.stack([linalg.expm(-1j * t * ray.entries) @ psi0 for t in np.asarray(times, float)])


def evolve_states(ray: RayMatrix, initial_index: int, times: Sequence[float]) -> np.ndarray:
    """Amplitudes from the eigendecomposition propagator, one row per time."""
    try:
        energies, vecs = np.linalg.eigh(ray.entries)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from None
    overlaps = vecs[initial_index].conj()
    return (np.exp(-1j * np.outer(np.asarray(times, float), energies)) * overlaps) @ vecs.T


@dataclass(frozen=True)
class BounceReport:
    peak_times: tuple
    estimated_period: float
    peak_heights: tuple


def bounce_metrics(traj: WalkTrajectory, threshold: float = PEAK_THRESHOLD) -> BounceReport:
    """Peaks of the return probability above ``threshold`` and their mean spacing.

    Peaks are strict local maxima; the first sample counts if it is strictly
    above the second, since a walk that starts on a ray state begins at a
    maximum.
    """
    p = traj.return_probability
    if p.size < 3:
        raise ValueError("bounce detection needs at least 3 time samples")
    interior = np.nonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:]) & (p[1:-1] > threshold))[0] + 1
    idx = list(interior)
    if p[0] > p[1] and p[0] > threshold:
        idx.insert(0, 0)
    if len(idx) < 2:
        raise NoPeaksError(f"found {len(idx)} return-probability peak(s) above {threshold}; need 2")
    t = traj.times[idx]
    return BounceReport(tuple(float(x) for x in t), float(np.mean(np.diff(t))),
                        tuple(float(x) for x in p[idx]))


class SpreadFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    points: int


def spread_metrics(traj: WalkTrajectory, window: Optional[tuple] = None) -> SpreadFit:
    """Least-squares line through RMS clock displacement versus time.

    The default window is ``0 < t < L/2``: the walk front moves at speed 2, so
    it reaches the truncation ends at ``t = L/2``.
    """
    if traj.periodic:
        raise SectorMismatchError("spread metrics apply to truncated (non-halting) walks")
    t = traj.times
    if window is None:
        half = float(np.max(np.abs(traj.labels))) / 2.0
        mask = (t > 0.0) & (t < half)
    else:
        mask = (t >= window[0]) & (t <= window[1])
    if mask.sum() < 2:
        raise EmptyWindowError(f"{int(mask.sum())} sample(s) in the fit window; need 2")
    fit = stats.linregress(t[mask], traj.rms_displacement[mask])
    return SpreadFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2), int(mask.sum()))


def max_return_probability(ray: RayMatrix, initial_index: int, t_max: float, dt: float = 0.01):
    """``(t, p)`` of the largest return probability on a grid over ``(0, t_max]``."""
    times = np.arange(dt, t_max + dt / 2, dt)
    energies, vecs = np.linalg.eigh(ray.entries)
    weights = np.abs(vecs[initial_index]) ** 2
    p = np.abs(np.exp(-1j * np.outer(times, energies)) @ weights) ** 2
    i = int(np.argmax(p))
    return float(times[i]), float(p[i])
