"""Feynman Hamiltonian ``H = U + U^dagger`` in three representations.

* :class:`HamiltonianOp` - matrix-free, on the same space as the step unitary.
* :func:`emit_local_terms` - a sum of at most four-local terms with a unary
  clock (one cell per clock position, exactly one cell set).
* :func:`restrict_to_ray` - the matrix of ``H`` in the basis of clocked
  computational states, computed from explicit inner products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .clock import DENSE_CAP, CyclicSchedule, StepUnitary, ray_basis
from .core import RayTrace, ray_orthonormality_defect
from .errors import DimensionCapError, LayoutError, OrthonormalityError

__all__ = [
    "HamiltonianOp", "UnaryClockLayout", "LocalTerm", "RayMatrix",
    "build_hamiltonian", "emit_local_terms", "assemble_from_terms",
    "restrict_to_ray", "legal_embedding", "cycle_adjacency", "path_adjacency",
    "hermiticity_defect", "norm_bound_excess", "commutator_defect",
]

RAY_DEFECT_TOL = 1e-8

# |1><0| and |0><1| on one clock cell
RAISE = np.array([[0, 0], [1, 0]], dtype=np.complex128)
LOWER = np.array([[0, 1], [0, 0]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class HamiltonianOp:
    source: StepUnitary

    @property
    def dimension(self) -> int:
        return self.source.dimension

    def apply(self, v):
        return self.source.apply(v) + self.source.apply_adjoint(v)

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.dimension > cap:
            raise DimensionCapError(f"dense materialization of dimension {self.dimension} exceeds {cap}")
        return self.apply(np.eye(self.dimension, dtype=np.complex128))

    def as_linear_operator(self) -> LinearOperator:
        n = self.dimension
        return LinearOperator((n, n), matvec=self.apply, rmatvec=self.apply,
                              matmat=self.apply, dtype=np.complex128)


def build_hamiltonian(U: StepUnitary) -> HamiltonianOp:
    return HamiltonianOp(U)


@dataclass(frozen=True)
class UnaryClockLayout:
    """Sites ``0..n-1`` are qubits, sites ``n..n+num_cells-1`` are clock cells."""

    num_qubits: int
    num_cells: int

    @classmethod
    def for_schedule(cls, schedule) -> "UnaryClockLayout":
        return cls(schedule.num_qubits, schedule.num_labels)

    @property
    def num_sites(self) -> int:
        return self.num_qubits + self.num_cells

    @property
    def legal_dimension(self) -> int:
        return self.num_cells * 2 ** self.num_qubits

    def cell_site(self, cell: int) -> int:
        return self.num_qubits + cell

    def is_legal(self, cell_bits: Sequence[int]) -> bool:
        return len(cell_bits) == self.num_cells and sum(cell_bits) == 1


@dataclass(frozen=True, eq=False)
class LocalTerm:
    """Operator ``tensor`` on ``sites``; ``sites[0]`` is the top bit of the tensor index."""

    sites: tuple
    tensor: np.ndarray

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise LayoutError(f"repeated site in {sites}")
        if len(sites) > 4:
            raise LayoutError(f"term on {len(sites)} sites, at most 4 allowed")
        t = np.array(self.tensor, dtype=np.complex128)
        if t.shape != (2 ** len(sites),) * 2:
            raise LayoutError(f"tensor shape {t.shape} does not match {len(sites)} sites")
        t.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "tensor", t)

    def dagger(self) -> "LocalTerm":
        return LocalTerm(self.sites, self.tensor.conj().T)

    def to_dict(self) -> dict:
        return {"sites": list(self.sites),
                "tensor": [[[float(z.real), float(z.imag)] for z in row] for row in self.tensor]}

    @classmethod
    def from_dict(cls, d: dict) -> "LocalTerm":
        return cls(tuple(d["sites"]), [[complex(re, im) for re, im in row] for row in d["tensor"]])


def emit_local_terms(schedule, layout: Optional[UnaryClockLayout] = None) -> list:
    """One hop term ``U_l (x) |1><0|_{l+1} (x) |0><1|_l`` per step, each followed by its adjoint.

    The sign qubit of a cyclic schedule is not a site: on the legal subspace
    it is a function of which clock cell is set, so it needs no coupling.
    """
    if layout is None:
        layout = UnaryClockLayout.for_schedule(schedule)
    if layout.num_cells != schedule.num_labels or layout.num_qubits != schedule.num_qubits:
        raise LayoutError(f"layout {layout} does not fit the schedule")
    terms = []
    for src, dst, g, _ in schedule.transitions:
        if g.width > 2:
            raise LayoutError(f"{g!r} acts on more than 2 qubits")
        sites = g.targets + (layout.cell_site(dst), layout.cell_site(src))
        term = LocalTerm(sites, np.kron(g.matrix, np.kron(RAISE, LOWER)))
        terms.extend((term, term.dagger()))
    return terms


def assemble_from_terms(terms: Sequence[LocalTerm], layout: UnaryClockLayout,
                        cap: int = DENSE_CAP) -> np.ndarray:
    """Sum of ``terms`` projected to the single-1 clock subspace.

    Legal basis index is ``cell * 2**n + q``, matching the full-space layout
    of :mod:`feynman_gap.clock` with the sign fixed by the cell.
    """
    n = layout.num_qubits
    dim = layout.legal_dimension
    if dim > cap:
        raise DimensionCapError(f"legal dimension {dim} exceeds {cap}")
    out = np.zeros((dim, dim), dtype=np.complex128)
    idx = np.arange(dim)
    cell, q = idx // 2 ** n, idx % 2 ** n
    for term in terms:
        if max(term.sites, default=-1) >= layout.num_sites or min(term.sites, default=0) < 0:
            raise LayoutError(f"term sites {term.sites} outside a layout of {layout.num_sites} sites")
        k = len(term.sites)
        if k == 0:
            out[idx, idx] += term.tensor[0, 0]
            continue
        bits = np.stack([(q >> s) & 1 if s < n else (cell == s - n).astype(np.int64)
                         for s in term.sites])
        weights = 1 << np.arange(k - 1, -1, -1)
        local_in = weights @ bits
        term_cells = [s - n for s in term.sites if s >= n]
        outside = ~np.isin(cell, term_cells)
        for r, c in zip(*np.nonzero(term.tensor)):
            cols = np.nonzero(local_in == c)[0]
            if cols.size == 0:
                continue
            out_bits = [(r >> (k - 1 - i)) & 1 for i in range(k)]
            set_cells = [s - n for s, b in zip(term.sites, out_bits) if s >= n and b]
            new_q = q[cols].copy()
            for s, b in zip(term.sites, out_bits):
                if s < n:
                    new_q = (new_q & ~(1 << s)) | (b << s)
            keep = outside[cols]
            if len(set_cells) == 0:
                cols, new_q, new_cell = cols[keep], new_q[keep], cell[cols][keep]
            elif len(set_cells) == 1:
                cols, new_q = cols[~keep], new_q[~keep]
                new_cell = np.full(cols.size, set_cells[0])
            else:
                continue
            np.add.at(out, (new_cell * 2 ** n + new_q, cols), term.tensor[r, c])
    return out


def legal_embedding(U: StepUnitary) -> np.ndarray:
    """Full-space index of each legal basis state ``(cell, q)``."""
    sched = U.schedule
    c, s, q = U.block_shape
    cells = np.repeat(np.arange(c), q)
    qs = np.tile(np.arange(q), c)
    if isinstance(sched, CyclicSchedule):
        signs = np.array([int(sched.sign_of(l)) for l in range(c)])[cells]
    else:
        signs = np.zeros_like(cells)
    return (cells * s + signs) * q + qs


@dataclass(frozen=True, eq=False)
class RayMatrix:
    entries: np.ndarray
    labels: np.ndarray
    periodic: bool

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def index_of(self, label: int) -> int:
        hits = np.nonzero(self.labels == label)[0]
        if hits.size == 0:
            raise IndexError(f"no clock label {label}")
        return int(hits[0])


def restrict_to_ray(H: HamiltonianOp, trace: RayTrace, schedule=None) -> RayMatrix:
    if schedule is not None and schedule != H.source.schedule:
        raise ValueError("schedule does not match the Hamiltonian's step unitary")
    defect = ray_orthonormality_defect(trace)
    if defect > RAY_DEFECT_TOL:
        raise OrthonormalityError(f"ray trace norm defect {defect:.3e} exceeds {RAY_DEFECT_TOL}")
    V, labels = ray_basis(H.source, trace)
    entries = V.conj().T @ H.apply(V)
    return RayMatrix(entries, labels, isinstance(H.source.schedule, CyclicSchedule))


def cycle_adjacency(m: int) -> np.ndarray:
    a = np.zeros((m, m))
    for i in range(m):
        a[i, (i + 1) % m] += 1
        a[(i + 1) % m, i] += 1
    return a


def path_adjacency(size: int) -> np.ndarray:
    return np.diag(np.ones(size - 1), 1) + np.diag(np.ones(size - 1), -1)


def _probes(dim, rng, count):
    return rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))


def hermiticity_defect(H: HamiltonianOp, rng: np.random.Generator, probes: int = 8) -> float:
    """max |<x,Hy> - conj(<y,Hx>)| / (|x||y|) over random probe pairs."""
    x, y = _probes(H.dimension, rng, probes), _probes(H.dimension, rng, probes)
    hx, hy = H.apply(x), H.apply(y)
    lhs = np.einsum("ij,ij->j", x.conj(), hy)
    rhs = np.einsum("ij,ij->j", y.conj(), hx).conj()
    scale = np.linalg.norm(x, axis=0) * np.linalg.norm(y, axis=0)
    return float(np.max(np.abs(lhs - rhs) / scale))


def norm_bound_excess(H: HamiltonianOp, rng: np.random.Generator, probes: int = 8) -> float:
    """max of ||Hv|| - 2||v|| over unit random probes; at most 1e-10 for a valid H."""
    v = _probes(H.dimension, rng, probes)
    v /= np.linalg.norm(v, axis=0)
    return float(np.max(np.linalg.norm(H.apply(v), axis=0) - 2.0))


def commutator_defect(H: HamiltonianOp, rng: np.random.Generator, probes: int = 8) -> float:
    """max ||HUv - UHv|| over unit random probes."""
    U = H.source
    v = _probes(H.dimension, rng, probes)
    v /= np.linalg.norm(v, axis=0)
    diff = H.apply(U.apply(v)) - U.apply(H.apply(v))
    return float(np.max(np.linalg.norm(diff, axis=0)))
