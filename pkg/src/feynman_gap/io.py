"""File formats: program JSON in, JSON/CSV/SVG out.

Program JSON::

    {"num_qubits": 2,
     "gates": [{"kind": "H", "targets": [0]},
               {"kind": "custom", "targets": [0, 1], "matrix": [[[re, im], ...], ...]}],
     "halt_after": null,        # or T
     "repeat": null,            # or "forever"
     "initial": [[re, im], ...] # optional, defaults to |0...0>
    }

All writers go through :func:`atomic_write` and format floats with ``repr``
so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .core import DEFAULT_BUDGET, HALT, Circuit, Program, QubitState, gate_from_descriptor
from .errors import FeynmanGapError, ProgramFormatError

__all__ = [
    "program_from_dict", "load_program", "program_to_dict", "atomic_write",
    "write_json", "write_csv", "matrix_to_csv_rows", "write_return_plot",
]


def program_from_dict(data: dict, budget: int = DEFAULT_BUDGET):
    """Return ``(program, initial_state_or_None)``."""
    if not isinstance(data, dict):
        raise ProgramFormatError("program JSON must be an object")
    try:
        n = int(data["num_qubits"])
        descriptors = data["gates"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProgramFormatError(f"missing or malformed field: {exc}") from None
    if not isinstance(descriptors, list) or not descriptors:
        raise ProgramFormatError("'gates' must be a non-empty list")
    try:
        gates = [gate_from_descriptor(d) for d in descriptors]
        circuit = Circuit(n, tuple(gates))
    except FeynmanGapError as exc:
        raise ProgramFormatError(str(exc)) from None
    halt_after = data.get("halt_after")
    repeat = data.get("repeat")
    if halt_after is not None and (not isinstance(halt_after, int) or halt_after < 0):
        raise ProgramFormatError(f"'halt_after' must be a non-negative integer or null, got {halt_after!r}")
    if repeat not in (None, "forever"):
        raise ProgramFormatError(f"'repeat' must be \"forever\" or null, got {repeat!r}")
    if repeat == "forever":
        program = Program.repeating(n, circuit.gates, halt_after, budget)
    else:
        if halt_after is not None and halt_after > len(gates):
            raise ProgramFormatError(f"'halt_after' {halt_after} exceeds the {len(gates)} listed gates")
        T = len(gates) if halt_after is None else halt_after
        program = Circuit(n, circuit.gates[:T]).as_program(budget) if T else \
            Program(n, lambda step: HALT, budget)
    initial = None
    if data.get("initial") is not None:
        try:
            amps = [complex(re, im) for re, im in data["initial"]]
            initial = QubitState.from_amplitudes(amps)
        except (TypeError, ValueError) as exc:
            raise ProgramFormatError(f"malformed initial state: {exc}") from None
        if initial.num_qubits != n:
            raise ProgramFormatError(f"initial state has {initial.num_qubits} qubits, program has {n}")
    return program, initial


def load_program(path: Union[str, Path], budget: int = DEFAULT_BUDGET):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProgramFormatError(f"{path}: {exc}") from None
    return program_from_dict(data, budget)


def program_to_dict(circuit: Circuit, repeat: bool = False, halt_after: Optional[int] = None) -> dict:
    return {"num_qubits": circuit.num_qubits,
            "gates": [g.descriptor() for g in circuit.gates],
            "halt_after": halt_after,
            "repeat": "forever" if repeat else None}


def atomic_write(path: Union[str, Path], text: str) -> Path:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return atomic_write(path, buf.getvalue())


def matrix_to_csv_rows(matrix: np.ndarray):
    """``(row, col, re, im)`` for every nonzero entry, row-major."""
    for r, c in zip(*np.nonzero(matrix)):
        z = complex(matrix[r, c])
        yield int(r), int(c), z.real, z.imag


def write_return_plot(path, times, return_prob, rms=None, title: str = "") -> Path:
    """Axis-labelled SVG line plot of return probability (and RMS displacement)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "feynman-gap", "svg.fonttype": "none"}):
        panels = 2 if rms is not None else 1
        fig, axes = plt.subplots(panels, 1, figsize=(6, 2.6 * panels), squeeze=False)
        ax = axes[0, 0]
        ax.plot(times, return_prob)
        ax.set_xlabel("t")
        ax.set_ylabel("return probability")
        if title:
            ax.set_title(title)
        if rms is not None:
            ax = axes[1, 0]
            ax.plot(times, rms)
            ax.set_xlabel("t")
            ax.set_ylabel("RMS clock displacement")
        fig.tight_layout()
        buf = _io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return atomic_write(path, buf.getvalue())
