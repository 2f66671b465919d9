"""``feynman-gap`` command line.

Exit codes: 0 ok, 1 usage, 2 I/O, 3 sector mismatch, 4 budget exhausted,
5 invariant failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import DEFAULT_BUDGET
from .dynamics import bounce_metrics, default_times, evolve, spread_metrics
from .errors import (BudgetExhaustedError, FeynmanGapError, NoPeaksError, EmptyWindowError,
                     ProgramFormatError, SectorMismatchError)
from .hamiltonian import UnaryClockLayout, assemble_from_terms, emit_local_terms, legal_embedding
from .clock import DENSE_CAP
from .io import load_program, write_csv, write_json, write_return_plot
from .pipeline import classify, halting_sector, truncated_sector
from .spectral import analytic_gap, analytic_halting_spectrum, gap_scan, numeric_spectrum
from .verify import DEFAULT_TOLERANCES, verify_halting, verify_nonhalting

log = logging.getLogger("feynman_gap")

COMMANDS = ("build", "spectrum", "gap-scan", "walk", "emit-terms", "verify")
DEFAULT_HALF_WIDTHS = (8, 16, 32, 64, 128)
OUT_ENV = "FEYNMAN_GAP_OUT"

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SECTOR, EXIT_BUDGET, EXIT_INVARIANT = range(6)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str
    output_dir: str
    budget: int = DEFAULT_BUDGET
    half_widths: tuple = DEFAULT_HALF_WIDTHS
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    times: Optional[tuple] = None
    distribution: bool = False


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> tuple:
    try:
        values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"malformed integer list {text!r}") from None
    if not values:
        raise UsageError("empty --L list")
    if any(v < 1 for v in values):
        raise UsageError(f"half-widths must be positive: {text}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError(f"half-widths must be strictly ascending: {text}")
    return values


def _times(text: str) -> tuple:
    parts = text.split(":")
    try:
        t0, t1, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise UsageError(f"--times expects t0:t1:n, got {text!r}") from None
    if len(parts) != 3 or n < 1 or not (np.isfinite(t0) and np.isfinite(t1)) or t1 < t0:
        raise UsageError(f"--times expects t0:t1:n with t0 <= t1 and n >= 1, got {text!r}")
    return t0, t1, n


def _split_tolerances(argv):
    rest, tols = [], {}
    it = iter(argv)
    for arg in it:
        if arg.startswith("--tol."):
            key, sep, value = arg[len("--tol."):].partition("=")
            if not sep:
                value = next(it, None)
                if value is None:
                    raise UsageError(f"{arg} needs a value")
            if key not in DEFAULT_TOLERANCES:
                raise UsageError(f"unknown tolerance {key!r}; known: {', '.join(sorted(DEFAULT_TOLERANCES))}")
            try:
                tols[key] = float(value)
            except ValueError:
                raise UsageError(f"tolerance {key} must be a number, got {value!r}") from None
            if not tols[key] > 0:
                raise UsageError(f"tolerance {key} must be positive")
        else:
            rest.append(arg)
    return rest, tols


def _parser() -> _Parser:
    p = _Parser(prog="feynman-gap", description="Feynman clock Hamiltonians and their spectral gaps.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--in", dest="input_path", required=True, help="circuit/program JSON")
    p.add_argument("--out", dest="output_dir", default="out")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--L", dest="half_widths", default=",".join(map(str, DEFAULT_HALF_WIDTHS)))
    p.add_argument("--times", default=None, help="t0:t1:n")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--distribution", action="store_true", help="walk: also write per-site distribution CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_args(argv) -> RunConfig:
    rest, tols = _split_tolerances(list(argv))
    ns = _parser().parse_args(rest)
    if ns.budget < 1:
        raise UsageError("--budget must be at least 1")
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return RunConfig(
        command=ns.command,
        input_path=ns.input_path,
        output_dir=os.environ.get(OUT_ENV) or ns.output_dir,
        budget=ns.budget,
        half_widths=_int_list(ns.half_widths),
        tolerances=tols,
        seed=ns.seed,
        times=_times(ns.times) if ns.times else None,
        distribution=ns.distribution,
    )


def _time_grid(config: RunConfig, ray) -> np.ndarray:
    if config.times is None:
        return default_times(ray)
    t0, t1, n = config.times
    return np.linspace(t0, t1, n)


def _sector(config, program, initial, kind):
    """Cyclic sector if the program halted within budget, else the truncation at max L."""
    if kind == "halting":
        return halting_sector(program, initial)
    return truncated_sector(program, config.half_widths[-1], initial)


def _cmd_build(config, program, initial, kind, out: Path) -> int:
    sector = _sector(config, program, initial, kind)
    write_json(out / "schedule.json", sector.schedule.to_dict())
    return EXIT_OK


def _cmd_spectrum(config, program, initial, kind, out: Path) -> int:
    if kind == "endless":
        raise SectorMismatchError("program never halts: its spectrum is a continuous band; use gap-scan")
    sector = halting_sector(program, initial)
    m = sector.schedule.period
    report = numeric_spectrum(sector.ray.entries, degeneracy_tol=config.tolerances.get("degeneracy", 1e-7))
    analytic = np.sort([p.h_eigenvalue for p in analytic_halting_spectrum(m)])
    level_of = report.level_index()
    mult = report.multiplicities[level_of]
    write_csv(out / "spectrum.csv", ["index", "eigenvalue", "level_index", "multiplicity"],
              [(i, float(e), int(level_of[i]), int(mult[i])) for i, e in enumerate(report.eigenvalues)])
    deviation = float(np.max(np.abs(report.eigenvalues - analytic)))
    tol = config.tolerances.get("spectrum", DEFAULT_TOLERANCES["spectrum"])
    gap_dev = abs(report.gap - analytic_gap(m))
    gap_tol = config.tolerances.get("gap", DEFAULT_TOLERANCES["gap"])
    ok = deviation <= tol and gap_dev <= gap_tol
    write_json(out / "spectrum_report.json", {
        "period": m, "numeric": report.eigenvalues, "analytic": analytic,
        "max_deviation": deviation, "levels": report.levels, "multiplicities": report.multiplicities,
        "gap": report.gap, "analytic_gap": analytic_gap(m), "passed": ok,
    })
    print(f"m={m} gap={report.gap:.12g} analytic={analytic_gap(m):.12g} max deviation={deviation:.3e}")
    return EXIT_OK if ok else EXIT_INVARIANT


def _cmd_gap_scan(config, program, initial, kind, out: Path) -> int:
    if kind == "halting":
        raise SectorMismatchError("program halts within the budget: its spectrum is discrete; use spectrum")
    scan = gap_scan(program, config.half_widths, initial)
    write_csv(out / "gap_scan.csv", ["L", "gap"], [(L, float(g)) for L, g in zip(scan.half_widths, scan.gaps)])
    write_json(out / "gap_fit.json", scan.to_dict())
    print(f"fit exponent={scan.fit_exponent:.6g} R^2={scan.fit_r2:.6g}")
    return EXIT_OK


def _cmd_walk(config, program, initial, kind, out: Path) -> int:
    sector = _sector(config, program, initial, kind)
    ray = sector.ray
    start = 0 if ray.periodic else ray.index_of(0)
    traj = evolve(ray, start, _time_grid(config, ray))
    write_csv(out / "trajectory.csv", ["t", "return_prob", "mean_sq_displacement"],
              zip(traj.times.tolist(), traj.return_probability.tolist(), traj.mean_sq_displacement.tolist()))
    if config.distribution:
        write_csv(out / "distribution.csv", ["t"] + [f"l={int(l)}" for l in ray.labels],
                  ([t] + row for t, row in zip(traj.times.tolist(), traj.clock_distributions.tolist())))
    write_return_plot(out / "walk.svg", traj.times, traj.return_probability, traj.rms_displacement,
                      title="halting (cyclic) sector" if ray.periodic else "truncated non-halting sector")
    report = {"sector": "cyclic" if ray.periodic else "truncated", "dimension": ray.dimension,
              "max_norm_error": float(np.max(np.abs(traj.norms - 1.0)))}
    try:
        if ray.periodic:
            b = bounce_metrics(traj)
            report.update(peak_times=b.peak_times, peak_heights=b.peak_heights, estimated_period=b.estimated_period)
        else:
            s = spread_metrics(traj)
            report.update(rms_slope=s.slope, rms_intercept=s.intercept, rms_r2=s.r2, fit_points=s.points)
    except (NoPeaksError, EmptyWindowError) as exc:
        report["metrics_error"] = str(exc)
    write_json(out / "walk_report.json", report)
    return EXIT_OK


def _cmd_emit_terms(config, program, initial, kind, out: Path) -> int:
    sector = _sector(config, program, initial, kind)
    layout = UnaryClockLayout.for_schedule(sector.schedule)
    terms = emit_local_terms(sector.schedule, layout)
    write_json(out / "terms.json", [t.to_dict() for t in terms])
    widest = max(len(t.sites) for t in terms)
    report = {"num_terms": len(terms), "max_support": widest, "num_qubits": layout.num_qubits,
              "num_clock_cells": layout.num_cells}
    ok = widest <= 4
    if sector.U.dimension <= DENSE_CAP and layout.legal_dimension <= DENSE_CAP:
        idx = legal_embedding(sector.U)
        dev = float(np.max(np.abs(assemble_from_terms(terms, layout) - sector.H.dense()[np.ix_(idx, idx)])))
        tol = config.tolerances.get("reassembly", DEFAULT_TOLERANCES["reassembly"])
        report.update(reassembly_deviation=dev, reassembly_tolerance=tol)
        ok = ok and dev <= tol
    else:
        report["reassembly_deviation"] = None
    report["passed"] = ok
    write_json(out / "terms_report.json", report)
    return EXIT_OK if ok else EXIT_INVARIANT


def _cmd_verify(config, program, initial, kind, out: Path) -> int:
    if kind == "halting":
        checks = verify_halting(program, initial, config.tolerances, config.seed)
    else:
        checks = verify_nonhalting(program, config.half_widths, initial, config.tolerances, config.seed)
    ok = all(c.passed for c in checks)
    write_json(out / "verify_report.json", {"sector": "halting" if kind == "halting" else "non-halting",
                                            "passed": ok, "checks": [c.to_dict() for c in checks]})
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (limit {c.limit:.3g}) {c.detail}".rstrip())
    return EXIT_OK if ok else EXIT_INVARIANT


_DISPATCH = {
    "build": _cmd_build, "spectrum": _cmd_spectrum, "gap-scan": _cmd_gap_scan,
    "walk": _cmd_walk, "emit-terms": _cmd_emit_terms, "verify": _cmd_verify,
}


def run(config: RunConfig) -> int:
    try:
        program, initial = load_program(config.input_path, config.budget)
    except (OSError, ProgramFormatError) as exc:
        print(f"error: cannot read {config.input_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    kind = classify(program, initial)
    log.info("program classified as %s (budget %d)", kind, config.budget)
    if kind == "exhausted" and config.command == "spectrum":
        print(f"error: no HALT within the budget of {config.budget} steps", file=sys.stderr)
        return EXIT_BUDGET
    try:
        return _DISPATCH[config.command](config, program, initial, kind, Path(config.output_dir))
    except SectorMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SECTOR
    except BudgetExhaustedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FeynmanGapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def main(argv=None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        _parser().print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
