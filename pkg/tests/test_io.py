import json

import numpy as np
import pytest

from feynman_gap import example_path
from feynman_gap.core import Circuit, QubitState, gate, run_forward
from feynman_gap.errors import ProgramFormatError
from feynman_gap.io import (atomic_write, load_program, matrix_to_csv_rows, program_from_dict,
                            program_to_dict, write_csv, write_json, write_return_plot)
from feynman_gap.pipeline import classify


def test_round_trip_custom_gate(rng):
    from scipy.stats import unitary_group
    u = unitary_group.rvs(4, random_state=1)
    circ = Circuit(2, (gate("H", 0), gate("custom", 1, 0, matrix=u), gate("S", 1).adjoint()))
    prog, initial = program_from_dict(json.loads(json.dumps(program_to_dict(circ))))
    assert initial is None
    a = run_forward(circ.as_program()).states[-1].amplitudes
    b = run_forward(prog).states[-1].amplitudes
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_repeat_forever_is_endless():
    prog, _ = load_program(example_path("identity_forever.json"), budget=16)
    assert prog.endless and classify(prog) == "endless"


def test_halt_after_truncates():
    prog, _ = program_from_dict({"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}] * 4, "halt_after": 2})
    assert run_forward(prog).halted_at == 2


def test_repeat_with_halt_after():
    data = {"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}, {"kind": "H", "targets": [0]}],
            "repeat": "forever", "halt_after": 5}
    prog, _ = program_from_dict(data)
    assert run_forward(prog).halted_at == 5 and classify(prog) == "halting"


def test_initial_state():
    data = {"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}], "initial": [[0, 0], [1, 0]]}
    _, initial = program_from_dict(data)
    np.testing.assert_array_equal(initial.amplitudes, QubitState.basis(1, 1).amplitudes)


@pytest.mark.parametrize("data", [
    [],
    {"gates": []},
    {"num_qubits": 1, "gates": []},
    {"num_qubits": 1, "gates": [{"kind": "Q", "targets": [0]}]},
    {"num_qubits": 1, "gates": [{"kind": "CNOT", "targets": [0, 1]}]},
    {"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}], "repeat": "twice"},
    {"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}], "halt_after": 3},
    {"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}], "halt_after": -1},
    {"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}], "initial": [[1, 0], [1, 0]]},
    {"num_qubits": 1, "gates": [{"kind": "X", "targets": [0]}], "initial": [[1, 0], [0, 0], [0, 0], [0, 0]]},
    {"num_qubits": 1, "gates": [{"kind": "custom", "targets": [0], "matrix": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}]},
])
def test_malformed_programs(data):
    with pytest.raises(ProgramFormatError):
        program_from_dict(data)


def test_load_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ProgramFormatError):
        load_program(p)
    with pytest.raises(OSError):
        load_program(tmp_path / "missing.json")


def test_bundled_examples_parse():
    for name in ("bell.json", "identity_forever.json", "xh_forever.json", "ghz3_custom.json"):
        load_program(example_path(name))


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "a.txt"
    atomic_write(target, "one")
    atomic_write(target, "two")
    assert target.read_text() == "two"
    assert [p.name for p in target.parent.iterdir()] == ["a.txt"]


def test_atomic_write_failure_keeps_old(tmp_path):
    target = tmp_path / "a.txt"
    atomic_write(target, "old")
    with pytest.raises(TypeError):
        atomic_write(target, 123)
    assert target.read_text() == "old"
    assert len(list(tmp_path.iterdir())) == 1


def test_json_numpy_conversion(tmp_path):
    p = write_json(tmp_path / "x.json", {"a": np.arange(3), "b": np.float64(0.5), "c": np.bool_(True),
                                         "d": 1 + 2j, "e": float("nan"), 3: (np.int64(4),)})
    assert json.loads(p.read_text()) == {"a": [0, 1, 2], "b": 0.5, "c": True, "d": [1.0, 2.0],
                                         "e": None, "3": [4]}


def test_csv_repr_floats(tmp_path):
    p = write_csv(tmp_path / "x.csv", ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    assert p.read_text() == "a,b\n1,0.1\n2,0.3333333333333333\n"


def test_matrix_rows_nonzero_only():
    rows = list(matrix_to_csv_rows(np.array([[0, 1j], [2, 0]])))
    assert rows == [(0, 1, 0.0, 1.0), (1, 0, 2.0, 0.0)]


def test_svg_deterministic(tmp_path):
    t = np.linspace(0, 1, 20)
    a = write_return_plot(tmp_path / "a.svg", t, np.cos(t) ** 2, t, title="x").read_bytes()
    b = write_return_plot(tmp_path / "b.svg", t, np.cos(t) ** 2, t, title="x").read_bytes()
    assert a == b
    assert b"return probability" in a and b"RMS clock displacement" in a
