import math

import numpy as np
import pytest

from qemkit import mps
from qemkit.circuits import eval_angle, format_gate_list, load_circuit, parse_gate_list, parse_qasm
from qemkit.statevector import (DenseState, SparseState, apply_circuit, dump_state, fidelity, load_state_dump,
                                random_circuit)

BELL = "qubits 2\nh 0\ncx 0 1\n"
BELL_QASM = """OPENQASM 2.0;
include "qelib1.inc";
qreg q[2];
creg c[2];
h q[0];
cx q[0],q[1];
measure q -> c;
"""


def _run(circ):
    return apply_circuit(DenseState.basis(circ.n_qubits), circ).to_dense()


@pytest.mark.parametrize("text,value", [("pi", math.pi), ("-pi/4", -math.pi / 4), ("2*pi - 0.5", 2 * math.pi - 0.5),
                                        ("1e-3", 1e-3), ("(1+2)*3", 9.0)])
def test_eval_angle(text, value):
    assert eval_angle(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("text", ["__import__('os')", "pi.real", "x", "2 ** (", ""])
def test_eval_angle_rejects(text):
    with pytest.raises(ValueError):
        eval_angle(text)


def test_bell_from_both_formats():
    ref = np.array([1, 0, 0, 1]) / math.sqrt(2)
    np.testing.assert_allclose(_run(parse_gate_list(BELL)), ref, atol=1e-15)
    np.testing.assert_allclose(_run(parse_qasm(BELL_QASM)), ref, atol=1e-15)


def test_empty_circuit_is_all_zeros():
    st = apply_circuit(SparseState.basis(3), parse_gate_list("qubits 3\n# nothing\n"))
    assert dump_state(st) == "0\t1\t0\n"


def test_unsupported_gates_are_listed():
    with pytest.raises(ValueError, match="ccx, swap"):
        parse_gate_list("qubits 3\nswap 0 1\nh 0\nccx 0 1 2\nswap 1 2\n")
    with pytest.raises(ValueError, match="cz"):
        parse_qasm("OPENQASM 2.0;\nqreg q[2];\ncz q[0],q[1];\n")


@pytest.mark.parametrize("text", ["h 0\n", "qubits 2\nh 2\n", "qubits 2\ncx 0 0\n", "qubits 2\nrz 0\n",
                                  "qubits 2\npauli(0.1) XYZ\n"])
def test_malformed_gate_lists(text):
    with pytest.raises(ValueError):
        parse_gate_list(text)


def test_qasm_registers_are_consecutive():
    text = "OPENQASM 2.0;\nqreg a[1];\nqreg b[2];\nx b[1];\n"
    circ = parse_qasm(text)
    assert circ.n_qubits == 3
    assert np.flatnonzero(_run(circ))[0] == 0b100


def test_qasm_parameters_and_u_gates():
    text = "OPENQASM 2.0;\nqreg q[1];\nu3(pi/2, 0, pi) q[0];\n"
    np.testing.assert_allclose(_run(parse_qasm(text)), np.array([1, 1]) / math.sqrt(2), atol=1e-15)
    rz = _run(parse_qasm("OPENQASM 2.0;\nqreg q[1];\nh q[0];\nrz(pi/2) q[0];\n"))
    assert abs(rz[1] / rz[0] - 1j) < 1e-15


def test_pauli_rotation_line():
    # exp(-i pi/2 X) on qubit 0 (leftmost letter) flips it
    v = _run(parse_gate_list("qubits 2\npauli(pi) XI\n"))
    assert abs(abs(v[0b01]) - 1) < 1e-15


def test_format_roundtrip():
    text = "qubits 3\nh 0\ncx 0 2\nrz(0.25) 1\nu3(0.1, 0.2, 0.3) 2\npauli(0.4) XIZ\nt 1\n"
    circ = parse_gate_list(text)
    again = parse_gate_list(format_gate_list(circ))
    np.testing.assert_array_equal(_run(again), _run(circ))


def test_load_circuit_detects_format(tmp_path):
    (tmp_path / "b.qasm").write_text(BELL_QASM)
    (tmp_path / "b.txt").write_text(BELL)
    a, b = _run(load_circuit(str(tmp_path / "b.qasm"))), _run(load_circuit(str(tmp_path / "b.txt")))
    np.testing.assert_array_equal(a, b)


def test_state_dump_roundtrip(rng):
    st = apply_circuit(SparseState.basis(5), random_circuit(5, 40, 3))
    back = load_state_dump(dump_state(st), 5)
    np.testing.assert_array_equal(back.to_dense(), st.to_dense())


def test_fourteen_qubit_random_circuit_dense_vs_mps():
    circ = random_circuit(14, 500, 11)
    dense = apply_circuit(DenseState.basis(14), circ)
    m = mps.apply_circuit(mps.MpsState.basis(14, 0, cutoff=0.0), circ)
    assert fidelity(dense, DenseState(14, m.to_dense())) >= 1 - 1e-10
