"""Circuit file parsers: the native gate-list format and an OpenQASM 2 subset.

Gate-list format, one instruction per line (``#`` starts a comment)::

    qubits 3
    h 0
    cx 0 1
    rz(0.25) 2
    u3(0.1, 0.2, 0.3) 1
    pauli(0.4) XIZ        # exp(-i 0.4/2 P), qubit 0 is the leftmost letter

Angles may use ``pi`` and the operators ``+ - * /``.
"""
from __future__ import annotations

import ast
import math
import operator
import re

from .pauli import PauliString
from .statevector import Circuit, gate, pauli_rotation

ONE_QUBIT = {"id", "x", "y", "z", "h", "s", "sdg", "t", "tdg"}
PARAM_GATES = {"rx": 1, "ry": 1, "rz": 1, "u1": 1, "p": 1, "u2": 2, "u3": 3, "u": 3}
QASM_IGNORED = {"barrier", "measure", "creg", "include", "OPENQASM"}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def eval_angle(text):
    """Evaluate an arithmetic angle expression with ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"bad angle expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError:
        raise ValueError(f"bad angle expression {text!r}") from None


_INSTR = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^)]*)\))?\s*(.*)$")


def _split_params(text):
    return [] if text is None or not text.strip() else [eval_angle(p) for p in text.split(",")]


def _build(name, params, qubits, n, label=None):
    if name == "pauli":
        if len(params) != 1 or label is None:
            raise ValueError("pauli needs one angle and a label")
        if len(label) != n:
            raise ValueError(f"pauli label {label!r} does not have {n} letters")
        return pauli_rotation(PauliString.from_label(label), params[0])
    if name in ("cx", "cnot"):
        if len(qubits) != 2 or params:
            raise ValueError("cx takes two qubits and no parameters")
        return gate("cx", *qubits)
    if name in ONE_QUBIT:
        if len(qubits) != 1 or params:
            raise ValueError(f"{name} takes one qubit and no parameters")
        return gate(name, qubits[0])
    if name in PARAM_GATES:
        if len(params) != PARAM_GATES[name] or len(qubits) != 1:
            raise ValueError(f"{name} takes one qubit and {PARAM_GATES[name]} parameter(s)")
        return gate(name, qubits[0], params=params)
    raise KeyError(name)


def parse_gate_list(text):
    """Parse the native gate-list format into a :class:`Circuit`."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].lower().startswith("qubits"):
        raise ValueError("gate list must start with 'qubits N'")
    n = int(lines[0].split()[1])
    circ = Circuit(n)
    unsupported = []
    for ln in lines[1:]:
        m = _INSTR.match(ln)
        if not m:
            raise ValueError(f"cannot parse line {ln!r}")
        name, ptxt, rest = m.group(1).lower(), m.group(2), m.group(3).split()
        params = _split_params(ptxt)
        try:
            if name == "pauli":
                op = _build(name, params, [], n, rest[0] if rest else None)
            else:
                op = _build(name, params, [int(q) for q in rest], n)
        except KeyError:
            unsupported.append(name)
            continue
        circ.append(op)
    if unsupported:
        raise ValueError("unsupported gates: " + ", ".join(sorted(set(unsupported))))
    return circ


_QARG = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\[(\d+)\]")


def parse_qasm(text):
    """Parse an OpenQASM 2 subset: ``qreg``, one-qubit u/rotation gates, ``cx``.

    ``measure``, ``barrier`` and ``creg`` are ignored.  Several quantum
    registers are laid out consecutively in declaration order.
    """
    text = re.sub(r"//[^\n]*", "", text)
    stmts = [s.strip() for s in text.split(";") if s.strip()]
    offsets, n = {}, 0
    body = []
    for s in stmts:
        head = s.split()[0]
        if head == "qreg":
            m = _QARG.search(s)
            if not m:
                raise ValueError(f"bad qreg {s!r}")
            offsets[m.group(1)] = n
            n += int(m.group(2))
        elif head in QASM_IGNORED or head.startswith("OPENQASM"):
            continue
        else:
            body.append(s)
    if n == 0:
        raise ValueError("no quantum register declared")
    circ = Circuit(n)
    unsupported = []
    for s in body:
        m = _INSTR.match(s)
        if not m:
            raise ValueError(f"cannot parse statement {s!r}")
        name, ptxt, rest = m.group(1).lower(), m.group(2), m.group(3)
        qubits = []
        for reg, idx in _QARG.findall(rest):
            if reg not in offsets:
                raise ValueError(f"unknown register {reg!r}")
            qubits.append(offsets[reg] + int(idx))
        try:
            circ.append(_build(name, _split_params(ptxt), qubits, n))
        except KeyError:
            unsupported.append(name)
    if unsupported:
        raise ValueError("unsupported gates: " + ", ".join(sorted(set(unsupported))))
    return circ


def load_circuit(path):
    """Read a circuit file, choosing the parser by content."""
    with open(path) as fh:
        text = fh.read()
    if re.search(r"^\s*OPENQASM", text, re.M) or path.endswith(".qasm"):
        return parse_qasm(text)
    return parse_gate_list(text)


def format_gate_list(circuit):
    """Inverse of :func:`parse_gate_list` for circuits of named gates."""
    out = [f"qubits {circuit.n_qubits}"]
    for op in circuit.ops:
        if op.kind == "cx":
            out.append(f"cx {op.controls[0]} {op.targets[0]}")
        elif op.kind == "rot":
            out.append(f"pauli({op.angle!r}) {op.pauli.label}")
        elif op.name in ONE_QUBIT:
            out.append(f"{op.name} {op.targets[0]}")
        elif op.name in PARAM_GATES:
            out.append(f"{op.name}({', '.join(repr(v) for v in op.params)}) {op.targets[0]}")
        else:
            raise ValueError(f"gate {op.name!r} has no text form")
    return "\n".join(out) + "\n"
