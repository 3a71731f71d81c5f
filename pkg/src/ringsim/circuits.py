"""Circuits: ordered preparations and gate applications over numbered wires.

Wires are 1-indexed.  A preparation appends one wire in state |0> at the
end.  A non-square gate changes the width: its outputs take the places of
its first target wires, extra outputs are appended at the end, and surplus
input wires are removed (later wires shift down).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContainsPrep,
    NotInvertible,
    ParseError,
    RingMismatch,
    UnknownGate,
    UnsupportedRing,
    WidthError,
)
from .gates import (
    Gate,
    inverse,
    parse_matrix_rows,
    serialize_matrix_rows,
    standard_gate,
)
from .ring import Ring, parse_ring_header
from .states import MAX_BITS, ModalState, basis_state, check_width, necessary_value

# path counting uses unbounded Python ints, so keep it narrower
MAX_PATH_COUNT_BITS = 20


@dataclass(frozen=True)
class Prep:
    pass


@dataclass(frozen=True)
class Apply:
    gate: Gate
    wires: tuple

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))


class Decision(str, enum.Enum):
    ZERO = "Zero"
    ONE = "One"
    NOT_NECESSARY = "NotNecessary"

    def __str__(self):
        return self.value


def _width_after(width: int, op) -> int:
    if isinstance(op, Prep):
        return width + 1
    g = op.gate
    wires = op.wires
    if len(wires) != g.in_arity:
        raise WidthError(f"{g.name} takes {g.in_arity} wires, got {len(wires)}")
    if len(set(wires)) != len(wires):
        raise WidthError(f"repeated wire in {g.name} {list(wires)}")
    if any(not 1 <= w <= width for w in wires):
        raise WidthError(f"{g.name} wires {list(wires)} outside 1..{width}")
    return width - g.in_arity + g.out_arity


@dataclass
class Circuit:
    ring: Ring
    n_inputs: int
    ops: list = field(default_factory=list)
    output_wire: int | None = None
    registers: tuple | None = None

    def __post_init__(self):
        self.ops = list(self.ops)
        for op in self.ops:
            if isinstance(op, Apply) and op.gate.ring != self.ring:
                raise RingMismatch(f"gate {op.gate.name} is over {op.gate.ring}, circuit over {self.ring}")
        w = self.final_width
        if self.output_wire is not None and not 1 <= self.output_wire <= w:
            raise WidthError(f"output wire {self.output_wire} outside 1..{w}")

    @property
    def widths(self) -> list[int]:
        out = [self.n_inputs]
        for op in self.ops:
            out.append(_width_after(out[-1], op))
        return out

    @property
    def final_width(self) -> int:
        return self.widths[-1]

    @property
    def max_width(self) -> int:
        return max(self.widths)

    @property
    def out_wire(self) -> int:
        return self.output_wire if self.output_wire is not None else self.final_width

    @property
    def gates(self) -> list[Gate]:
        return [op.gate for op in self.ops if isinstance(op, Apply)]

    @property
    def n_preps(self) -> int:
        return sum(isinstance(op, Prep) for op in self.ops)

    def cost(self) -> dict:
        """Gate count and explicit matrix-entry count."""
        gates = self.gates
        return {
            "gates": len(gates),
            "entries": sum(g.base.shape[0] * g.base.shape[1] for g in gates),
        }

    def append(self, op) -> None:
        if isinstance(op, Apply) and op.gate.ring != self.ring:
            raise RingMismatch(f"gate {op.gate.name} is over {op.gate.ring}")
        self.ops.append(op)

    def apply(self, gate: Gate, *wires) -> None:
        if len(wires) == 1 and not isinstance(wires[0], int):
            wires = tuple(wires[0])
        self.append(Apply(gate, wires))

    def prep(self, count: int = 1) -> None:
        for _ in range(count):
            self.ops.append(Prep())


# kernel


def _apply_base(ring: Ring, base: np.ndarray, perm, block: np.ndarray, mod) -> np.ndarray:
    """Apply a base matrix to the leading axis of a (2^h_in, rest, e) block."""
    if perm is not None:
        out = np.empty_like(block)
        out[list(perm)] = block
        return out
    if ring.e == 1:
        m = base[..., 0]
        if block.dtype == object:
            m = m.astype(object)
        out = np.tensordot(m, block[..., 0], axes=(1, 0))[..., None]
    else:
        t = ring.mult_tensor
        if block.dtype == object:
            t = t.astype(object)
            base = base.astype(object)
        out = np.einsum("rce,csf,efl->rsl", base, block, t)
    return out % mod if mod else out


def _apply_tensor(ring: Ring, a: np.ndarray, n: int, gate: Gate, wires, mod):
    """Apply gate to an amplitude array of shape (2,)*n + (e,).

    Returns (new array, new width).  Square gates update ``a`` in place.
    """
    c = gate.controls
    ctrl = wires[:c]
    targets = list(wires[c:])
    h_in, h_out = gate.base_in, gate.base_out
    idx = [slice(None)] * n
    for w in ctrl:
        idx[w - 1] = 1
    sub = a[tuple(idx)] if c else a
    # axis numbers of the targets inside sub
    remaining = [w for w in range(1, n + 1) if w not in ctrl]
    t_axes = [remaining.index(w) for w in targets]
    moved = np.moveaxis(sub, t_axes, list(range(h_in)))
    rest_shape = moved.shape[h_in:-1]
    block = moved.reshape((2**h_in, -1, ring.e))
    out = _apply_base(ring, gate.base, gate.permutation, block, mod)
    if gate.is_square:
        out = out.reshape((2,) * h_in + rest_shape + (ring.e,))
        sub[...] = np.moveaxis(out, list(range(h_in)), t_axes)
        return a, n
    # width-changing gate; controls are impossible here
    out = out.reshape((2,) * h_out + rest_shape + (ring.e,))
    labels = [("o", i) for i in range(h_out)] + [("w", w) for w in remaining if w not in targets]
    order = []
    for w in range(1, n + 1):
        if w in targets:
            i = targets.index(w)
            if i < h_out:
                order.append(labels.index(("o", i)))
        else:
            order.append(labels.index(("w", w)))
    for i in range(h_in, h_out):
        order.append(labels.index(("o", i)))
    new_n = n - h_in + h_out
    out = np.transpose(out, order + [len(order)])
    return np.ascontiguousarray(out), new_n


def apply_gate_at(state: ModalState, gate: Gate, wires) -> ModalState:
    """The state after applying ``gate`` to the listed (1-indexed) wires."""
    if gate.ring != state.ring:
        raise RingMismatch(f"gate over {gate.ring}, state over {state.ring}")
    wires = tuple(int(w) for w in wires)
    new_n = _width_after(state.n, Apply(gate, wires))
    check_width(new_n)
    ring = state.ring
    a = np.array(state.amps).reshape((2,) * state.n + (ring.e,))
    a, n = _apply_tensor(ring, a, state.n, gate, wires, ring.k)
    return ModalState(ring, n, a.reshape(-1, ring.e))


def _append_zero(a: np.ndarray, n: int) -> np.ndarray:
    new = np.zeros(a.shape[:-1] + (2, a.shape[-1]), dtype=a.dtype)
    new[..., 0, :] = a
    return new


def _start(c: Circuit, x) -> ModalState:
    if isinstance(x, ModalState):
        if x.ring != c.ring:
            raise RingMismatch(f"input over {x.ring}, circuit over {c.ring}")
        state = x
    else:
        state = basis_state(c.ring, str(x))
    if state.n != c.n_inputs:
        raise WidthError(f"circuit takes {c.n_inputs} input bits, got {state.n}")
    return state


def run(c: Circuit, x, cap: int | None = None) -> ModalState:
    """Execute the circuit on a bit string or a state."""
    cap = MAX_BITS if cap is None else cap
    if c.max_width > cap:
        raise WidthError(f"circuit needs {c.max_width} bits, cap is {cap}")
    state = _start(c, x)
    ring = c.ring
    n = state.n
    a = np.array(state.amps).reshape((2,) * n + (ring.e,))
    for op in c.ops:
        if isinstance(op, Prep):
            a = _append_zero(a, n)
            n += 1
        else:
            a, n = _apply_tensor(ring, a, n, op.gate, op.wires, ring.k)
    return ModalState(ring, n, a.reshape(-1, ring.e), cap=cap)


def default_space(c: Circuit) -> str:
    cls = [g.classification for g in c.gates]
    if all(x.unitary for x in cls):
        return "l2"
    if all(x.invertible for x in cls):
        return "generic"
    if all(x.affine for x in cls):
        return "l1"
    return "generic"


def decide_state(state: ModalState, wire: int, space: str) -> Decision:
    v = necessary_value(state, wire, space)
    if v == "1":
        return Decision.ONE
    if v == "0":
        return Decision.ZERO
    return Decision.NOT_NECESSARY


def decide(c: Circuit, x, space: str | None = None) -> Decision:
    state = run(c, x)
    return decide_state(state, c.out_wire, space or default_space(c))


def circuit_inverse(c: Circuit) -> Circuit:
    """Reverse order with every gate inverted; the circuit must be prep-free."""
    if any(isinstance(op, Prep) for op in c.ops):
        raise ContainsPrep("cannot invert a circuit that prepares wires")
    ops = []
    for op in reversed(c.ops):
        if not op.gate.is_square:
            raise NotInvertible(f"{op.gate.name} is not square")
        ops.append(Apply(inverse(op.gate), op.wires))
    return Circuit(c.ring, c.final_width, ops, c.output_wire)


def normalize_preps(c: Circuit) -> Circuit:
    """Move every preparation to the front.

    Valid when all gates are square: a wire prepared late is untouched
    before its preparation, so preparing it first changes nothing.
    """
    if not all(g.is_square for g in c.gates):
        return c
    preps = [op for op in c.ops if isinstance(op, Prep)]
    rest = [op for op in c.ops if not isinstance(op, Prep)]
    return Circuit(c.ring, c.n_inputs, preps + rest, c.output_wire, c.registers)


# path counting


def path_counts(c: Circuit, x: str) -> np.ndarray:
    """Integer branch counts N(x, T, y) for every final string y.

    Every gate is lifted to its integer matrix with entries in [0, k) and
    the products are taken over the nonnegative integers.
    """
    ring = c.ring
    if ring.e != 1:
        raise UnsupportedRing("path counting is defined over Z_k")
    if c.max_width > MAX_PATH_COUNT_BITS:
        raise WidthError(f"path counting needs {c.max_width} bits, cap is {MAX_PATH_COUNT_BITS}")
    state = _start(c, x)
    n = state.n
    a = np.array(state.amps, dtype=object).reshape((2,) * n + (1,))
    for op in c.ops:
        if isinstance(op, Prep):
            a = _append_zero(a, n)
            n += 1
        else:
            a, n = _apply_tensor(ring, a, n, op.gate, op.wires, None)
    return a.reshape(-1)


def path_count(c: Circuit, x: str, y: str) -> int:
    counts = path_counts(c, x)
    if len(y) != c.final_width:
        raise WidthError(f"output string must have {c.final_width} bits")
    return int(counts[int(y, 2) if y else 0])


# text format


BUILTIN_NAMES = (
    "NOT", "CNOT", "TOFFOLI", "SWAP", "FANOUT", "AND", "OR", "ERASE",
    "UNIF", "K", "KT", "CK", "CKT", "RHO",
)


def _builtin_name(g: Gate) -> str | None:
    name = g.name
    try:
        if standard_gate(g.ring, name) == g:
            return name
    except (UnknownGate, ValueError):
        pass
    return None


def serialize_circuit(c: Circuit) -> str:
    lines = [c.ring.header(), f"inputs {c.n_inputs}"]
    if c.registers is not None:
        lines.append("registers " + " ".join(str(v) for v in c.registers))
    for op in c.ops:
        if isinstance(op, Prep):
            lines.append("prep")
            continue
        g = op.gate
        wires = " ".join(str(w) for w in op.wires)
        name = _builtin_name(g)
        if name is not None:
            lines.append(f"gate {name} {wires}")
            continue
        if g.is_square:
            lines.append(f"begin matrix {g.in_arity}")
        else:
            lines.append(f"begin matrix {g.out_arity} {g.in_arity}")
        lines.extend(serialize_matrix_rows(g))
        lines.append("end matrix")
        lines.append(f"at {wires}")
    if c.output_wire is not None:
        lines.append(f"output {c.output_wire}")
    return "\n".join(lines) + "\n"


def _ints(parts, lineno, raw, what):
    out = []
    for tok in parts:
        if not tok.isdigit():
            raise ParseError(f"bad {what} {tok!r}", lineno, raw.index(tok) + 1)
        out.append(int(tok))
    return out


def parse_circuit(text: str, normalize: bool = True) -> Circuit:
    ring = None
    n_inputs = None
    ops = []
    output = None
    registers = None
    width = None
    pending = None  # (gate, lineno) waiting for its 'at' line
    lines = text.splitlines()
    i = 0

    def wire_list(parts, lineno, raw, gate):
        ws = _ints(parts, lineno, raw, "wire")
        for tok, w in zip(parts, ws):
            if not 1 <= w <= width:
                raise ParseError(f"wire {w} outside 1..{width}", lineno, raw.index(tok) + 1)
        if len(ws) != gate.in_arity:
            raise ParseError(f"{gate.name} takes {gate.in_arity} wires, got {len(ws)}", lineno, 1)
        if len(set(ws)) != len(ws):
            raise ParseError("repeated wire", lineno, 1)
        return ws

    while i < len(lines):
        raw = lines[i]
        lineno = i + 1
        i += 1
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        word = parts[0]
        if ring is None:
            if word != "ring":
                raise ParseError("the first directive must be 'ring'", lineno, 1)
            ring = parse_ring_header(line, lineno)
            continue
        if pending is not None and word != "at":
            raise ParseError("expected 'at' after a matrix block", lineno, 1)
        if word == "ring":
            raise ParseError("duplicate ring directive", lineno, 1)
        if word == "inputs":
            if n_inputs is not None or len(parts) != 2:
                raise ParseError("expected a single 'inputs <n>'", lineno, 1)
            n_inputs = _ints(parts[1:], lineno, raw, "input count")[0]
            width = n_inputs
            continue
        if n_inputs is None:
            raise ParseError("'inputs' must precede operations", lineno, 1)
        if word == "registers":
            if len(parts) != 4:
                raise ParseError("expected 'registers <n> <B> <m>'", lineno, 1)
            registers = tuple(_ints(parts[1:], lineno, raw, "register size"))
        elif word == "prep":
            if len(parts) != 1:
                raise ParseError("'prep' takes no arguments", lineno, 6)
            ops.append(Prep())
            width += 1
        elif word == "gate":
            if len(parts) < 2:
                raise ParseError("expected 'gate <NAME> <wires>'", lineno, 1)
            try:
                g = standard_gate(ring, parts[1])
            except UnknownGate as exc:
                raise ParseError(str(exc), lineno, raw.index(parts[1]) + 1) from None
            except ValueError as exc:
                raise ParseError(str(exc), lineno, raw.index(parts[1]) + 1) from None
            ws = wire_list(parts[2:], lineno, raw, g)
            ops.append(Apply(g, ws))
            width = width - g.in_arity + g.out_arity
        elif word == "begin":
            if len(parts) not in (3, 4) or parts[1] != "matrix":
                raise ParseError("expected 'begin matrix <h>'", lineno, 1)
            dims = _ints(parts[2:], lineno, raw, "arity")
            h_out, h_in = dims[0], dims[-1]
            if max(h_in, h_out) > 12:
                raise ParseError("matrix too large", lineno, 14)
            rows = []
            while i < len(lines):
                r = lines[i].split("#", 1)[0].strip()
                i += 1
                if not r:
                    continue
                if r == "end matrix":
                    break
                rows.append((i, r))
            else:
                raise ParseError("missing 'end matrix'", lineno, 1)
            b = parse_matrix_rows(ring, rows, 2**h_out, 2**h_in)
            pending = (Gate(ring, b, "custom"), lineno)
        elif word == "at":
            if pending is None:
                raise ParseError("'at' without a matrix block", lineno, 1)
            g = pending[0]
            ws = wire_list(parts[1:], lineno, raw, g)
            ops.append(Apply(g, ws))
            width = width - g.in_arity + g.out_arity
            pending = None
        elif word == "output":
            if len(parts) != 2:
                raise ParseError("expected 'output <wire>'", lineno, 1)
            output = _ints(parts[1:], lineno, raw, "wire")[0]
            if output < 1:
                raise ParseError("wires are numbered from 1", lineno, raw.index(parts[1]) + 1)
        else:
            raise ParseError(f"unknown directive {word!r}", lineno, 1)
    if ring is None or n_inputs is None:
        raise ParseError("missing 'ring' or 'inputs' directive")
    if pending is not None:
        raise ParseError("matrix block without 'at'", pending[1], 1)
    if output is not None and not 1 <= output <= width:
        raise ParseError(f"output wire {output} outside 1..{width}")
    c = Circuit(ring, n_inputs, ops, output, registers)
    return normalize_preps(c) if normalize else c
