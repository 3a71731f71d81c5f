"""Circuit constructions.

* boolean formulas to reversible predicates
* the uncompute wrapper C^-1 . CNOT . C
* the affine circuit counting accepting branches modulo k
* the unitary counting circuit (K-gate branching, summation, reversal)
* lowering of wide Λ^ℓX gates to Toffoli ladders
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Apply, Circuit, Prep, normalize_preps
from .errors import (
    CannotLower,
    NonInvertibleGate,
    NotInvertible,
    ParseError,
    UnsupportedModulus,
    WidthError,
)
from .gates import controlled, display_name, inverse, standard_gate
from .ring import Ring, make_cyclic

# ---------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Const:
    value: bool


def expr_vars(e) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Not):
        return expr_vars(e.arg)
    return expr_vars(e.left) | expr_vars(e.right)


def eval_expr(e, bits) -> np.ndarray:
    """Evaluate on a (rows, n) boolean array of assignments, vars 1-indexed."""
    if isinstance(e, Var):
        return bits[:, e.index - 1]
    if isinstance(e, Const):
        return np.full(bits.shape[0], e.value)
    if isinstance(e, Not):
        return ~eval_expr(e.arg, bits)
    if isinstance(e, And):
        return eval_expr(e.left, bits) & eval_expr(e.right, bits)
    return eval_expr(e.left, bits) | eval_expr(e.right, bits)


_TOKEN = re.compile(r"\s*(?:(x\d+)|(\d+)|(.))")


def parse_expression(text: str):
    """Parse e.g. ``(x1&x2)|(x3&x2)``; ``~`` or ``!`` negates, ``0``/``1``
    are constants.  ``&`` binds tighter than ``|``."""
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        var, num, sym = m.groups()
        col = m.start(m.lastindex) + 1
        if var:
            tokens.append(("var", int(var[1:]), col))
        elif num:
            if num not in ("0", "1"):
                raise ParseError(f"bad constant {num!r}", 1, col)
            tokens.append(("const", num == "1", col))
        elif sym in "&|~!()":
            tokens.append((sym, None, col))
        else:
            raise ParseError(f"unexpected character {sym!r}", 1, col)
        pos = m.end()
    tokens.append(("end", None, len(text) + 1))
    i = 0

    def peek():
        return tokens[i][0]

    def take(kind):
        nonlocal i
        tok = tokens[i]
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}", 1, tok[2])
        i += 1
        return tok

    def parse_or():
        node = parse_and()
        while peek() == "|":
            take("|")
            node = Or(node, parse_and())
        return node

    def parse_and():
        node = parse_unary()
        while peek() == "&":
            take("&")
            node = And(node, parse_unary())
        return node

    def parse_unary():
        nonlocal i
        kind, val, col = tokens[i]
        if kind in ("~", "!"):
            i += 1
            return Not(parse_unary())
        if kind == "(":
            i += 1
            node = parse_or()
            take(")")
            return node
        if kind == "var":
            i += 1
            if val < 1:
                raise ParseError("variables are numbered from 1", 1, col)
            return Var(val)
        if kind == "const":
            i += 1
            return Const(val)
        raise ParseError("expected a variable, constant or '('", 1, col)

    node = parse_or()
    take("end")
    return node


@dataclass(frozen=True)
class BooleanFormula:
    """A CNF over variables 1..n_vars; clauses hold signed literals."""

    n_vars: int
    clauses: tuple = ()

    def __post_init__(self):
        cl = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for c in cl:
            for l in c:
                if l == 0 or abs(l) > self.n_vars:
                    raise ValueError(f"literal {l} outside 1..{self.n_vars}")
        object.__setattr__(self, "clauses", cl)

    def evaluate_all(self, bits: np.ndarray) -> np.ndarray:
        out = np.ones(bits.shape[0], dtype=bool)
        for c in self.clauses:
            sat = np.zeros(bits.shape[0], dtype=bool)
            for l in c:
                col = bits[:, abs(l) - 1]
                sat |= col if l > 0 else ~col
            out &= sat
        return out

    def to_expr(self):
        if not self.clauses:
            return Const(True)
        node = None
        for c in self.clauses:
            if not c:
                cl = Const(False)
            else:
                cl = None
                for l in c:
                    lit = Var(l) if l > 0 else Not(Var(-l))
                    cl = lit if cl is None else Or(cl, lit)
            node = cl if node is None else And(node, cl)
        return node

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n_vars} {len(self.clauses)}"]
        lines += [" ".join(str(l) for l in c) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> BooleanFormula:
    n_vars = None
    clauses = []
    current = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf" or not parts[2].isdigit():
                raise ParseError("expected 'p cnf <vars> <clauses>'", lineno, 1)
            n_vars = int(parts[2])
            continue
        if n_vars is None:
            raise ParseError("clause before the 'p cnf' line", lineno, 1)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno, raw.index(tok) + 1) from None
            if abs(lit) > n_vars:
                raise ParseError(f"literal {lit} outside 1..{n_vars}", lineno, raw.index(tok) + 1)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if n_vars is None:
        raise ParseError("missing 'p cnf' line")
    if current:
        clauses.append(tuple(current))
    return BooleanFormula(n_vars, tuple(clauses))


# ------------------------------------------------------------- predicates

_PERM_NAMES = re.compile(r"^(NOT|CNOT|TOFFOLI|CNX\d+|C*SWAP)$")


@lru_cache(maxsize=None)
def _pattern(name: str):
    """(number of controls, base kind) for a permutation gate name."""
    g = standard_gate(make_cyclic(2), name)
    if g.base_name not in ("NOT", "SWAP"):
        raise ValueError(f"{name} is not a reversible classical gate")
    return g.controls, g.base_name


@dataclass(frozen=True)
class ReversiblePredicate:
    """Classical reversible circuit on wires X(n), B(B), work(m).

    The last work wire carries f(x, b).  ``ops`` is a tuple of
    (gate name, wires) using NOT / CNOT / TOFFOLI / CNX<l> / SWAP family.
    """

    n: int
    B: int
    m: int
    ops: tuple = ()

    def __post_init__(self):
        ops = tuple((str(name), tuple(int(w) for w in ws)) for name, ws in self.ops)
        object.__setattr__(self, "ops", ops)
        if self.m < 1:
            raise WidthError("a predicate needs at least the output work bit")
        for name, ws in ops:
            c, _ = _pattern(name)
            need = c + (1 if _pattern(name)[1] == "NOT" else 2)
            if len(ws) != need or len(set(ws)) != len(ws):
                raise WidthError(f"bad wires {ws} for {name}")
            if any(not 1 <= w <= self.width for w in ws):
                raise WidthError(f"wires {ws} outside 1..{self.width}")

    @property
    def width(self) -> int:
        return self.n + self.B + self.m

    @property
    def output_wire(self) -> int:
        return self.width

    def circuit(self, ring: Ring) -> Circuit:
        ops = [Apply(standard_gate(ring, name), ws) for name, ws in self.ops]
        return Circuit(ring, self.width, ops, self.output_wire, (self.n, self.B, self.m))

    def evaluate(self, bits: np.ndarray) -> np.ndarray:
        """Run on a (rows, width) boolean array of basis inputs."""
        bits = np.array(bits, dtype=bool)
        for name, ws in self.ops:
            c, kind = _pattern(name)
            idx = [w - 1 for w in ws]
            mask = np.all(bits[:, idx[:c]], axis=1) if c else np.ones(bits.shape[0], bool)
            if kind == "NOT":
                bits[:, idx[c]] ^= mask
            else:
                a, b = idx[c], idx[c + 1]
                ta = bits[:, a].copy()
                bits[mask, a] = bits[mask, b]
                bits[mask, b] = ta[mask]
        return bits

    def branch_inputs(self, x: str) -> np.ndarray:
        """All rows |x, b, 0^m> for b in lexicographic order."""
        if len(x) != self.n:
            raise WidthError(f"predicate takes {self.n} input bits")
        rows = 2**self.B
        bits = np.zeros((rows, self.width), dtype=bool)
        for i, ch in enumerate(x):
            bits[:, i] = ch == "1"
        idx = np.arange(rows)
        for j in range(self.B):
            bits[:, self.n + j] = (idx >> (self.B - 1 - j)) & 1
        return bits

    def accept_mask(self, x: str) -> np.ndarray:
        return self.evaluate(self.branch_inputs(x))[:, -1]

    def restores_inputs(self, x: str) -> bool:
        start = self.branch_inputs(x)
        end = self.evaluate(start)
        k = self.n + self.B
        return bool(np.array_equal(start[:, :k], end[:, :k]))

    @classmethod
    def from_circuit(cls, c: Circuit) -> "ReversiblePredicate":
        if c.registers is None:
            raise ValueError("predicate circuits need a 'registers n B m' line")
        n, B, m = c.registers
        if c.n_preps or c.n_inputs != n + B + m:
            raise WidthError("predicate circuit must take exactly n + B + m input wires and no preps")
        if c.output_wire not in (None, n + B + m):
            raise WidthError("the predicate output is the last work wire")
        ops = []
        for op in c.ops:
            if not _PERM_NAMES.match(op.gate.name) or standard_gate(op.gate.ring, op.gate.name) != op.gate:
                raise ValueError(f"{op.gate.name} is not a reversible classical gate")
            ops.append((op.gate.name, op.wires))
        return cls(n, B, m, tuple(ops))


def _x_name(controls: int) -> str:
    return display_name("NOT", controls)


def _minterm_ops(controls: list[int], values: list[int], target: int) -> list:
    """Flip ``target`` when the control wires equal ``values``."""
    flips = [("NOT", (w,)) for w, v in zip(controls, values) if not v]
    return flips + [(_x_name(len(controls)), tuple(controls) + (target,))] + flips


def predicate_from_table(n: int, B: int, m: int, accept) -> ReversiblePredicate:
    """Truth-table synthesis: one Λ^(n+B)X per accepted (x, b).

    ``accept`` is a set of (x, b) bit-string pairs or a callable.  Work
    bits other than the output receive copies of branching bits, so the
    work register ends in a nontrivial w(x, b).
    """
    ops = []
    out = n + B + m
    for j in range(m - 1):
        if B:
            ops.append(("CNOT", (n + 1 + j % B, n + B + 1 + j)))
    for xs in itertools.product("01", repeat=n):
        x = "".join(xs)
        for bs in itertools.product("01", repeat=B):
            b = "".join(bs)
            ok = accept(x, b) if callable(accept) else (x, b) in accept
            if ok:
                vals = [int(c) for c in x + b]
                ops += _minterm_ops(list(range(1, n + B + 1)), vals, out)
    return ReversiblePredicate(n, B, m, tuple(ops))


def _synth_gates(expr, n_vars: int):
    """Literal AND/OR/FANOUT simulation with Toffoli gates, no cleanup."""
    leaves = []

    def collect(e):
        if isinstance(e, Var):
            leaves.append(e.index)
        elif isinstance(e, Not):
            collect(e.arg)
        elif isinstance(e, (And, Or)):
            collect(e.left)
            collect(e.right)

    collect(expr)
    ops = []
    next_wire = n_vars + 1
    seen = set()
    leaf_wires = []
    for v in leaves:
        if v in seen:
            ops.append(("CNOT", (v, next_wire)))
            leaf_wires.append(next_wire)
            next_wire += 1
        else:
            seen.add(v)
            leaf_wires.append(v)
    leaf_iter = iter(leaf_wires)

    def fresh():
        nonlocal next_wire
        w = next_wire
        next_wire += 1
        return w

    def build(e) -> int:
        if isinstance(e, Var):
            return next(leaf_iter)
        if isinstance(e, Const):
            w = fresh()
            if e.value:
                ops.append(("NOT", (w,)))
            return w
        if isinstance(e, Not):
            a = build(e.arg)
            w = fresh()
            ops.append(("CNOT", (a, w)))
            ops.append(("NOT", (w,)))
            return w
        a = build(e.left)
        b = build(e.right)
        w = fresh()
        if isinstance(e, And):
            ops.append(("TOFFOLI", (a, b, w)))
        else:
            ops.extend([("NOT", (a,)), ("NOT", (b,)), ("TOFFOLI", (a, b, w)),
                        ("NOT", (w,)), ("NOT", (b,)), ("NOT", (a,))])
        return w

    root = build(expr)
    if root <= n_vars or root != next_wire - 1:
        # the output must be a fresh final wire
        w = fresh()
        ops.append(("CNOT", (root, w)))
    m = next_wire - 1 - n_vars
    return ReversiblePredicate(0, n_vars, m, tuple(ops))


def _synth_clauses(phi: BooleanFormula):
    """One clean ancilla per multi-literal clause, uncomputed at the end."""
    v = phi.n_vars
    singles = {}
    multi = []
    unsat = False
    for c in phi.clauses:
        lits = sorted(set(c), key=lambda l: (abs(l), l))
        if not lits:
            unsat = True
            continue
        if any(-l in lits for l in lits):
            continue  # tautology
        if len(lits) == 1:
            var, pol = abs(lits[0]), lits[0] > 0
            if singles.get(var, pol) != pol:
                unsat = True
            singles[var] = pol
        else:
            multi.append(lits)
    out = v + len(multi) + 1
    if unsat:
        return ReversiblePredicate(0, v, len(multi) + 1, ())
    compute = []
    for j, lits in enumerate(multi):
        w = v + 1 + j
        flips = [("NOT", (l,)) for l in lits if l > 0]
        ctrl = tuple(abs(l) for l in lits)
        # clause = NOT(AND of negated literals)
        compute += flips + [(_x_name(len(ctrl)), ctrl + (w,)), ("NOT", (w,))] + flips
    final_ctrl = sorted(singles) + [v + 1 + j for j in range(len(multi))]
    flips = [("NOT", (var,)) for var in sorted(singles) if not singles[var]]
    final = flips + [(_x_name(len(final_ctrl)), tuple(final_ctrl) + (out,))] + flips
    ops = compute + final + compute[::-1]
    return ReversiblePredicate(0, v, len(multi) + 1, tuple(ops))


def _synth_minterms(phi, n_vars: int):
    bits = _all_assignments(n_vars)
    sat = phi.evaluate_all(bits) if isinstance(phi, BooleanFormula) else eval_expr(phi, bits)
    accepted = {("", "".join("1" if v else "0" for v in row)) for row, s in zip(bits, sat) if s}
    return predicate_from_table(0, n_vars, 1, accepted)


def _all_assignments(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return np.array([(idx >> (n - 1 - j)) & 1 for j in range(n)], dtype=bool).T.reshape(2**n, n)


def formula_to_reversible(phi, style: str = "clauses", n_vars: int | None = None) -> ReversiblePredicate:
    """Compile a CNF (or an expression tree) into a predicate with B = #vars.

    styles:
      ``clauses``  one clean ancilla per multi-literal clause (CNF only)
      ``gates``    literal FANOUT / AND / OR simulation by Toffoli gates
      ``minterms`` truth-table synthesis with a single work bit
    """
    if isinstance(phi, BooleanFormula):
        n = phi.n_vars
    else:
        n = n_vars if n_vars is not None else max(expr_vars(phi), default=0)
    if style == "clauses":
        if not isinstance(phi, BooleanFormula):
            raise ValueError("the clauses style needs a CNF formula")
        return _synth_clauses(phi)
    if style == "gates":
        expr = phi.to_expr() if isinstance(phi, BooleanFormula) else phi
        return _synth_gates(expr, n)
    if style == "minterms":
        return _synth_minterms(phi, n)
    raise ValueError(f"unknown synthesis style {style!r}")


# ---------------------------------------------------------- uncompute wrap


def uncompute_wrap(c: Circuit) -> Circuit:
    """(C^-1 tensor I) . CNOT(output -> fresh) . (C tensor I) with one more prep."""
    if not all(g.is_square for g in c.gates):
        raise NonInvertibleGate("uncompute needs invertible gates")
    c = normalize_preps(c)
    gates = [op for op in c.ops if isinstance(op, Apply)]
    try:
        inv = [Apply(inverse(op.gate), op.wires) for op in reversed(gates)]
    except NotInvertible as exc:
        raise NonInvertibleGate(str(exc)) from None
    for op in gates:
        if not op.gate.classification.invertible:
            raise NonInvertibleGate(f"{op.gate.name} is not invertible")
    fresh = c.n_inputs + c.n_preps + 1
    ops = [Prep()] * (c.n_preps + 1) + gates
    ops.append(Apply(standard_gate(c.ring, "CNOT"), (c.out_wire, fresh)))
    ops += inv
    return Circuit(c.ring, c.n_inputs, ops, fresh)


# ---------------------------------------------------------- affine counting


def _map_ops(R: ReversiblePredicate, ring: Ring, wire_map, extra_controls=()):
    out = []
    for name, ws in R.ops:
        g = standard_gate(ring, name)
        if extra_controls:
            g = controlled(g, len(extra_controls))
        out.append(Apply(g, tuple(extra_controls) + tuple(wire_map[w] for w in ws)))
    return out


def build_affine_modkp(R: ReversiblePredicate, ring: Ring) -> Circuit:
    """Affine circuit whose one-bit final state is (1-|A_x|)|0> + |A_x||1>.

    Layout: X(n), B(B), S(B), W(m), answer.  Each (b_i, s_i) pair is put
    in (k-1)|00> + |01> + |11>; the answer copies f only when every s_i is
    1; then every other wire is erased.
    """
    n, B, m = R.n, R.B, R.m
    width = n + 2 * B + m + 1
    b = [n + 1 + j for j in range(B)]
    s = [n + B + 1 + j for j in range(B)]
    work = [n + 2 * B + 1 + j for j in range(m)]
    answer = width
    wire_map = {}
    for i in range(n):
        wire_map[i + 1] = i + 1
    for j in range(B):
        wire_map[n + 1 + j] = b[j]
    for j in range(m):
        wire_map[n + B + 1 + j] = work[j]
    ops = [Prep()] * (2 * B + m + 1)
    rho = standard_gate(ring, "RHO")
    for j in range(B):
        ops.append(Apply(rho, (b[j], s[j])))
    ops += _map_ops(R, ring, wire_map)
    ctrl = tuple(s) + (work[-1],)
    ops.append(Apply(standard_gate(ring, _x_name(len(ctrl))), ctrl + (answer,)))
    erase = standard_gate(ring, "ERASE")
    for _ in range(width - 1):
        ops.append(Apply(erase, (1,)))
    return Circuit(ring, n, ops, 1)


# --------------------------------------------------------- unitary counting


@dataclass(frozen=True)
class UnitaryLayout:
    n: int
    B: int
    m: int

    def X(self, i):
        return i

    def Bw(self, j):
        return self.n + j

    def S(self, i):
        return self.n + self.B + i

    def W(self, j):
        return self.n + 3 * self.B + j

    @property
    def a_sim(self):
        return self.n + 3 * self.B + self.m

    @property
    def C(self):
        return self.a_sim + 1

    def Sp(self, i):
        return self.C + i

    @property
    def n_sp(self):
        return 2 * (self.B + self.m - 1)

    @property
    def Cp(self):
        return self.C + self.n_sp + 1

    @property
    def a(self):
        return self.Cp + 1

    @property
    def width(self):
        return self.n + 5 * self.B + 3 * self.m + 1

    def registers(self) -> list[tuple[str, list[int]]]:
        B, m = self.B, self.m
        return [
            ("X", [self.X(i) for i in range(1, self.n + 1)]),
            ("B", [self.Bw(j) for j in range(1, B + 1)]),
            ("S", [self.S(i) for i in range(1, 2 * B + 1)]),
            ("W", [self.W(j) for j in range(1, m)]),
            ("a'", [self.a_sim]),
            ("C", [self.C]),
            ("S'", [self.Sp(i) for i in range(1, self.n_sp + 1)]),
            ("C'", [self.Cp]),
            ("a", [self.a]),
        ]


def register_map_text(layout: UnitaryLayout) -> str:
    lines = []
    for name, ws in layout.registers():
        if not ws:
            span = "-"
        elif len(ws) == 1:
            span = str(ws[0])
        else:
            span = f"{ws[0]}-{ws[-1]}"
        lines.append(f"{name}: {span}")
    return "\n".join(lines)


def build_unitary_modkp(R: ReversiblePredicate, ring: Ring) -> Circuit:
    """Z_k-unitary circuit deciding [|A_x| = 1 mod k] under the promise
    |A_x| mod k in {0, 1}.  Wire layout is ``UnitaryLayout``."""
    if not (ring.is_cyclic and ring.is_prime_power):
        raise UnsupportedModulus(f"{ring} is not Z_(p^r)")
    n, B, m = R.n, R.B, R.m
    L = UnitaryLayout(n, B, m)
    g = lambda name: standard_gate(ring, name)  # noqa: E731
    NOT = g("NOT")
    ops = [Prep()] * (L.width - n)

    # steps 2 to 7, kept separately so step 9 can undo them
    mid = []
    for j in range(1, B + 1):
        mid.append(Apply(g("K"), (L.Bw(j), L.S(2 * j - 1), L.S(2 * j))))
    s_all = tuple(L.S(i) for i in range(1, 2 * B + 1))
    mid.append(Apply(g(_x_name(len(s_all))), s_all + (L.C,)))
    wire_map = {i: L.X(i) for i in range(1, n + 1)}
    for j in range(1, B + 1):
        wire_map[n + j] = L.Bw(j)
    for j in range(1, m):
        wire_map[n + B + j] = L.W(j)
    wire_map[n + B + m] = L.a_sim
    mid += _map_ops(R, ring, wire_map, extra_controls=(L.C,))
    for i in range(1, L.n_sp + 1):
        mid.append(Apply(NOT, (L.Sp(i),)))
    KT = g("KT")
    for j in range(1, B + 1):
        mid.append(Apply(KT, (L.Bw(j), L.Sp(2 * j - 1), L.Sp(2 * j))))
    for j in range(1, m):
        mid.append(Apply(KT, (L.W(j), L.Sp(2 * B + 2 * j - 1), L.Sp(2 * B + 2 * j))))
    flip7 = [L.Bw(j) for j in range(1, B + 1)] + [L.W(j) for j in range(1, m)]
    flip7 += [L.Sp(i) for i in range(1, L.n_sp + 1)]
    for w in flip7:
        mid.append(Apply(NOT, (w,)))
    ops += mid

    # step 8
    ops.append(Apply(NOT, (L.Cp,)))
    ctrl8 = tuple(flip7) + (L.a_sim,)
    ops.append(Apply(g(_x_name(len(ctrl8))), ctrl8 + (L.Cp,)))

    # step 9: undo steps 2-7 when C' is set
    for op in reversed(mid):
        ops.append(Apply(controlled(inverse(op.gate)), (L.Cp,) + op.wires))

    # step 10
    for w in range(n + 1, L.width + 1):
        if w != L.Cp:
            ops.append(Apply(NOT, (w,)))

    # step 11
    ctrl11 = tuple(range(n + 1, L.width))
    ops.append(Apply(g(_x_name(len(ctrl11))), ctrl11 + (L.a,)))
    return Circuit(ring, n, ops, L.a)


# ---------------------------------------------------------------- lowering


def lower_to_small_gates(c: Circuit, max_arity: int = 4) -> Circuit:
    """Replace each Λ^ℓX with ℓ >= 3 by a clean-ancilla Toffoli ladder.

    The ladder for ℓ controls uses ℓ - 2 ancillas and 2ℓ - 3 Toffolis.
    Ancillas form one pool prepared after the circuit's own wires.
    Any other gate wider than ``max_arity`` raises CannotLower.
    """
    c = normalize_preps(c)
    widths = c.widths
    n_front = 0
    for op in c.ops:
        if isinstance(op, Prep):
            n_front += 1
        else:
            break
    if n_front != c.n_preps or len(set(widths[n_front:])) != 1:
        raise CannotLower("lowering needs a circuit of square gates with preparations first")
    base_width = widths[-1]
    wide = [op for op in c.ops if isinstance(op, Apply) and op.gate.base_name == "NOT" and op.gate.controls >= 3]
    pool_size = max((op.gate.controls - 2 for op in wide), default=0)
    for op in c.ops:
        if isinstance(op, Apply) and op.gate.in_arity > max_arity:
            if not (op.gate.base_name == "NOT" and op.gate.controls >= 3):
                raise CannotLower(f"{op.gate.name} on {op.gate.in_arity} wires cannot be lowered")
    if not wide:
        return c
    pool = [base_width + 1 + i for i in range(pool_size)]
    tof = standard_gate(c.ring, "TOFFOLI")
    ops = [Prep()] * (c.n_preps + pool_size)
    for op in c.ops:
        if isinstance(op, Prep):
            continue
        g = op.gate
        if g.base_name == "NOT" and g.controls >= 3:
            ctrl = op.wires[:-1]
            target = op.wires[-1]
            ell = len(ctrl)
            up = [Apply(tof, (ctrl[0], ctrl[1], pool[0]))]
            for i in range(2, ell - 1):
                up.append(Apply(tof, (ctrl[i], pool[i - 2], pool[i - 1])))
            ops += up
            ops.append(Apply(tof, (ctrl[-1], pool[ell - 3], target)))
            ops += up[::-1]
        else:
            ops.append(op)
    return Circuit(c.ring, c.n_inputs, ops, c.out_wire, c.registers)
