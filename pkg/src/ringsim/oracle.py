"""Brute-force ground truth: branch counting, the UP_k promise, prime-k
amplification and model counting."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .compiler import BooleanFormula, ReversiblePredicate, _all_assignments, _x_name, eval_expr
from .errors import TooManyBranches, TooManyVariables, UnsupportedModulus
from .linalg import is_prime

MAX_BRANCH_BITS = 22
MAX_SAT_VARS = 22


@dataclass(frozen=True)
class CountReport:
    x: str
    total_branches: int
    accepting: int
    k: int | None = None

    @property
    def accepting_mod_k(self) -> int | None:
        return None if self.k is None else self.accepting % self.k

    def text(self) -> str:
        lines = [
            f"x: {self.x or '-'}",
            f"total_branches: {self.total_branches}",
            f"accepting: {self.accepting}",
        ]
        if self.k is not None:
            lines.append(f"accepting_mod_k: {self.accepting_mod_k}")
        return "\n".join(lines)

    def record(self) -> str:
        fields = f"x={self.x or '-'} total={self.total_branches} accepting={self.accepting}"
        if self.k is not None:
            fields += f" k={self.k} mod_k={self.accepting_mod_k}"
        return fields


def count_accepting(R: ReversiblePredicate, x: str, k: int | None = None,
                    max_branch_bits: int = MAX_BRANCH_BITS) -> CountReport:
    """Run R on |x, b, 0^m> for every b and count f(x, b) = 1."""
    if R.B > max_branch_bits:
        raise TooManyBranches(f"{R.B} branching bits exceeds the cap of {max_branch_bits}")
    accepting = int(R.accept_mask(x).sum())
    return CountReport(x, 2**R.B, accepting, k)


class UPkDecision(str, enum.Enum):
    ZERO = "Zero"
    ONE = "One"
    PROMISE_VIOLATED = "PromiseViolated"

    def __str__(self):
        return self.value


def upk_from_count(accepting: int, k: int) -> UPkDecision:
    r = accepting % k
    if r == 1 % k and r == 1:
        return UPkDecision.ONE
    if r == 0:
        return UPkDecision.ZERO
    return UPkDecision.PROMISE_VIOLATED


def upk_decide(R: ReversiblePredicate, x: str, k: int) -> UPkDecision:
    return upk_from_count(count_accepting(R, x).accepting, k)


def amplify_prime(R: ReversiblePredicate, k: int) -> ReversiblePredicate:
    """k - 1 disjoint copies of R on separate branching and work registers,
    with the final output set to the AND of the copies' outputs."""
    if not is_prime(k):
        raise UnsupportedModulus(f"{k} is not prime")
    n, B, m = R.n, R.B, R.m
    copies = k - 1
    B2 = copies * B
    m2 = copies * m + 1
    ops = []
    outs = []
    for i in range(copies):
        wire_map = {w: w for w in range(1, n + 1)}
        for j in range(1, B + 1):
            wire_map[n + j] = n + i * B + j
        for j in range(1, m + 1):
            wire_map[n + B + j] = n + B2 + i * m + j
        outs.append(wire_map[n + B + m])
        for name, ws in R.ops:
            ops.append((name, tuple(wire_map[w] for w in ws)))
    final = n + B2 + m2
    ops.append((_x_name(copies), tuple(outs) + (final,)))
    return ReversiblePredicate(n, B2, m2, tuple(ops))


def sat_count(phi, n_vars: int | None = None, max_vars: int = MAX_SAT_VARS) -> int:
    """Exhaustive model count of a CNF or an expression tree."""
    n = phi.n_vars if isinstance(phi, BooleanFormula) else n_vars
    if n is None:
        raise ValueError("n_vars is required for expressions")
    if n > max_vars:
        raise TooManyVariables(f"{n} variables exceeds the cap of {max_vars}")
    bits = _all_assignments(n)
    sat = phi.evaluate_all(bits) if isinstance(phi, BooleanFormula) else eval_expr(phi, bits)
    return int(np.count_nonzero(sat))


@dataclass(frozen=True)
class UniqueSatResult:
    circuit: str
    referee: int
    style: str
    width: int

    @property
    def promise_ok(self) -> bool:
        return self.referee in (0, 1)

    @property
    def agree(self) -> bool:
        want = "One" if self.referee == 1 else "Zero"
        return not self.promise_ok or self.circuit == want


def unique_sat(phi: BooleanFormula, style: str | None = None) -> UniqueSatResult:
    """Decide a CNF with the Z_2-unitary counting circuit, refereed by
    exhaustive model counting.  Without an explicit style the synthesis
    with fewer work bits is used (ties go to the clause encoding)."""
    from .circuits import decide
    from .compiler import build_unitary_modkp, formula_to_reversible
    from .ring import make_cyclic

    if style is None:
        a = formula_to_reversible(phi, "clauses")
        b = formula_to_reversible(phi, "minterms")
        R, style = (a, "clauses") if a.m <= b.m else (b, "minterms")
    else:
        R = formula_to_reversible(phi, style)
    ring = make_cyclic(2)
    c = build_unitary_modkp(R, ring)
    verdict = decide(c, "", "l2")
    return UniqueSatResult(str(verdict), sat_count(phi), style, c.final_width)
