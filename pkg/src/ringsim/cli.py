"""Command-line front end: ``ringsim <command> ...``."""

from __future__ import annotations

import argparse
import sys

from . import circuits, compiler, gates, oracle, states
from .errors import RingSimError
from .ring import make_cyclic

HEADER = "# ringsim-report v1"

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_VERIFY = 3


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, text: str, report: list[str]) -> None:
    if path is None or path == "-":
        report.append(text.rstrip("\n"))
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        report.append(f"wrote: {path}")


def cmd_run(args, out):
    c = circuits.parse_circuit(_read(args.circuit))
    if len(args.input) != c.n_inputs or any(ch not in "01" for ch in args.input):
        raise ValueError(f"--input must be {c.n_inputs} bits")
    state = circuits.run(c, args.input)
    space = args.space or circuits.default_space(c)
    verdict = circuits.decide_state(state, c.out_wire, space)
    out.append(f"space: {space}")
    out.append(f"output wire: {c.out_wire}")
    out.append(f"decision: {verdict}")
    if args.show_state:
        out.append(states.serialize_state(state).rstrip("\n"))
    return EXIT_OK if verdict == circuits.Decision.ONE else EXIT_NEGATIVE


def cmd_verify_gate(args, out):
    g = gates.parse_gate(_read(args.gate))
    cls = g.classification
    out.append(f"ring: {g.ring}")
    out.append(f"arity: {g.in_arity}" if g.is_square else f"arity: {g.out_arity} <- {g.in_arity}")
    out.append(cls.summary())
    if cls.s2_thresholds:
        for p, r, t in cls.s2_thresholds:
            out.append(f"s2 threshold mod {p}^{r}: {t}")
    failed = [req for req in args.require or [] if not getattr(cls, req)]
    for req in failed:
        out.append(f"required property failed: {req}")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_k_gate(args, out):
    if args.k < 2:
        raise ValueError("k must be at least 2")
    g, squares, ok = gates.k_gate_report(args.k)
    out.append(f"k: {args.k}")
    out.append("four squares: (" + ",".join(str(v) for v in squares) + ")")
    out.append(f"K^T K = I mod {args.k}: {'pass' if ok else 'fail'}")
    _write(args.out, gates.serialize_gate(g), out)
    return EXIT_OK if ok else EXIT_VERIFY


def _load_predicate(args) -> compiler.ReversiblePredicate:
    given = [x for x in (args.cnf, args.expr, args.predicate) if x is not None]
    if len(given) != 1:
        raise ValueError("give exactly one of --cnf, --expr, --predicate")
    if args.cnf is not None:
        phi = compiler.parse_dimacs(_read(args.cnf))
        return compiler.formula_to_reversible(phi, args.style or "clauses")
    if args.expr is not None:
        e = compiler.parse_expression(args.expr)
        return compiler.formula_to_reversible(e, args.style or "gates")
    c = circuits.parse_circuit(_read(args.predicate))
    return compiler.ReversiblePredicate.from_circuit(c)


def cmd_compile(args, out):
    if args.mode == "uncompute":
        if args.circuit is None:
            raise ValueError("--mode uncompute needs --circuit")
        c = compiler.uncompute_wrap(circuits.parse_circuit(_read(args.circuit)))
        out.append("mode: uncompute")
    else:
        if args.k is None:
            raise ValueError(f"--mode {args.mode} needs --k")
        ring = make_cyclic(args.k)
        R = _load_predicate(args)
        out.append(f"mode: {args.mode}")
        out.append(f"registers: n={R.n} B={R.B} m={R.m}")
        if args.mode == "unitary":
            c = compiler.build_unitary_modkp(R, ring)
            layout = compiler.UnitaryLayout(R.n, R.B, R.m)
            out.append(f"register width: {layout.width}")
            out.append(compiler.register_map_text(layout))
        else:
            c = compiler.build_affine_modkp(R, ring)
    if args.lower:
        c = compiler.lower_to_small_gates(c)
    out.append(f"total width: {c.max_width}")
    cost = c.cost()
    out.append(f"gates: {cost['gates']}")
    out.append(f"output wire: {c.out_wire}")
    _write(args.out, circuits.serialize_circuit(c), out)
    return EXIT_OK


def cmd_unique_sat(args, out):
    phi = compiler.parse_dimacs(_read(args.cnf))
    res = oracle.unique_sat(phi, args.style)
    out.append(f"variables: {phi.n_vars}")
    out.append(f"synthesis: {res.style}")
    out.append(f"width: {res.width}")
    out.append(f"circuit: {res.circuit}, referee: {res.referee}")
    if not res.promise_ok:
        out.append(
            f"PromiseViolated: {res.referee} models; the Z_2 circuit sees "
            f"{res.referee} mod 2 = {res.referee % 2}"
        )
        return EXIT_NEGATIVE
    if not res.agree:
        out.append("disagreement between circuit and referee")
        return EXIT_VERIFY
    return EXIT_OK if res.circuit == "One" else EXIT_NEGATIVE


def cmd_check_state(args, out):
    psi = states.parse_state(_read(args.state))
    mem = states.state_space_membership(psi)

    def yn(b):
        return "yes" if b else "no"

    out.append(f"ring: {psi.ring}")
    out.append(f"bits: {psi.n}")
    out.append(f"generic: {yn(mem.generic)}")
    out.append(f"l1: {yn(mem.l1)}")
    out.append(f"l2: {yn(mem.l2)}")
    for space in states.SPACES:
        vals = []
        for pos in range(1, psi.n + 1):
            v = states.necessary_value(psi, pos, space)
            vals.append(v if v is not None else "?")
        out.append(f"necessary ({space}): {''.join(vals) or '-'}")
    return EXIT_OK


def cmd_count(args, out):
    R = _load_predicate(args)
    rep = oracle.count_accepting(R, args.input, args.k)
    out.append(rep.text())
    if args.k is not None:
        out.append(f"upk: {oracle.upk_from_count(rep.accepting, args.k)}")
    out.append("record: " + rep.record())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ringsim", description="Exact modal circuit simulation over Z_k and Galois rings.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a circuit file on a basis input")
    r.add_argument("circuit")
    r.add_argument("--input", required=True, help="input bit string")
    r.add_argument("--show-state", action="store_true")
    r.add_argument("--space", choices=states.SPACES)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify-gate", help="classify a gate file")
    v.add_argument("gate")
    v.add_argument("--require", action="append", choices=["invertible", "affine", "unitary"])
    v.set_defaults(func=cmd_verify_gate)

    k = sub.add_parser("k-gate", help="emit and check the branching gate K over Z_k")
    k.add_argument("--k", type=int, required=True)
    k.add_argument("--out")
    k.set_defaults(func=cmd_k_gate)

    def predicate_args(sp):
        sp.add_argument("--cnf", help="DIMACS CNF file")
        sp.add_argument("--expr", help="boolean expression such as '(x1&x2)|x3'")
        sp.add_argument("--predicate", help="circuit file with a 'registers n B m' line")
        sp.add_argument("--style", choices=["clauses", "gates", "minterms"])

    c = sub.add_parser("compile", help="build a counting or uncompute circuit")
    c.add_argument("--mode", choices=["unitary", "affine", "uncompute"], required=True)
    c.add_argument("--k", type=int)
    c.add_argument("--circuit", help="input circuit for --mode uncompute")
    predicate_args(c)
    c.add_argument("--lower", action="store_true", help="replace wide Λ^ℓX by Toffoli ladders")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compile)

    u = sub.add_parser("unique-sat", help="decide a CNF with the Z_2 unitary circuit")
    u.add_argument("--cnf", required=True)
    u.add_argument("--style", choices=["clauses", "gates", "minterms"])
    u.set_defaults(func=cmd_unique_sat)

    s = sub.add_parser("check-state", help="state-space membership of a state file")
    s.add_argument("state")
    s.set_defaults(func=cmd_check_state)

    n = sub.add_parser("count", help="brute-force accepting-branch count")
    predicate_args(n)
    n.add_argument("--input", default="", help="input bit string x")
    n.add_argument("--k", type=int)
    n.set_defaults(func=cmd_count)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = [HEADER, f"command: {args.command}"]
    try:
        code = args.func(args, out)
    except (RingSimError, ValueError, OSError) as exc:
        print(f"ringsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print("\n".join(out))
    return code


if __name__ == "__main__":
    sys.exit(main())
