"""Shared generators and independent oracles for the test suite."""

import itertools

import numpy as np

from ringsim.circuits import Apply, Circuit, Prep
from ringsim.compiler import predicate_from_table
from ringsim.gates import Gate, standard_gate
from ringsim.states import ModalState, from_terms, in_space


def bits(i, n):
    return format(i, f"0{n}b") if n else ""


def naive_apply(state, gate, wires):
    """Build the full 2^n x 2^n matrix entry by entry and multiply."""
    ring = state.ring
    n = state.n
    m = np.asarray(gate.matrix, dtype=object)
    h = len(wires)
    full = np.zeros((2**n, 2**n, ring.e), dtype=object)
    for col in range(2**n):
        xs = bits(col, n)
        sub_in = int("".join(xs[w - 1] for w in wires), 2)
        for r in range(2**h):
            val = m[r, sub_in]
            if not any(val):
                continue
            ys = list(xs)
            rb = bits(r, h)
            for w, ch in zip(wires, rb):
                ys[w - 1] = ch
            full[int("".join(ys), 2), col] = val
    amps = np.asarray(state.amps, dtype=object)
    out = np.zeros((2**n, ring.e), dtype=object)
    for i in range(2**n):
        for j in range(2**n):
            if any(full[i, j]) and any(amps[j]):
                out[i] = (out[i] + ring.mul(full[i, j], amps[j])) % ring.k
    return ModalState(ring, n, out)


def random_matrix(ring, h, rng):
    d = 2**h
    return rng.integers(0, ring.k, size=(d, d, ring.e))


def random_invertible_gate(ring, h, rng):
    while True:
        g = Gate(ring, random_matrix(ring, h, rng))
        if g.classification.invertible:
            return g


def random_affine_gate(ring, h, rng, invertible=False):
    while True:
        m = random_matrix(ring, h, rng)
        m[-1] = 0
        m[-1, :, 0] = 1
        m[-1] = (m[-1] - m[:-1].sum(axis=0)) % ring.k
        g = Gate(ring, m)
        if g.classification.affine and (not invertible or g.classification.invertible):
            return g


_UNITARY_NAMES = ["NOT", "CNOT", "SWAP", "TOFFOLI", "K", "KT", "CK", "CKT"]


def random_unitary_gate(ring, h, rng, depth=4):
    """A product of random permutation and branching gates on h <= 4 bits."""
    c = Circuit(ring, h)
    for _ in range(depth):
        choices = [nm for nm in _UNITARY_NAMES if standard_gate(ring, nm).in_arity <= h]
        g = standard_gate(ring, choices[rng.integers(len(choices))])
        wires = rng.permutation(h)[: g.in_arity] + 1
        c.apply(g, *[int(w) for w in wires])
    from ringsim.circuits import run

    cols = [np.asarray(run(c, bits(i, h)).amps) for i in range(2**h)]
    return Gate(ring, np.stack(cols, axis=1), "random-unitary")


def random_state(ring, n, rng, space="any"):
    """Random state; for a named space, resample until it belongs.

    l1 and l2 states are produced by solving for the last one or two
    amplitudes by exhaustive search over the ring.
    """
    while True:
        amps = rng.integers(0, ring.k, size=(2**n, ring.e))
        if space == "l1" and 2**n >= 1:
            amps[-1] = 0
            s = amps.sum(axis=0) % ring.k
            amps[-1] = (-s) % ring.k
            amps[-1, 0] = (amps[-1, 0] + 1) % ring.k
        elif space == "l2" and ring.e == 1 and 2**n >= 2:
            amps[-2:] = 0
            s = int((amps[:, 0] ** 2).sum() % ring.k)
            want = (1 - s) % ring.k
            sols = [(a, b) for a in range(ring.k) for b in range(ring.k) if (a * a + b * b) % ring.k == want]
            if not sols:
                continue
            a, b = sols[rng.integers(len(sols))]
            amps[-2, 0], amps[-1, 0] = a, b
        st = ModalState(ring, n, amps)
        if space == "any" or in_space(st, space):
            return st


def random_small_circuit(ring, n_inputs, rng, max_gates=4, max_width=4, square_only=False):
    """Random circuit of preps, built-ins and random 1-2 bit matrices."""
    ops = []
    width = n_inputs
    for _ in range(rng.integers(1, max_gates + 1)):
        if width < max_width and rng.random() < 0.3:
            ops.append(Prep())
            width += 1
            continue
        kind = rng.random()
        if kind < 0.4:
            names = ["NOT", "CNOT", "SWAP", "TOFFOLI", "K"]
            if not square_only:
                names += ["AND", "FANOUT", "ERASE"]
            if ring.k % 2:
                names.append("UNIF")
            g = standard_gate(ring, names[rng.integers(len(names))])
        else:
            h = int(rng.integers(1, 3))
            g = Gate(ring, random_matrix(ring, h, rng))
        if g.in_arity > width or width - g.in_arity + g.out_arity > max_width or width - g.in_arity + g.out_arity < 1:
            continue
        wires = [int(w) + 1 for w in rng.permutation(width)[: g.in_arity]]
        ops.append(Apply(g, tuple(wires)))
        width = width - g.in_arity + g.out_arity
    return Circuit(ring, n_inputs, ops)


def allowed_counts(k, B):
    return [c for c in range(2**B + 1) if c % k in (0, 1)]


def promise_predicate(k, n, B, m, rng):
    """Random predicate with |A_x| mod k in {0, 1} for every x."""
    accept = set()
    for xs in itertools.product("01", repeat=n):
        x = "".join(xs)
        options = allowed_counts(k, B)
        c = options[rng.integers(len(options))]
        chosen = rng.choice(2**B, size=c, replace=False)
        for b in chosen:
            accept.add((x, bits(int(b), B)))
    return predicate_from_table(n, B, m, accept)


def any_predicate(n, B, m, rng, counts=None):
    """Random predicate; ``counts`` optionally fixes |A_x| per input."""
    accept = set()
    for i, xs in enumerate(itertools.product("01", repeat=n)):
        x = "".join(xs)
        c = counts[i] if counts is not None else int(rng.integers(0, 2**B + 1))
        for b in rng.choice(2**B, size=c, replace=False):
            accept.add((x, bits(int(b), B)))
    return predicate_from_table(n, B, m, accept)


def state_of(ring, n, terms):
    return from_terms(ring, n, terms)


SAMPLE_EXPR = "(x1&x2)|(x3&x2)"


def sample_circuit(ring):
    """Circuit for (x1&x2)|(x3&x2): three inputs, four prepared work wires."""
    from ringsim.compiler import formula_to_reversible, parse_expression

    R = formula_to_reversible(parse_expression(SAMPLE_EXPR), "gates", 3)
    ops = [Prep()] * R.m + list(R.circuit(ring).ops)
    return Circuit(ring, 3, ops)
