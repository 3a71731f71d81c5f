import itertools

import numpy as np
import pytest

from ringsim.circuits import (
    Apply,
    Circuit,
    Decision,
    Prep,
    apply_gate_at,
    circuit_inverse,
    decide,
    default_space,
    parse_circuit,
    path_count,
    path_counts,
    run,
    serialize_circuit,
)
from ringsim.errors import ContainsPrep, ParseError, RingMismatch, WidthError
from ringsim.gates import Gate, branching_gate_K, standard_gate
from ringsim.ring import make_cyclic, make_galois
from ringsim.states import basis_state, inner_product, norm, state_space_membership
from support import (
    bits,
    naive_apply,
    random_invertible_gate,
    random_matrix,
    random_small_circuit,
    random_state,
    random_unitary_gate,
    sample_circuit,
)

Z2, Z3, Z5, Z9 = (make_cyclic(k) for k in (2, 3, 5, 9))
F25 = make_galois(5, 1, 2, [2, 0, 1])


@pytest.mark.parametrize("ring", [Z3, make_cyclic(6), F25], ids=str)
def test_kernel_matches_full_matrix(ring):
    rng = np.random.default_rng(21)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        h = int(rng.integers(1, min(n, 3) + 1))
        g = Gate(ring, random_matrix(ring, h, rng))
        wires = [int(w) + 1 for w in rng.permutation(n)[:h]]
        psi = random_state(ring, n, rng)
        assert apply_gate_at(psi, g, wires) == naive_apply(psi, g, wires)


def test_permutation_fast_path_matches_full_matrix():
    rng = np.random.default_rng(22)
    for name in ("CNOT", "TOFFOLI", "SWAP", "CNX3", "CSWAP"):
        g = standard_gate(Z9, name)
        for _ in range(5):
            wires = [int(w) + 1 for w in rng.permutation(5)[: g.in_arity]]
            psi = random_state(Z9, 5, rng)
            assert apply_gate_at(psi, g, wires) == naive_apply(psi, g, wires)


def test_gate_application_is_linear():
    rng = np.random.default_rng(23)
    g = random_invertible_gate(Z5, 2, rng)
    a, b = random_state(Z5, 3, rng), random_state(Z5, 3, rng)
    lhs = apply_gate_at(a + b.scaled(3), g, [3, 1])
    rhs = apply_gate_at(a, g, [3, 1]) + apply_gate_at(b, g, [3, 1]).scaled(3)
    assert lhs == rhs


def test_non_square_gate_wire_rules():
    # AND on wires 1, 3 of |1 0 1>: output takes wire 1, wire 3 is removed
    out = apply_gate_at(basis_state(Z3, "101"), standard_gate(Z3, "AND"), [1, 3])
    assert out == basis_state(Z3, "10")
    # FANOUT appends its extra output at the end
    out = apply_gate_at(basis_state(Z3, "10"), standard_gate(Z3, "FANOUT"), [1])
    assert out == basis_state(Z3, "101")


def test_sample_calculation():
    c = sample_circuit(Z3)
    assert c.n_preps == 4 and c.final_width == 7
    assert run(c, "110") == basis_state(Z3, "1101101")
    for xs in itertools.product("01", repeat=3):
        x = "".join(xs)
        x1, x2, x3 = (ch == "1" for ch in x)
        want = (x1 and x2) or (x3 and x2)
        assert decide(c, x) == (Decision.ONE if want else Decision.ZERO)


def test_decisions():
    c = sample_circuit(Z5)
    assert decide(c, "110") == Decision.ONE
    assert decide(c, "101") == Decision.ZERO
    # K over Z_5 on |000> leaves the last bit in superposition
    k = Circuit(Z5, 3, [Apply(branching_gate_K(Z5), (1, 2, 3))])
    assert decide(k, "000") == Decision.NOT_NECESSARY


def test_default_space():
    assert default_space(sample_circuit(Z3)) == "l2"
    c = Circuit(Z5, 1, [Apply(standard_gate(Z5, "UNIF"), (1,))])
    assert default_space(c) == "l1"
    g = random_invertible_gate(Z5, 1, np.random.default_rng(1))
    if not g.classification.affine:
        assert default_space(Circuit(Z5, 1, [Apply(g, (1,))])) == "generic"


def test_inverse_round_trip():
    rng = np.random.default_rng(24)
    for ring in (Z3, Z9, F25):
        ops = []
        for _ in range(4):
            g = random_invertible_gate(ring, int(rng.integers(1, 3)), rng)
            ops.append(Apply(g, tuple(int(w) + 1 for w in rng.permutation(3)[: g.in_arity])))
        c = Circuit(ring, 3, ops)
        inv = circuit_inverse(c)
        for i in range(8):
            assert run(inv, run(c, bits(i, 3))) == basis_state(ring, bits(i, 3))
    with pytest.raises(ContainsPrep):
        circuit_inverse(Circuit(Z3, 1, [Prep()]))


def test_unitary_circuits_preserve_inner_products():
    rng = np.random.default_rng(25)
    for ring in (Z3, Z9):
        u = random_unitary_gate(ring, 3, rng)
        c = Circuit(ring, 3, [Apply(u, (2, 3, 1))])
        a, b = random_state(ring, 3, rng), random_state(ring, 3, rng)
        assert inner_product(run(c, a), run(c, b)) == inner_product(a, b)
        assert norm(run(c, a)) == norm(a)


def test_path_counts_for_k_over_z2():
    c = Circuit(Z2, 3, [Apply(branching_gate_K(Z2), (1, 2, 3))])
    counts = path_counts(c, "000")
    assert counts[int("011", 2)] == 1 and counts[int("111", 2)] == 1
    assert path_count(c, "000", "011") == 1


def test_path_counts_are_unreduced():
    # two UNIF gates over Z_3: each column is (2, 2), so N grows to 8 before reduction
    u = standard_gate(Z3, "UNIF")
    c = Circuit(Z3, 1, [Apply(u, (1,)), Apply(u, (1,))])
    assert path_counts(c, "0").tolist() == [8, 8]
    assert run(c, "0").amps[:, 0].tolist() == [2, 2]


def test_path_counts_need_cyclic_ring():
    with pytest.raises(Exception):
        path_counts(Circuit(F25, 1, [Apply(standard_gate(F25, "NOT"), (1,))]), "0")


def test_width_and_ring_checks():
    with pytest.raises(WidthError):
        Circuit(Z3, 2, [Apply(standard_gate(Z3, "TOFFOLI"), (1, 2, 3))]).widths
    with pytest.raises(RingMismatch):
        Circuit(Z3, 1, [Apply(standard_gate(Z5, "NOT"), (1,))])
    with pytest.raises(WidthError):
        run(Circuit(Z3, 2), "0")


def test_serialize_parse_round_trip():
    c = sample_circuit(Z3)
    text = serialize_circuit(c)
    assert serialize_circuit(parse_circuit(text)) == text
    rng = np.random.default_rng(26)
    for ring in (Z5, F25):
        for _ in range(10):
            c = random_small_circuit(ring, 2, rng)
            back = parse_circuit(serialize_circuit(c), normalize=False)
            for i in range(4):
                assert run(back, bits(i, 2)) == run(c, bits(i, 2))


def test_parse_inline_matrix():
    text = "ring Z 5\ninputs 1\nbegin matrix 1\n0 1\n1 0\nend matrix\nat 1\n"
    c = parse_circuit(text)
    assert run(c, "0") == basis_state(Z5, "1")


def test_parse_errors_carry_positions():
    with pytest.raises(ParseError) as e:
        parse_circuit("ring Z 3\ninputs 2\ngate CNOT 0 1\n")
    assert e.value.line == 3 and e.value.column == 11
    with pytest.raises(ParseError) as e:
        parse_circuit("ring Z 3\ninputs 1\ngate FOO 1\n")
    assert e.value.line == 3
    with pytest.raises(ParseError):
        parse_circuit("inputs 1\n")
    with pytest.raises(ParseError):
        parse_circuit("ring Z 3\ninputs 1\nbegin matrix 1\n1 0\n0 1\nend matrix\n")


def test_late_preps_move_to_the_front():
    text = "ring Z 3\ninputs 1\ngate NOT 1\nprep\ngate CNOT 1 2\n"
    c = parse_circuit(text)
    assert isinstance(c.ops[0], Prep)
    assert run(c, "0") == run(parse_circuit(text, normalize=False), "0")


def test_state_space_of_output_matches_gate_classes():
    rng = np.random.default_rng(27)
    for _ in range(10):
        c = random_small_circuit(Z5, 2, rng)
        sp = default_space(c)
        out = run(c, "01")
        if sp in ("l1", "l2") and all(g.classification.affine for g in c.gates):
            assert state_space_membership(out).l1
