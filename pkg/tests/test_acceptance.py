"""The twelve acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line and then
asserts.  Expected values are either transcribed reference matrices or
computed here by brute force independent of the code under test.
"""

import itertools
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from ringsim.circuits import Apply, Circuit, Decision, Prep, apply_gate_at, decide, decide_state, path_counts, run
from ringsim.compiler import (
    BooleanFormula,
    UnitaryLayout,
    build_affine_modkp,
    build_unitary_modkp,
    uncompute_wrap,
)
from ringsim.errors import WitnessInapplicable
from ringsim.gates import branching_gate_K, from_matrix, k_matrix, s2_violation_witness, standard_gate, witness_leaves_s2
from ringsim.oracle import UPkDecision, amplify_prime, count_accepting, sat_count, unique_sat, upk_decide
from ringsim.ring import (
    canonical_significance,
    check_significance_table,
    embed_to_zk_block,
    four_squares,
    make_cyclic,
    make_galois,
)
from ringsim.states import amplitude_sum, basis_state, in_space, norm, state_space_membership
from support import (
    any_predicate,
    bits,
    promise_predicate,
    random_affine_gate,
    random_invertible_gate,
    random_small_circuit,
    random_state,
    random_unitary_gate,
    sample_circuit,
)


def report(capsys, n, ok, detail=""):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"criterion {n}: {detail}"


# 1. F25 block embedding


# reference matrices
U_TILDE = [[2, 3, 0, 0], [1, 2, 0, 0], [0, 0, 2, -3], [0, 0, -1, 2]]
UTU_REFERENCE = [[0, 2, 0, 0], [2, 3, 0, 0], [0, 0, 0, 2], [0, 0, 2, 3]]


def test_criterion_01_f25_counterexample(capsys):
    f25 = make_galois(5, 1, 2, [2, 0, 1])
    u = np.zeros((2, 2, 2), dtype=np.int64)
    u[0, 0] = (2, 1)  # 2 + sqrt3
    u[1, 1] = (2, 4)  # 2 - sqrt3
    # U is unitary over F25
    for i, j in itertools.product(range(2), repeat=2):
        acc = f25.zero
        for r in range(2):
            acc = acc + f25.elem(u[r, i]).conj() * f25.elem(u[r, j])
        assert acc == (f25.one if i == j else f25.zero)
    emb = embed_to_zk_block(u, f25).astype(object)
    want_u = (np.array(U_TILDE, dtype=object) % 5)
    u_ok = bool((emb == want_u).all())
    utu = emb.T.dot(emb) % 5
    utu_ok = bool((utu == np.array(UTU_REFERENCE, dtype=object)).all())
    not_unitary = bool((utu != np.eye(4, dtype=object)).any())
    detail = (f"U~ matches: {u_ok}; U~^T U~ matches reference: {utu_ok} "
              f"(computed {utu.tolist()}); U~ not unitary over Z_5: {not_unitary}")
    report(capsys, 1, u_ok and utu_ok and not_unitary, detail)


# 2. sample calculation


def test_criterion_02_sample_calculation(capsys):
    z3 = make_cyclic(3)
    c = sample_circuit(z3)
    bad = []
    for xs in itertools.product("01", repeat=3):
        x1, x2, x3 = (int(ch) for ch in xs)
        w4, w5, w6 = x2, x1 & x2, x3 & x2
        f = w5 | w6
        want = "".join(xs) + f"{w4}{w5}{w6}{f}"
        if run(c, "".join(xs)) != basis_state(z3, want):
            bad.append("".join(xs))
    ok = not bad and run(c, "110") == basis_state(z3, "1101101")
    report(capsys, 2, ok, f"8 inputs checked, mismatches: {bad or 'none'}")


# 3. branching gate K


def test_criterion_03_k_gate(capsys):
    bad = []
    for k in range(2, 17):
        m = np.array(k_matrix(k), dtype=object)
        ktk = m.T.dot(m)
        a, b, c, d = four_squares(k - 1)
        ok = (
            ((ktk % k) == np.eye(8, dtype=object)).all()
            and all(ktk[i, i] == k + 1 for i in range(8))
            and [row[0] for row in m.tolist()] == [a, 0, b, 1, c, 0, d, 1]
            and (branching_gate_K(make_cyclic(k)).base[..., 0] == m % k).all()
            and branching_gate_K(make_cyclic(k)).classification.unitary
        )
        if not ok:
            bad.append(k)
    report(capsys, 3, not bad, f"k = 2..16, failures: {bad or 'none'}")


# 4. uncompute wrapper


def _random_exact_circuit(ring, rng):
    """Rejection-sample a circuit of invertible gates deciding every input exactly."""
    perm = ["NOT", "CNOT", "SWAP", "TOFFOLI"]
    while True:
        n = int(rng.integers(1, 4))
        preps = int(rng.integers(0, 7 - n))
        width = n + preps
        ops = [Prep()] * preps
        for _ in range(int(rng.integers(1, 6))):
            r = rng.random()
            if r < 0.5:
                g = standard_gate(ring, perm[rng.integers(len(perm))])
            elif r < 0.8:
                # monomial gate: permutation times a diagonal of units
                h = int(rng.integers(1, 3))
                p = rng.permutation(2**h)
                units = [u for u in range(1, ring.k) if np.gcd(u, ring.k) == 1]
                m = np.zeros((2**h, 2**h), dtype=np.int64)
                for j in range(2**h):
                    m[p[j], j] = units[rng.integers(len(units))]
                g = from_matrix(ring, m.tolist())
            else:
                g = random_invertible_gate(ring, 1, rng)
            if g.in_arity > width:
                continue
            ops.append(Apply(g, tuple(int(w) + 1 for w in rng.permutation(width)[: g.in_arity])))
        c = Circuit(ring, n, ops)
        if not c.gates:
            continue
        if all(decide(c, bits(i, n), "generic") != Decision.NOT_NECESSARY for i in range(2**n)):
            return c


def test_criterion_04_uncompute(capsys):
    rng = np.random.default_rng(404)
    t0 = time.time()
    checked = 0
    bad = []
    for k in (2, 3, 4, 5, 9):
        ring = make_cyclic(k)
        for _ in range(5):
            c = _random_exact_circuit(ring, rng)
            w = uncompute_wrap(c)
            assert w.max_width <= 7
            m = c.n_preps
            for i in range(2**c.n_inputs):
                x = bits(i, c.n_inputs)
                L = "1" if decide(c, x, "generic") == Decision.ONE else "0"
                y = x + "0" * m + L
                if run(w, x) != basis_state(ring, y):
                    bad.append((k, x, "state"))
                counts = path_counts(w, x) % k
                hot = [j for j in range(len(counts)) if counts[j] != 0]
                if hot != [int(y, 2)] or counts[int(y, 2)] != 1:
                    bad.append((k, x, "paths"))
            checked += 1
    dt = time.time() - t0
    report(capsys, 4, not bad and checked >= 20, f"{checked} circuits, failures: {bad[:5] or 'none'}, {dt:.1f}s")


# 5. path counting congruence


def test_criterion_05_path_counts(capsys):
    rng = np.random.default_rng(505)
    t0 = time.time()
    n_circ = 0
    bad = 0
    for k in (2, 3, 5, 9):
        ring = make_cyclic(k)
        for _ in range(30):
            n = int(rng.integers(1, 4))
            c = random_small_circuit(ring, n, rng, max_gates=4, max_width=4)
            for i in range(2**n):
                x = bits(i, n)
                counts = path_counts(c, x)
                amps = np.asarray(run(c, x).amps[:, 0], dtype=object)
                if not ((counts % k) == amps).all():
                    bad += 1
            n_circ += 1
    dt = time.time() - t0
    report(capsys, 5, bad == 0 and n_circ >= 100, f"{n_circ} circuits, mismatched inputs: {bad}, {dt:.1f}s")


# 6 - 8. counting simulations over a shared predicate suite


UNITARY_KS = (2, 3, 4, 5, 8, 9)
SHAPES = ((1, 2, 2), (2, 2, 1), (1, 3, 1), (2, 1, 3))


def _engineered(k, n, B, m, rng):
    """Predicate whose count alternates 1, 0, 1, ... across inputs."""
    return any_predicate(n, B, m, rng, counts=[1 - (i % 2) for i in range(2**n)])


@lru_cache(maxsize=None)
def predicate_suite(k):
    rng = np.random.default_rng(600 + k)
    suite = []
    for n, B, m in SHAPES:
        suite.append(promise_predicate(k, n, B, m, rng))
        suite.append(_engineered(k, n, B, m, rng))
    return suite


@lru_cache(maxsize=None)
def unitary_results(k):
    """(predicate index, x, count mod k, all gates unitary, final state, decision)."""
    ring = make_cyclic(k)
    out = []
    for idx, R in enumerate(predicate_suite(k)):
        c = build_unitary_modkp(R, ring)
        all_unitary = all(g.classification.unitary for g in c.gates)
        for i in range(2**R.n):
            x = bits(i, R.n)
            state = run(c, x)
            verdict = decide_state(state, c.out_wire, "l2")
            out.append((idx, x, count_accepting(R, x).accepting % k, all_unitary, state, verdict, R))
    return out


@pytest.mark.parametrize("k", UNITARY_KS)
def test_criterion_06_unitary_simulation(capsys, k):
    t0 = time.time()
    ring = make_cyclic(k)
    bad = []
    n_zero = n_one = 0
    for idx, x, r, all_unitary, state, verdict, R in unitary_results(k):
        if not all_unitary:
            bad.append((idx, "non-unitary gate"))
        if r == 0:
            n_zero += 1
            L = UnitaryLayout(R.n, R.B, R.m)
            if state != basis_state(ring, x + "1" * (5 * R.B + 3 * R.m) + "0") or L.width != state.n:
                bad.append((idx, x, "soundness"))
        else:
            n_one += 1
            if verdict != Decision.ONE:
                bad.append((idx, x, "completeness"))
    dt = time.time() - t0
    ok = not bad and n_zero > 0 and n_one > 0
    report(capsys, 6, ok, f"k={k}: {n_zero} soundness and {n_one} completeness inputs, "
                          f"failures: {bad[:5] or 'none'}, {dt:.1f}s")


AFFINE_KS = UNITARY_KS + (6, 10)


def test_criterion_07_affine_simulation(capsys):
    t0 = time.time()
    bad = []
    checked = 0
    for k in AFFINE_KS:
        ring = make_cyclic(k)
        for idx, R in enumerate(predicate_suite(k)):
            c = build_affine_modkp(R, ring)
            if not all(g.classification.affine for g in c.gates):
                bad.append((k, idx, "non-affine gate"))
            for i in range(2**R.n):
                x = bits(i, R.n)
                r = count_accepting(R, x).accepting % k
                assert r in (0, 1)
                if run(c, x) != basis_state(ring, str(r)):
                    bad.append((k, idx, x))
                checked += 1
    dt = time.time() - t0
    report(capsys, 7, not bad, f"k in {AFFINE_KS}: {checked} inputs, failures: {bad[:5] or 'none'}, {dt:.1f}s")


def test_criterion_08_three_way_agreement(capsys):
    t0 = time.time()
    bad = []
    checked = 0
    as_upk = {Decision.ONE: UPkDecision.ONE, Decision.ZERO: UPkDecision.ZERO}
    for k in UNITARY_KS:
        ring = make_cyclic(k)
        suite = predicate_suite(k)
        for idx, x, r, _, _, verdict, R in unitary_results(k):
            affine = decide(build_affine_modkp(R, ring), x)
            upk = upk_decide(R, x, k)
            if not (as_upk.get(verdict) == as_upk.get(affine) == upk):
                bad.append((k, idx, x, str(verdict), str(affine), str(upk)))
            checked += 1
        assert len(suite) == 2 * len(SHAPES)
    dt = time.time() - t0
    report(capsys, 8, not bad, f"{checked} (predicate, input) pairs, disagreements: {bad[:5] or 'none'}, {dt:.1f}s")


# 9. amplification


def test_criterion_09_amplification(capsys):
    t0 = time.time()
    rng = np.random.default_rng(909)
    bad = []
    n_pairs = 0
    for k in (3, 5, 7):
        for B, m in ((1, 1), (1, 2), (2, 1), (2, 2)):
            for _ in range(3):
                R = any_predicate(1, B, m, rng)
                A = amplify_prime(R, k)
                for x in "01":
                    if count_accepting(A, x).accepting != count_accepting(R, x).accepting ** (k - 1):
                        bad.append((k, B, m, x, "power"))
                    n_pairs += 1
    # builds on predicates that break the promise before amplification
    violating = any_predicate(1, 1, 1, np.random.default_rng(1), counts=[2, 0])
    builds = 0
    for k in (3, 5, 7):
        ring = make_cyclic(k)
        assert upk_decide(violating, "0", k) == UPkDecision.PROMISE_VIOLATED
        A = amplify_prime(violating, k)
        for x, want in (("0", "1"), ("1", "0")):
            if run(build_affine_modkp(A, ring), x) != basis_state(ring, want):
                bad.append((k, x, "affine"))
            builds += 1
        if k == 3:
            c = build_unitary_modkp(A, ring)
            if not all(g.classification.unitary for g in c.gates):
                bad.append((k, "non-unitary gate"))
            if decide(c, "0") != Decision.ONE:
                bad.append((k, "0", "unitary completeness"))
            if run(c, "1") != basis_state(ring, "1" + "1" * (5 * A.B + 3 * A.m) + "0"):
                bad.append((k, "1", "unitary soundness"))
            builds += 2
    dt = time.time() - t0
    report(capsys, 9, not bad, f"{n_pairs} power checks, {builds} post-amplification runs, "
                               f"failures: {bad[:5] or 'none'}, {dt:.1f}s")


# 10. valid transformations


def test_criterion_10_valid_transformations(capsys):
    t0 = time.time()
    bad = []
    pairs = 0
    for k in (2, 3, 5, 9):
        ring = make_cyclic(k)
        rng = np.random.default_rng(1000 + k)
        for _ in range(500):
            h = int(rng.integers(1, 3))
            wires = [int(w) + 1 for w in rng.permutation(3)[:h]]
            u = random_unitary_gate(ring, h, rng, depth=3)
            psi = random_state(ring, 3, rng, "l2")
            phi = random_state(ring, 3, rng)
            if not in_space(apply_gate_at(psi, u, wires), "l2"):
                bad.append((k, "l2"))
            if norm(apply_gate_at(phi, u, wires)) != norm(phi):
                bad.append((k, "norm"))
            a = random_affine_gate(ring, h, rng)
            if amplitude_sum(apply_gate_at(phi, a, wires)) != amplitude_sum(phi):
                bad.append((k, "sum"))
            g = random_invertible_gate(ring, h, rng)
            chi = random_state(ring, 3, rng, "generic")
            if not state_space_membership(apply_gate_at(chi, g, wires)).generic:
                bad.append((k, "generic"))
            pairs += 3
    # shears that fail unitarity; the witness must leave the unit-norm space
    f25 = make_galois(5, 1, 2, [2, 0, 1])
    shears = [
        from_matrix(make_cyclic(9), [[1, 3], [0, 1]]),
        from_matrix(make_cyclic(25), [[1, 5], [0, 1]]),
        from_matrix(make_cyclic(27), [[1, 9], [0, 1]]),
        from_matrix(make_cyclic(49), [[1, 7], [0, 1]]),
        from_matrix(f25, [[1, f25.tau], [0, 2]]),
    ]
    kinds = []
    for s in shears:
        assert not s.classification.unitary
        try:
            w = s2_violation_witness(s, "0", "1")
            kinds.append("psi")
        except WitnessInapplicable as exc:
            w = exc.sigma
            kinds.append("sigma")
        if not witness_leaves_s2(s, w):
            bad.append((str(s.ring), "witness"))
    dt = time.time() - t0
    report(capsys, 10, not bad, f"{pairs} (gate, state) pairs, {len(shears)} shears "
                                f"(witnesses {','.join(kinds)}), failures: {bad[:5] or 'none'}, {dt:.1f}s")


# 11. significance functions


def _p_valuation(s, p, r):
    t = 0
    while t < r and s % p == 0:
        s //= p
        t += 1
    return t


def test_criterion_11_significance(capsys):
    t0 = time.time()
    bad = []
    for k, p, r in ((4, 2, 2), (8, 2, 3), (9, 3, 2), (25, 5, 2), (27, 3, 3)):
        ring = make_cyclic(k)
        sig = [canonical_significance(ring.elem(s)) for s in range(k)]
        # the canonical values by direct valuation
        want = [Fraction(0)] + [Fraction(1, p ** _p_valuation(s, p, r)) for s in range(1, k)]
        if sig != want:
            bad.append((k, "values"))
        if sig[0] != 0 or sig[1] != 1 or any(sig[u] != 1 for u in range(k) if u % p):
            bad.append((k, "axioms"))
        for s, t, u in itertools.product(range(k), repeat=3):
            if sig[u] <= sig[t] and sig[s * u % k] > sig[s * t % k]:
                bad.append((k, "monotone", s, t, u))
                break
        for s, t in itertools.product(range(k), repeat=2):
            if sig[s * t % k] > sig[s] * sig[t]:
                bad.append((k, "submultiplicative", s, t))
                break
        res = check_significance_table(ring, sig)
        if not (res.valid and res.threshold == r):
            bad.append((k, "checker"))
    bad_tables = [
        (5, [0, 1, Fraction(1, 2), 1, 1]),
        (9, [0, 1, 1, 1, 1, 1, Fraction(1, 3), 1, 1]),
        (27, [0] + [Fraction(1, 1) if s % 3 else (Fraction(1, 3) if s % 9 == 0 else Fraction(1, 9))
                    for s in range(1, 27)]),
        (4, [0, 1, Fraction(1, 2), Fraction(1, 2)]),
    ]
    rejected = 0
    for k, table in bad_tables:
        res = check_significance_table(make_cyclic(k), table)
        if res.valid or res.counterexample is None:
            bad.append((k, "accepted bad table"))
            continue
        s, t, u = res.counterexample
        sig = [Fraction(v) for v in table]
        # the counterexample breaks the monotonicity rule
        if sig[u] <= sig[t] and sig[s * u % k] > sig[s * t % k]:
            rejected += 1
        else:
            bad.append((k, "bogus counterexample", res.counterexample))
    dt = time.time() - t0
    report(capsys, 11, not bad and rejected >= 3,
           f"k in (4, 8, 9, 25, 27) exhaustive; {rejected} bad tables rejected; failures: {bad[:5] or 'none'}, {dt:.1f}s")


# 12. UNIQUE-SAT over Z_2


def _random_cnf(rng, n):
    clauses = []
    for _ in range(int(rng.integers(1, 2 * n + 2))):
        size = int(rng.integers(1, n + 1))
        vs = rng.choice(n, size=size, replace=False) + 1
        clauses.append(tuple(int(v) if rng.random() < 0.5 else -int(v) for v in vs))
    return BooleanFormula(n, tuple(clauses))


def test_criterion_12_unique_sat(capsys):
    t0 = time.time()
    rng = np.random.default_rng(1212)
    tally = {0: 0, 1: 0}
    bad = []
    while sum(tally.values()) < 60:
        n = int(rng.integers(1, 4))
        phi = _random_cnf(rng, n)
        models = sat_count(phi)
        if models not in (0, 1) or tally[models] >= 30:
            continue
        tally[models] += 1
        res = unique_sat(phi)
        want = "One" if models == 1 else "Zero"
        if res.circuit != want or res.referee != models or not res.agree:
            bad.append((phi.clauses, res.circuit, models))
    dt = time.time() - t0
    report(capsys, 12, not bad, f"{sum(tally.values())} CNFs ({tally[1]} unique, {tally[0]} unsatisfiable), "
                                f"disagreements: {len(bad)}, {dt:.1f}s")
