"""Gates over Z_k and Galois rings, and their validity classification.

A gate stores a *base* matrix of shape (2**h_out, 2**h_in, e) together with
a number of leading control bits.  Controlled gates are never expanded
unless ``matrix`` is requested, so a Λ^ℓX with large ℓ costs nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import (
    NotInvertible,
    NotInvertibleModulus,
    ParseError,
    RingMismatch,
    UnknownGate,
    WidthError,
    WitnessInapplicable,
)
from .linalg import inverse_mod
from .ring import (
    Ring,
    embed_to_zk_block,
    four_squares,
    make_cyclic,
    octonion_mul,
    parse_ring_header,
)
from .states import ModalState, from_terms, norm

# explicit matrices larger than this many rows are refused
MAX_EXPLICIT_DIM = 2**12


def _log2_exact(n: int) -> int:
    h = n.bit_length() - 1
    if n <= 0 or 2**h != n:
        raise WidthError(f"matrix dimension {n} is not a power of two")
    return h


def mat_mul(ring: Ring, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two (rows, inner, e) and (inner, cols, e) ring matrices."""
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    if ring.e == 1:
        return (a[..., 0].dot(b[..., 0]) % ring.k)[..., None]
    t = ring.mult_tensor.astype(object)
    out = np.einsum("xie,ijf,efl->xjl", a, b, t)
    return out % ring.k


def dagger(ring: Ring, m: np.ndarray) -> np.ndarray:
    return np.transpose(ring.conj(np.asarray(m)), (1, 0, 2))


def identity_matrix(ring: Ring, d: int) -> np.ndarray:
    out = np.zeros((d, d, ring.e), dtype=ring.dtype)
    out[np.arange(d), np.arange(d), 0] = 1
    return out


@dataclass(frozen=True)
class GateClassification:
    invertible: bool
    affine: bool
    unitary: bool
    # (p, r, t): M†M = I holds modulo p^t, for each prime-power component
    s2_thresholds: tuple | None = None

    @property
    def s2_threshold(self) -> int | None:
        if not self.s2_thresholds or len(self.s2_thresholds) != 1:
            return None
        return self.s2_thresholds[0][2]

    def summary(self) -> str:
        def yn(b):
            return "yes" if b else "no"

        return f"invertible: {yn(self.invertible)}, affine: {yn(self.affine)}, unitary: {yn(self.unitary)}"


_X_NAMES = {0: "NOT", 1: "CNOT", 2: "TOFFOLI"}


def display_name(base_name: str, controls: int) -> str:
    if base_name == "NOT":
        return _X_NAMES.get(controls, f"CNX{controls}")
    return "C" * controls + base_name


class Gate:
    """An immutable gate.  Row index is the output string, column the input."""

    def __init__(self, ring: Ring, base, base_name: str = "custom", controls: int = 0):
        b = np.array(base, dtype=ring.dtype)
        if b.ndim == 2:
            if ring.e != 1:
                raise ValueError("matrix over a Galois ring needs a coefficient axis")
            b = b[..., None]
        if b.ndim != 3 or b.shape[2] != ring.e:
            raise ValueError(f"bad gate matrix shape {b.shape}")
        b %= ring.k
        _log2_exact(b.shape[0])
        _log2_exact(b.shape[1])
        if controls and b.shape[0] != b.shape[1]:
            raise ValueError("only square gates can be controlled")
        b.setflags(write=False)
        self.ring = ring
        self.base = b
        self.controls = int(controls)
        self.base_name = base_name
        self._perm = _permutation_of(b)
        self._cls = _classify_base(ring, b, self._perm)

    # shape

    @property
    def base_in(self) -> int:
        return _log2_exact(self.base.shape[1])

    @property
    def base_out(self) -> int:
        return _log2_exact(self.base.shape[0])

    @property
    def in_arity(self) -> int:
        return self.base_in + self.controls

    @property
    def out_arity(self) -> int:
        return self.base_out + self.controls

    @property
    def arity(self) -> int:
        return self.in_arity

    @property
    def is_square(self) -> bool:
        return self.base.shape[0] == self.base.shape[1]

    @property
    def name(self) -> str:
        return display_name(self.base_name, self.controls)

    @property
    def permutation(self):
        """Output row for each base input column, or None."""
        return self._perm

    @property
    def is_permutation(self) -> bool:
        return self._perm is not None

    @property
    def classification(self) -> GateClassification:
        return self._cls

    @cached_property
    def matrix(self) -> np.ndarray:
        """The full (2^out, 2^in, e) matrix with controls expanded."""
        rows = self.base.shape[0] << self.controls
        cols = self.base.shape[1] << self.controls
        if max(rows, cols) > MAX_EXPLICIT_DIM:
            raise WidthError(f"{self.name} is too wide to expand explicitly")
        if not self.controls:
            return self.base
        out = identity_matrix(self.ring, rows)
        d = self.base.shape[0]
        out[rows - d :, cols - d :, :] = self.base
        out.setflags(write=False)
        return out

    def entry(self, row: int, col: int):
        return self.ring.elem(self.matrix[row, col])

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.controls == other.controls
            and np.array_equal(self.base, other.base)
        )

    def __hash__(self):
        return hash((self.ring, self.controls, self.base.tobytes()))

    def __repr__(self):
        return f"Gate({self.name}, {self.ring}, in={self.in_arity}, out={self.out_arity})"


def _permutation_of(b: np.ndarray):
    rows, cols, e = b.shape
    if rows != cols:
        return None
    nz = b != 0
    if nz.sum() != cols:
        return None
    r, c, l = np.nonzero(nz)
    if np.any(l != 0) or np.any(b[r, c, 0] != 1):
        return None
    order = np.argsort(c)
    perm = r[order]
    if len(set(perm.tolist())) != cols or list(c[order]) != list(range(cols)):
        return None
    return tuple(int(x) for x in perm)


def _is_affine(ring: Ring, b: np.ndarray) -> bool:
    sums = np.asarray(b, dtype=object).sum(axis=0) % ring.k
    want = np.zeros(ring.e, dtype=object)
    want[0] = 1
    return bool(np.all(sums == want))


def _s2_thresholds(ring: Ring, b: np.ndarray) -> tuple:
    d = b.shape[0]
    diff = mat_mul(ring, dagger(ring, b), b) - identity_matrix(ring, d).astype(object)
    out = []
    for p, r in ring.factorization:
        t = 0
        while t < r and np.all(diff % p ** (t + 1) == 0):
            t += 1
        out.append((p, r, t))
    return tuple(out)


def _classify_base(ring: Ring, b: np.ndarray, perm) -> GateClassification:
    if perm is not None:
        full = tuple((p, r, r) for p, r in ring.factorization)
        return GateClassification(True, True, True, full)
    if b.shape[0] != b.shape[1]:
        return GateClassification(False, _is_affine(ring, b), False, None)
    thresholds = _s2_thresholds(ring, b)
    unitary = all(t == r for _, r, t in thresholds)
    try:
        _inverse_base(ring, b)
        invertible = True
    except NotInvertible:
        invertible = False
    return GateClassification(invertible, _is_affine(ring, b), unitary, thresholds)


def _inverse_base(ring: Ring, b: np.ndarray) -> np.ndarray:
    if b.shape[0] != b.shape[1]:
        raise NotInvertible("matrix is not square")
    e = ring.e
    flat = embed_to_zk_block(b, ring)
    inv = inverse_mod(flat, ring.k)
    d = b.shape[0]
    # the block inverse embeds M^-1; column 0 of each block is the entry
    out = np.zeros((d, d, e), dtype=ring.dtype)
    for i in range(d):
        for j in range(d):
            out[i, j, :] = [int(v) for v in inv[e * i : e * i + e, e * j]]
    return out


# constructors


def from_matrix(ring: Ring, m, name: str = "custom") -> Gate:
    """Gate from a nested list of ints / RingElems, or a (rows, cols, e) array."""
    if isinstance(m, np.ndarray) and m.ndim == 3:
        return Gate(ring, m, name)
    rows = [[ring.elem(v).coeffs for v in row] for row in m]
    return Gate(ring, np.array(rows, dtype=ring.dtype).reshape(len(rows), -1, ring.e), name)


def _perm_gate(ring, perm, name):
    d = len(perm)
    b = np.zeros((d, d, ring.e), dtype=ring.dtype)
    for col, row in enumerate(perm):
        b[row, col, 0] = 1
    return Gate(ring, b, name)


def _int_gate(ring, rows, name):
    a = np.array(rows, dtype=object) % ring.k
    b = np.zeros(a.shape + (ring.e,), dtype=ring.dtype)
    b[..., 0] = a
    return Gate(ring, b, name)


def k_matrix(k: int) -> list[list[int]]:
    """The 8x8 integer matrix whose column j is the octonion w * e_j."""
    return [list(row) for row in _k_rows(k)]


@lru_cache(maxsize=None)
def _k_rows(k: int) -> tuple:
    a, b, c, d = four_squares(k - 1)
    w = [a, 0, b, 1, c, 0, d, 1]
    cols = []
    for j in range(8):
        e_j = [int(i == j) for i in range(8)]
        cols.append(octonion_mul(w, e_j))
    return tuple(tuple(cols[j][i] for j in range(8)) for i in range(8))


def branching_gate_K(ring: Ring) -> Gate:
    return _int_gate(ring, k_matrix(ring.k), "K")


def rho_gate(ring: Ring) -> Gate:
    """Maps |00> to (k-1)|00> + |01> + |11>; identity on the other inputs."""
    k = ring.k
    m = [[k - 1, 0, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 1]]
    return _int_gate(ring, m, "RHO")


def _base_gate(ring: Ring, name: str) -> Gate:
    if name == "NOT":
        return _perm_gate(ring, (1, 0), "NOT")
    if name == "SWAP":
        return _perm_gate(ring, (0, 2, 1, 3), "SWAP")
    if name == "FANOUT":
        return _int_gate(ring, [[1, 0], [0, 0], [0, 0], [0, 1]], "FANOUT")
    if name == "AND":
        return _int_gate(ring, [[1, 1, 1, 0], [0, 0, 0, 1]], "AND")
    if name == "OR":
        return _int_gate(ring, [[1, 0, 0, 0], [0, 1, 1, 1]], "OR")
    if name == "ERASE":
        return _int_gate(ring, [[1, 1]], "ERASE")
    if name == "UNIF":
        if ring.k % 2 == 0:
            raise NotInvertibleModulus(f"2 is not a unit in {ring}")
        h = pow(2, -1, ring.k)
        return _int_gate(ring, [[h, h], [h, h]], "UNIF")
    if name == "K":
        return branching_gate_K(ring)
    if name == "KT":
        return _int_gate(ring, np.array(k_matrix(ring.k), dtype=object).T, "KT")
    if name == "RHO":
        return rho_gate(ring)
    raise UnknownGate(f"unknown gate {name!r}")


_CNX = re.compile(r"^CNX(\d+)$")


def standard_gate(ring: Ring, name: str, params=None) -> Gate:
    """Built-in gates by name.

    ``CNX<l>`` is Λ^l X; a leading run of ``C`` adds controls to any
    other square built-in (``CK``, ``CKT``, ``CSWAP``, ...).  For ``CNX``
    the control count may also be passed as ``params``.
    """
    # gates are immutable, so built-ins are shared
    return _standard_gate(ring, name, params)


@lru_cache(maxsize=1024)
def _standard_gate(ring: Ring, name: str, params=None) -> Gate:
    name = name.strip().upper()
    if name == "CNX" and params is not None:
        name = f"CNX{int(params)}"
    if name == "CNOT":
        return controlled(_base_gate(ring, "NOT"))
    if name == "TOFFOLI":
        return controlled(controlled(_base_gate(ring, "NOT")))
    m = _CNX.match(name)
    if m:
        ell = int(m.group(1))
        if ell < 1:
            raise UnknownGate("CNX needs at least one control")
        return controlled(_base_gate(ring, "NOT"), ell)
    stripped = name.lstrip("C")
    c = len(name) - len(stripped)
    if c and stripped:
        base = _base_gate(ring, stripped)
        if not base.is_square:
            raise UnknownGate(f"cannot control the non-square gate {stripped}")
        return controlled(base, c)
    return _base_gate(ring, name)


def controlled(g: Gate, times: int = 1) -> Gate:
    """Add ``times`` leading control bits."""
    if not g.is_square:
        raise ValueError(f"cannot control the non-square gate {g.name}")
    return Gate(g.ring, g.base, g.base_name, g.controls + times)


_ADJOINT_NAMES = {"K": "KT", "KT": "K", "NOT": "NOT", "SWAP": "SWAP"}


def _flip_name(name: str, suffix: str) -> str:
    if name in _ADJOINT_NAMES:
        return _ADJOINT_NAMES[name]
    if name.endswith(suffix):
        return name[: -len(suffix)]
    return name + suffix


def adjoint(g: Gate) -> Gate:
    b = dagger(g.ring, g.base)
    return Gate(g.ring, b, _flip_name(g.base_name, "^dag"), g.controls)


def inverse(g: Gate) -> Gate:
    if g.is_permutation:
        inv = np.transpose(g.base, (1, 0, 2))
        name = _flip_name(g.base_name, "^-1")
    elif g.base_name in ("K", "KT") and g.classification.unitary:
        inv = np.transpose(g.base, (1, 0, 2))
        name = _ADJOINT_NAMES[g.base_name]
    else:
        inv = _inverse_base(g.ring, g.base)
        name = _flip_name(g.base_name, "^-1")
    return Gate(g.ring, inv, name, g.controls)


def classify(g: Gate) -> GateClassification:
    return g.classification


def project_gate(g: Gate, tau: int) -> Gate:
    from .ring import project_mod

    small, b = project_mod(g.base[..., 0], tau, g.ring)
    return Gate(small, b[..., None], g.base_name, g.controls)


# norm-violation witness states


def _witness_register(ring: Ring) -> int:
    return max(1, (ring.k - 1).bit_length())


def sigma_state(ring: Ring, x: str, y: str) -> ModalState:
    """sum_{j<k} |x>|j> + |y>|0>, the j register after the gate's bits."""
    w = _witness_register(ring)
    terms = {}
    for j in range(ring.k):
        terms[x + format(j, f"0{w}b")] = 1
    key = y + "0" * w
    terms[key] = terms.get(key, 0) + 1
    return from_terms(ring, len(x) + w, terms)


def gram_entry(g: Gate, x: str, y: str):
    """<y| g† g |x>."""
    ring = g.ring
    m = np.asarray(g.matrix, dtype=object)
    col_x = m[:, int(x, 2)]
    col_y = m[:, int(y, 2)]
    return ring.elem(ring.mul(ring.conj(col_y), col_x).sum(axis=0) % ring.k)


def s2_violation_witness(g: Gate, x: str, y: str) -> ModalState:
    """A unit-norm state on which g tensor I can break the unit norm.

    Returns eps (|x>|1> + ... + |x>|k-1>) + (1 + eps)|y>|1> with
    eps = <y|g†g|x>.  That state needs conj(eps) = -eps; otherwise the
    simpler sigma state already leaves the unit-norm space under g and is
    attached to the WitnessInapplicable error.
    """
    ring = g.ring
    h = g.in_arity
    if len(x) != h or len(y) != h or x == y:
        raise ValueError("x and y must be distinct strings of the gate's arity")
    if gram_entry(g, x, x) != ring.one or gram_entry(g, y, y) != ring.one:
        raise ValueError("columns x and y of the gate must have unit norm")
    eps = gram_entry(g, y, x)
    if eps.conj() != -eps:
        raise WitnessInapplicable(
            "conj(eps) != -eps; the sigma state is the witness", sigma_state(ring, x, y)
        )
    w = _witness_register(ring)
    terms = {}
    for j in range(1, ring.k):
        terms[x + format(j, f"0{w}b")] = eps
    key = y + format(1, f"0{w}b")
    terms[key] = terms.get(key, ring.zero) + eps + 1
    return from_terms(ring, h + w, terms)


def witness_leaves_s2(g: Gate, state: ModalState) -> bool:
    """Whether (g tensor I) takes a unit-norm state to a non-unit norm."""
    from .circuits import apply_gate_at

    out = apply_gate_at(state, g, list(range(1, g.in_arity + 1)))
    return norm(state) == state.ring.one and norm(out) != state.ring.one


# gate file format


def serialize_matrix_rows(g: Gate) -> list[str]:
    m = g.matrix
    return [" ".join(g.ring.format_vec(m[i, j]) for j in range(m.shape[1])) for i in range(m.shape[0])]


def serialize_gate(g: Gate) -> str:
    if g.is_square:
        head = f"arity {g.in_arity}"
    else:
        head = f"arity {g.out_arity} {g.in_arity}"
    return "\n".join([g.ring.header(), head] + serialize_matrix_rows(g)) + "\n"


def parse_matrix_rows(ring: Ring, lines, rows: int, cols: int) -> np.ndarray:
    """``lines`` are (lineno, text) pairs; returns a (rows, cols, e) array."""
    if len(lines) != rows:
        where = lines[-1][0] if lines else None
        raise ParseError(f"expected {rows} matrix rows, got {len(lines)}", where)
    out = np.zeros((rows, cols, ring.e), dtype=ring.dtype)
    for i, (lineno, text) in enumerate(lines):
        parts = text.split()
        if len(parts) != cols:
            raise ParseError(f"expected {cols} entries, got {len(parts)}", lineno, 1)
        for j, tok in enumerate(parts):
            try:
                out[i, j] = ring.parse_elem(tok).vec
            except ValueError as exc:
                raise ParseError(str(exc), lineno, text.index(tok) + 1) from None
    return out


def parse_gate(text: str, name: str = "custom") -> Gate:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if len(lines) < 2:
        raise ParseError("gate file needs a ring header and an arity line")
    ring = parse_ring_header(lines[0][1], lines[0][0])
    lineno, arity = lines[1]
    parts = arity.split()
    if parts[0] != "arity" or len(parts) not in (2, 3) or not all(p.isdigit() for p in parts[1:]):
        raise ParseError("expected 'arity <h>' or 'arity <h_out> <h_in>'", lineno, 1)
    h_out = int(parts[1])
    h_in = int(parts[-1])
    if max(h_out, h_in) > 12:
        raise ParseError("gate arity too large for an explicit matrix", lineno, 7)
    b = parse_matrix_rows(ring, lines[2:], 2**h_out, 2**h_in)
    return Gate(ring, b, name)


def check_same_ring(ring: Ring, g: Gate) -> None:
    if g.ring != ring:
        raise RingMismatch(f"gate {g.name} is over {g.ring}, circuit over {ring}")


def k_gate_report(k: int):
    """Build K over Z_k and return (gate, four-squares tuple, K^T K = I)."""
    ring = make_cyclic(k)
    g = branching_gate_K(ring)
    m = np.asarray(g.base[..., 0], dtype=object)
    ok = bool(np.all((m.T.dot(m) % k) == np.eye(8, dtype=object)))
    return g, four_squares(k - 1), ok
