"""Cyclic rings Z_k and Galois rings GR(p^r, p^(re)).

An element a_0 + a_1 t + ... + a_(e-1) t^(e-1) is stored as its coefficient
vector.  Vectorized helpers act on numpy arrays whose trailing axis has
length e; that is what states and gate matrices use internally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import (
    ConstructionFailure,
    InvalidModulus,
    InvalidPolynomial,
    InvalidThreshold,
    NotAUnit,
    ParseError,
    RingMismatch,
    UnsupportedRing,
)
from .linalg import factorize, is_prime

MAX_MODULUS = 2**31


@dataclass(frozen=True)
class Ring:
    """A cyclic ring (e = 1) or a Galois ring Z_k[t]/(f).

    ``poly`` holds the monic modulus low-to-high (length e + 1), so the
    reduction rule is t^e = -(poly[0] + poly[1] t + ... ).  ``conj_tau`` is
    the image of t under quadratic conjugation, or None for trivial.
    """

    k: int
    factorization: tuple = field(compare=False)
    e: int = 1
    poly: tuple | None = None
    conj_tau: tuple | None = None

    # basic facts

    @property
    def is_cyclic(self) -> bool:
        return self.e == 1

    @property
    def is_prime_power(self) -> bool:
        return len(self.factorization) == 1

    @property
    def p(self) -> int:
        if not self.is_prime_power:
            raise UnsupportedRing(f"Z_{self.k} is not a prime-power ring")
        return self.factorization[0][0]

    @property
    def r(self) -> int:
        if not self.is_prime_power:
            raise UnsupportedRing(f"Z_{self.k} is not a prime-power ring")
        return self.factorization[0][1]

    @property
    def conjugation(self) -> str:
        return "trivial" if self.conj_tau is None else "quadratic"

    @property
    def size(self) -> int:
        return self.k**self.e

    @property
    def dtype(self):
        # int64 only while sums of many residue products cannot overflow
        limit = 2**24 if self.e == 1 else 2**12
        return np.int64 if self.k <= limit else object

    def __str__(self):
        if self.e == 1:
            return f"Z_{self.k}"
        return f"GR({self.k},{self.k}^{self.e})"

    def header(self) -> str:
        """The one-line text header used by every file format."""
        if self.e == 1:
            return f"ring Z {self.k}"
        coeffs = " ".join(str(c) for c in self.poly)
        return f"ring GR {self.p} {self.r} {self.e} {coeffs}"

    # multiplication structure

    @cached_property
    def mult_tensor(self) -> np.ndarray:
        """T[i, j, l] = coefficient of t^l in t^i * t^j."""
        e, k = self.e, self.k
        powers = [_unit_vector(e, 0)]
        for _ in range(2 * e - 2):
            powers.append(self._times_tau(powers[-1]))
        t = np.zeros((e, e, e), dtype=self.dtype)
        for i in range(e):
            for j in range(e):
                t[i, j, :] = np.array(powers[i + j], dtype=object) % k
        return t

    def _times_tau(self, v):
        e, k = self.e, self.k
        top = v[-1]
        out = [0] + list(v[:-1])
        if top:
            out = [(out[i] - top * self.poly[i]) % k for i in range(e)]
        return out

    @cached_property
    def conj_matrix(self) -> np.ndarray:
        """Column l holds the coefficients of conj(t)^l."""
        e = self.e
        c = np.zeros((e, e), dtype=self.dtype)
        if self.conj_tau is None:
            for i in range(e):
                c[i, i] = 1
            return c
        cur = np.zeros(e, dtype=self.dtype)
        cur[0] = 1
        tau_bar = np.array(self.conj_tau, dtype=self.dtype)
        for l in range(e):
            c[:, l] = cur
            cur = self.mul(cur, tau_bar)
        return c

    # vectorized arithmetic on (..., e) arrays

    def asarray(self, a) -> np.ndarray:
        return np.asarray(a, dtype=self.dtype) % self.k

    def zeros(self, shape=()) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.e,), dtype=self.dtype)

    def ones(self, shape=()) -> np.ndarray:
        out = self.zeros(shape)
        out[..., 0] = 1
        return out

    def add(self, a, b):
        return (a + b) % self.k

    def sub(self, a, b):
        return (a - b) % self.k

    def neg(self, a):
        return (-a) % self.k

    def mul(self, a, b):
        if self.e == 1:
            return (a * b) % self.k
        a = np.asarray(a)
        b = np.asarray(b)
        out = np.einsum("...i,...j,ijl->...l", a, b, self.mult_tensor)
        return out % self.k

    def scale(self, a, n: int):
        return (a * (n % self.k)) % self.k

    def conj(self, a):
        if self.conj_tau is None:
            return a
        return np.einsum("lj,...j->...l", self.conj_matrix, np.asarray(a)) % self.k

    def is_unit_array(self, a) -> np.ndarray:
        """Elementwise unit test for an (..., e) array."""
        a = np.asarray(a)
        if self.is_prime_power:
            return np.any(a % self.p != 0, axis=-1)
        # composite cyclic ring
        return np.gcd(a[..., 0], self.k) == 1

    def is_zero_array(self, a) -> np.ndarray:
        return np.all(np.asarray(a) == 0, axis=-1)

    def mult_matrix(self, a) -> np.ndarray:
        """The e x e matrix of x -> a*x in the basis 1, t, ..., t^(e-1)."""
        a = np.asarray(a, dtype=self.dtype)
        # column l = a * t^l
        return np.einsum("i,ilj->jl", a, self.mult_tensor) % self.k

    def inv_vec(self, a) -> np.ndarray:
        return self.elem(a).inv().vec

    # elements

    def elem(self, value) -> "RingElem":
        if isinstance(value, RingElem):
            if value.ring != self:
                raise RingMismatch(f"element of {value.ring} used in {self}")
            return value
        if isinstance(value, (int, np.integer)):
            coeffs = [int(value) % self.k] + [0] * (self.e - 1)
        else:
            coeffs = [int(c) % self.k for c in value]
            if len(coeffs) != self.e:
                raise ValueError(f"expected {self.e} coefficients, got {len(coeffs)}")
        return RingElem(self, tuple(coeffs))

    @property
    def zero(self) -> "RingElem":
        return self.elem(0)

    @property
    def one(self) -> "RingElem":
        return self.elem(1)

    @property
    def tau(self) -> "RingElem":
        if self.e < 2:
            raise UnsupportedRing("cyclic rings have no extension generator")
        return self.elem(_unit_vector(self.e, 1))

    def elements(self):
        for coeffs in itertools.product(range(self.k), repeat=self.e):
            yield RingElem(self, coeffs[::-1])

    def parse_elem(self, text: str) -> "RingElem":
        parts = text.strip().split(",")
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise ValueError(f"bad ring element {text!r}") from None
        if len(vals) == 1 and self.e > 1:
            vals = vals + [0] * (self.e - 1)
        return self.elem(vals)

    def format_vec(self, v) -> str:
        return ",".join(str(int(c)) for c in v)


def _unit_vector(e, i):
    v = [0] * e
    v[i] = 1
    return v


@dataclass(frozen=True)
class RingElem:
    ring: Ring
    coeffs: tuple

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=self.ring.dtype)

    def _other(self, other) -> "RingElem":
        if isinstance(other, RingElem):
            if other.ring != self.ring:
                raise RingMismatch(f"cannot combine {self.ring} with {other.ring}")
            return other
        if isinstance(other, (int, np.integer)):
            return self.ring.elem(other)
        return NotImplemented

    def _wrap(self, v) -> "RingElem":
        return RingElem(self.ring, tuple(int(c) for c in v))

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.ring.add(self.vec, o.vec))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.ring.sub(self.vec, o.vec))

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return self._wrap(self.ring.neg(self.vec))

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self._wrap(self.ring.mul(self.vec, o.vec))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        out = self.ring.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, np.integer)):
            return self == self.ring.elem(other)
        if not isinstance(other, RingElem):
            return NotImplemented
        return self.ring == other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ring, self.coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_unit(self) -> bool:
        return bool(self.ring.is_unit_array(self.vec))

    def conj(self) -> "RingElem":
        return self._wrap(self.ring.conj(self.vec))

    def inv(self) -> "RingElem":
        ring = self.ring
        if not self.is_unit():
            raise NotAUnit(f"{self} is not a unit of {ring}")
        if ring.e == 1:
            return ring.elem(pow(self.coeffs[0], -1, ring.k))
        # solve a*x = 1 as a linear system over Z_k
        from .linalg import inverse_mod

        m = inverse_mod(ring.mult_matrix(self.vec), ring.k)
        return ring.elem([int(m[i, 0]) for i in range(ring.e)])

    def __str__(self):
        return self.ring.format_vec(self.coeffs)

    def __repr__(self):
        return f"RingElem({self.ring}, {self})"


# elem_add / elem_mul / elem_neg / elem_inv / conjugate as plain functions


def elem_add(a: RingElem, b: RingElem) -> RingElem:
    return a + b


def elem_mul(a: RingElem, b: RingElem) -> RingElem:
    return a * b


def elem_neg(a: RingElem) -> RingElem:
    return -a


def elem_inv(a: RingElem) -> RingElem:
    return a.inv()


def conjugate(a: RingElem) -> RingElem:
    return a.conj()


# construction


def make_cyclic(k: int) -> Ring:
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise InvalidModulus(f"modulus must be an integer >= 2, got {k!r}")
    if k > MAX_MODULUS:
        raise InvalidModulus(f"modulus {k} exceeds 2^31")
    return Ring(int(k), factorize(int(k)))


def _poly_mod_p_irreducible(coeffs, p) -> bool:
    """Exhaustive test for a monic polynomial over Z_p (low-to-high)."""
    f = [c % p for c in coeffs]
    deg = len(f) - 1
    if deg <= 0:
        return False
    if deg == 1:
        return True
    # any proper factor has a monic factor of degree <= deg/2
    for d in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            g = list(low) + [1]
            if _poly_divides(g, f, p):
                return False
    return True


def _poly_divides(g, f, p) -> bool:
    rem = list(f)
    dg = len(g) - 1
    for shift in range(len(rem) - 1 - dg, -1, -1):
        c = rem[shift + dg]
        if c:
            for i in range(dg + 1):
                rem[shift + i] = (rem[shift + i] - c * g[i]) % p
    return not any(rem[:dg])


def _validate_poly(f, p, r, e) -> tuple:
    k = p**r
    coeffs = [int(c) % k for c in f]
    if len(coeffs) == e:
        coeffs.append(1)
    if len(coeffs) != e + 1:
        raise InvalidPolynomial(f"modulus polynomial must have degree {e}")
    if coeffs[-1] != 1:
        raise InvalidPolynomial("modulus polynomial must be monic")
    if coeffs[0] % p == 0:
        raise InvalidPolynomial("constant term of the modulus must be a unit")
    if not _poly_mod_p_irreducible(coeffs, p):
        raise InvalidPolynomial(f"modulus polynomial is reducible mod {p}")
    return tuple(coeffs)


def find_modulus_poly(p: int, r: int, e: int) -> tuple:
    """First monic degree-e polynomial, in lexicographic coefficient order,
    that is irreducible mod p with a unit constant term."""
    k = p**r
    for low in itertools.product(range(k), repeat=e):
        coeffs = list(low) + [1]
        if coeffs[0] % p and _poly_mod_p_irreducible(coeffs, p):
            return tuple(coeffs)
    raise ConstructionFailure(f"no irreducible degree-{e} polynomial over Z_{k}")


def make_galois(p: int, r: int, e: int, f=None) -> Ring:
    if not is_prime(p):
        raise InvalidModulus(f"{p} is not prime")
    if r < 1 or e < 1:
        raise InvalidModulus("r and e must be positive")
    k = p**r
    if k > MAX_MODULUS:
        raise InvalidModulus(f"modulus {k} exceeds 2^31")
    if e == 1:
        return make_cyclic(k)
    if e > 4:
        raise UnsupportedRing("extension degree above 4 is not supported")
    poly = _validate_poly(f, p, r, e) if f is not None else find_modulus_poly(p, r, e)
    base = Ring(k, ((p, r),), e, poly, None)
    conj_tau = None
    if e == 2:
        conj_tau = _second_root(base)
    ring = Ring(k, ((p, r),), e, poly, conj_tau)
    return ring


def _second_root(ring: Ring) -> tuple:
    """The root of f other than t itself, found by trying all k^2 elements."""
    tau = ring.tau
    f = ring.poly
    for cand in ring.elements():
        if cand == tau:
            continue
        acc = ring.zero
        for c in reversed(f):
            acc = acc * cand + c
        if acc.is_zero():
            return cand.coeffs
    raise ConstructionFailure(f"modulus {f} has no second root in {ring}")


def parse_ring_header(line: str, lineno: int | None = None) -> Ring:
    parts = line.split()
    try:
        if len(parts) == 3 and parts[:2] == ["ring", "Z"]:
            return make_cyclic(int(parts[2]))
        if len(parts) >= 5 and parts[:2] == ["ring", "GR"]:
            p, r, e = (int(x) for x in parts[2:5])
            coeffs = [int(x) for x in parts[5:]] or None
            return make_galois(p, r, e, coeffs)
    except ValueError as exc:
        raise ParseError(f"bad ring header: {exc}", lineno, 1) from None
    raise ParseError(f"bad ring header {line.strip()!r}", lineno, 1)


# significance


def _valuation(s: int, p: int, r: int) -> int:
    t = 0
    while t < r and s % p == 0:
        s //= p
        t += 1
    return t


def canonical_significance(s) -> Fraction:
    """1/p^t for nonzero s in p^t Z_(p^r) but not p^(t+1) Z, and 0 at s = 0."""
    ring = s.ring
    if not (ring.is_cyclic and ring.is_prime_power):
        raise UnsupportedRing("canonical significance needs Z_(p^r)")
    v = s.coeffs[0] % ring.k
    if v == 0:
        return Fraction(0)
    return Fraction(1, ring.p ** _valuation(v, ring.p, ring.r))


@dataclass
class SignificanceCheck:
    valid: bool
    threshold: int | None = None
    counterexample: tuple | None = None
    reason: str = ""


def check_significance_table(ring: Ring, table) -> SignificanceCheck:
    """Exhaustively test whether ``table`` (index -> value) is a
    significance function on Z_(p^r)."""
    if not (ring.is_cyclic and ring.is_prime_power):
        raise UnsupportedRing("significance tables need Z_(p^r)")
    k, p, r = ring.k, ring.p, ring.r
    sig = [Fraction(table[i]) for i in range(k)]
    if any(v < 0 for v in sig):
        return SignificanceCheck(False, reason="negative value")
    if sig[0] != 0:
        return SignificanceCheck(False, reason="sigma(0) != 0")
    if sig[1] != 1:
        return SignificanceCheck(False, reason="sigma(1) != 1")
    # sigma(u) <= sigma(t) must imply sigma(su) <= sigma(st) for every s
    for s in range(k):
        for t in range(k):
            for u in range(k):
                if sig[u] <= sig[t] and sig[(s * u) % k] > sig[(s * t) % k]:
                    return SignificanceCheck(
                        False, counterexample=(s, t, u), reason="not monotone"
                    )
    tau = next(t for t in range(r + 1) if sig[p**t % k] == 0)
    # the table must be a nondecreasing function of sigma_(p^tau)
    q = p**tau
    by_val = {}
    for s in range(k):
        key = _canonical_value(s % q, p, tau)
        by_val.setdefault(key, set()).add(sig[s])
    if any(len(v) > 1 for v in by_val.values()):
        return SignificanceCheck(False, reason="not a function of sigma mod p^tau")
    keys = sorted(by_val)
    vals = [next(iter(by_val[kk])) for kk in keys]
    if any(a > b for a, b in zip(vals, vals[1:])):
        return SignificanceCheck(False, reason="decreasing in sigma mod p^tau")
    return SignificanceCheck(True, threshold=tau)


def _canonical_value(s: int, p: int, r: int) -> Fraction:
    if s == 0:
        return Fraction(0)
    return Fraction(1, p ** _valuation(s, p, r))


# number-theoretic helpers used by the branching gate


def four_squares(m: int) -> tuple:
    """Lexicographically smallest (a, b, c, d), a >= b >= c >= d >= 0,
    with a^2 + b^2 + c^2 + d^2 = m."""
    from math import isqrt

    if m < 0:
        raise ValueError("m must be nonnegative")
    a = 0
    while True:
        if 4 * a * a >= m:
            for b in range(a + 1):
                if a * a + 3 * b * b < m:
                    continue
                for c in range(b + 1):
                    if a * a + b * b + 2 * c * c < m:
                        continue
                    rem = m - a * a - b * b - c * c
                    if rem < 0:
                        break
                    d = isqrt(rem)
                    if d * d == rem and d <= c:
                        return (a, b, c, d)
        a += 1


def _oct_conj(x):
    return [x[0]] + [-v for v in x[1:]]


def _cd_mul(x, y):
    n = len(x)
    if n == 1:
        return [x[0] * y[0]]
    h = n // 2
    x1, y1 = x[:h], x[h:]
    x2, y2 = y[:h], y[h:]
    a = _vsub(_cd_mul(x1, x2), _cd_mul(_oct_conj(y2), y1))
    b = _vadd(_cd_mul(y2, x1), _cd_mul(y1, _oct_conj(x2)))
    return a + b


def _vadd(a, b):
    return [u + v for u, v in zip(a, b)]


def _vsub(a, b):
    return [u - v for u, v in zip(a, b)]


def octonion_mul(u, v) -> list:
    """Cayley-Dickson product of two octonions given as 8 integers."""
    u = [int(x) for x in u]
    v = [int(x) for x in v]
    if len(u) != 8 or len(v) != 8:
        raise ValueError("octonions have 8 components")
    return _cd_mul(u, v)


def octonion_conj(u) -> list:
    return _oct_conj([int(x) for x in u])


def octonion_norm(u) -> int:
    return sum(int(x) ** 2 for x in u)


# matrices over Galois rings


def embed_to_zk_block(m, ring: Ring) -> np.ndarray:
    """Replace each entry of a (d, d', e) array by its e x e multiplication
    matrix, giving an (e d) x (e d') matrix over Z_k."""
    m = np.asarray(m)
    if m.ndim == 2 and ring.e == 1:
        m = m[..., None]
    d, dp, e = m.shape
    out = np.zeros((e * d, e * dp), dtype=ring.dtype)
    for i in range(d):
        for j in range(dp):
            out[e * i : e * i + e, e * j : e * j + e] = ring.mult_matrix(m[i, j])
    return out


def project_mod(x, tau: int, ring: Ring | None = None):
    """Reduce an element or integer matrix over Z_(p^r) to Z_(p^tau).

    Returns (new_ring, reduced) where reduced has the same kind as x.
    """
    if isinstance(x, RingElem):
        ring = x.ring
    if ring is None:
        raise ValueError("ring is required for matrix input")
    if not (ring.is_cyclic and ring.is_prime_power):
        raise UnsupportedRing("projection needs a cyclic prime-power ring")
    if not 1 <= tau <= ring.r:
        raise InvalidThreshold(f"threshold {tau} outside 1..{ring.r}")
    small = make_cyclic(ring.p**tau)
    if isinstance(x, RingElem):
        return small, small.elem(x.coeffs[0])
    return small, np.asarray(x) % small.k
