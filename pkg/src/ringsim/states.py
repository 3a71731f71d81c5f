"""Dense ring-valued distributions over n-bit strings.

The amplitude of string x sits at the index whose binary expansion is x,
with bit position 1 as the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError, RingMismatch, WidthError
from .ring import Ring, RingElem, parse_ring_header

MAX_BITS = 24

SPACES = ("generic", "l1", "l2")


def check_width(n: int, cap: int | None = None) -> None:
    cap = MAX_BITS if cap is None else cap
    if n < 0:
        raise WidthError("negative width")
    if n > cap:
        raise WidthError(f"{n} bits exceeds the dense-state cap of {cap}")


class ModalState:
    """An immutable dense state: ``amps`` has shape (2**n, e)."""

    __slots__ = ("ring", "n", "amps")

    def __init__(self, ring: Ring, n: int, amps, *, cap: int | None = None):
        check_width(n, cap)
        a = np.array(amps, dtype=ring.dtype)
        if a.ndim == 1 and ring.e == 1:
            a = a[:, None]
        if a.shape != (2**n, ring.e):
            raise ValueError(f"amplitude array has shape {a.shape}, expected {(2**n, ring.e)}")
        a %= ring.k
        a.setflags(write=False)
        self.ring = ring
        self.n = n
        self.amps = a

    def __getitem__(self, x) -> RingElem:
        idx = _index(x, self.n) if isinstance(x, str) else int(x)
        return self.ring.elem(self.amps[idx])

    def __eq__(self, other):
        if not isinstance(other, ModalState):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.n == other.n
            and np.array_equal(self.amps, other.amps)
        )

    def __hash__(self):
        return hash((self.ring, self.n, self.amps.tobytes()))

    def __add__(self, other):
        _same(self, other)
        return ModalState(self.ring, self.n, self.ring.add(self.amps, other.amps))

    def __sub__(self, other):
        _same(self, other)
        return ModalState(self.ring, self.n, self.ring.sub(self.amps, other.amps))

    def scaled(self, c) -> "ModalState":
        c = self.ring.elem(c)
        return ModalState(self.ring, self.n, self.ring.mul(self.amps, c.vec))

    def __rmul__(self, c):
        return self.scaled(c)

    def support(self) -> list[str]:
        nz = np.nonzero(~self.ring.is_zero_array(self.amps))[0]
        return [format_bits(int(i), self.n) for i in nz]

    def items(self):
        """(bitstring, RingElem) pairs for the nonzero amplitudes, in order."""
        for x in self.support():
            yield x, self[x]

    def tensor(self, other) -> "ModalState":
        return tensor(self, other)

    def __repr__(self):
        terms = " + ".join(f"({v})|{x}>" for x, v in self.items()) or "0"
        return f"ModalState[{self.ring}, n={self.n}]({terms})"


def _same(a: ModalState, b: ModalState) -> None:
    if a.ring != b.ring:
        raise RingMismatch(f"states over {a.ring} and {b.ring}")
    if a.n != b.n:
        raise WidthError(f"states of width {a.n} and {b.n}")


def format_bits(i: int, n: int) -> str:
    return format(i, f"0{n}b") if n else ""


def _index(x: str, n: int) -> int:
    if len(x) != n or any(c not in "01" for c in x):
        raise ValueError(f"expected a {n}-bit string, got {x!r}")
    return int(x, 2) if n else 0


def basis_state(ring: Ring, x: str) -> ModalState:
    n = len(x)
    amps = ring.zeros((2**n,))
    amps[_index(x, n), 0] = 1
    return ModalState(ring, n, amps)


def zero_state(ring: Ring, n: int) -> ModalState:
    return ModalState(ring, n, ring.zeros((2**n,)))


def from_terms(ring: Ring, n: int, terms) -> ModalState:
    """Build a state from a mapping or iterable of (bitstring, value)."""
    items = terms.items() if isinstance(terms, dict) else terms
    amps = ring.zeros((2**n,))
    for x, v in items:
        i = _index(x, n)
        amps[i] = ring.add(amps[i], ring.elem(v).vec)
    return ModalState(ring, n, amps)


def tensor(a: ModalState, b: ModalState) -> ModalState:
    if a.ring != b.ring:
        raise RingMismatch(f"states over {a.ring} and {b.ring}")
    ring = a.ring
    check_width(a.n + b.n)
    prod = ring.mul(a.amps[:, None, :], b.amps[None, :, :])
    return ModalState(ring, a.n + b.n, prod.reshape(-1, ring.e))


def inner_product(a: ModalState, b: ModalState) -> RingElem:
    """Sum over x of conj(a_x) * b_x."""
    _same(a, b)
    ring = a.ring
    prod = ring.mul(ring.conj(a.amps), b.amps)
    return ring.elem(prod.sum(axis=0) % ring.k)


def norm(a: ModalState) -> RingElem:
    return inner_product(a, a)


def amplitude_sum(a: ModalState) -> RingElem:
    return a.ring.elem(a.amps.sum(axis=0) % a.ring.k)


@dataclass(frozen=True)
class Membership:
    generic: bool
    l1: bool
    l2: bool

    def __getitem__(self, space: str) -> bool:
        return getattr(self, space)


def is_generic(a: ModalState) -> bool:
    ring = a.ring
    if ring.is_prime_power:
        return bool(ring.is_unit_array(a.amps).any())
    g = np.gcd.reduce(np.append(a.amps[:, 0], ring.k))
    return int(g) == 1


def state_space_membership(a: ModalState) -> Membership:
    one = a.ring.one
    return Membership(
        generic=is_generic(a),
        l1=amplitude_sum(a) == one,
        l2=norm(a) == one,
    )


def in_space(a: ModalState, space: str) -> bool:
    if space == "generic":
        return is_generic(a)
    if space == "l1":
        return amplitude_sum(a) == a.ring.one
    if space == "l2":
        return norm(a) == a.ring.one
    raise ValueError(f"unknown state space {space!r}")


def _positions(positions, n: int) -> list[int]:
    pos = [int(p) for p in positions]
    if len(set(pos)) != len(pos) or any(not 1 <= p <= n for p in pos):
        raise WidthError(f"bad positions {pos} for {n} bits")
    return pos


def _values_at(a: ModalState, positions) -> np.ndarray:
    """For each support string, the bits at the given positions as integers."""
    pos = _positions(positions, a.n)
    idx = np.nonzero(~a.ring.is_zero_array(a.amps))[0]
    val = np.zeros(len(idx), dtype=np.int64)
    for p in pos:
        val = (val << 1) | ((idx >> (a.n - p)) & 1)
    return val


def is_possible(a: ModalState, positions, bits: str) -> bool:
    if len(bits) != len(list(positions)):
        raise ValueError("bit string length must match the number of positions")
    target = int(bits, 2) if bits else 0
    return bool(np.any(_values_at(a, positions) == target))


def is_necessary(a: ModalState, positions, bits: str, space: str = "generic") -> bool:
    if len(bits) != len(list(positions)):
        raise ValueError("bit string length must match the number of positions")
    if not in_space(a, space):
        return False
    vals = _values_at(a, positions)
    target = int(bits, 2) if bits else 0
    return bool(len(vals) and np.all(vals == target))


def necessary_value(a: ModalState, position: int, space: str = "generic") -> str | None:
    """The bit that is necessary at ``position``, or None."""
    for b in "01":
        if is_necessary(a, [position], b, space):
            return b
    return None


# text format


def serialize_state(a: ModalState) -> str:
    lines = [a.ring.header(), f"bits {a.n}"]
    for x, v in a.items():
        lines.append(f"{x or '-'} {v}")
    return "\n".join(lines) + "\n"


def parse_state(text: str) -> ModalState:
    ring = None
    n = None
    terms = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ring is None:
            ring = parse_ring_header(line, lineno)
            continue
        if n is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "bits" or not parts[1].isdigit():
                raise ParseError("expected 'bits <n>'", lineno, 1)
            n = int(parts[1])
            try:
                check_width(n)
            except WidthError as exc:
                raise ParseError(str(exc), lineno, 6) from None
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected '<bitstring> <ring-element>'", lineno, 1)
        x = "" if parts[0] == "-" else parts[0]
        if len(x) != n or any(c not in "01" for c in x):
            raise ParseError(f"bad bit string {parts[0]!r}", lineno, 1)
        if x in terms:
            raise ParseError(f"duplicate entry for {parts[0]!r}", lineno, 1)
        try:
            terms[x] = ring.parse_elem(parts[1])
        except ValueError as exc:
            col = raw.index(parts[1]) + 1
            raise ParseError(str(exc), lineno, col) from None
    if ring is None or n is None:
        raise ParseError("missing ring header or bits line")
    return from_terms(ring, n, terms)
