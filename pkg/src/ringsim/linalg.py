"""Exact matrix arithmetic over Z_k.

Matrices are handled as numpy object arrays of Python ints so that no
intermediate product can overflow; every result is reduced to [0, k).
"""

import numpy as np

from .errors import NotInvertible


def factorize(k):
    """Trial-division factorization, returned as ((p, r), ...) ascending."""
    if k < 2:
        return ()
    out = []
    n = k
    p = 2
    while p * p <= n:
        if n % p == 0:
            r = 0
            while n % p == 0:
                n //= p
                r += 1
            out.append((p, r))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def is_prime(n):
    return n >= 2 and factorize(n) == ((n, 1),)


def as_int_matrix(m):
    a = np.array(m, dtype=object)
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return a


def matmul_mod(a, b, k):
    a = as_int_matrix(a)
    b = as_int_matrix(b)
    return (a.dot(b)) % k


def identity(n):
    out = np.zeros((n, n), dtype=object)
    for i in range(n):
        out[i, i] = 1
    return out


def _inverse_prime_power(m, p, q):
    """Gauss-Jordan over Z_q, q = p**r, pivoting on units."""
    n = m.shape[0]
    a = [[int(x) % q for x in row] for row in m]
    inv = [[int(i == j) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = None
        for row in range(col, n):
            if a[row][col] % p:
                pivot = row
                break
        if pivot is None:
            raise NotInvertible(f"no unit pivot in column {col} modulo {q}")
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        s = pow(a[col][col], -1, q)
        a[col] = [(x * s) % q for x in a[col]]
        inv[col] = [(x * s) % q for x in inv[col]]
        for row in range(n):
            if row == col:
                continue
            f = a[row][col]
            if f:
                a[row] = [(x - f * y) % q for x, y in zip(a[row], a[col])]
                inv[row] = [(x - f * y) % q for x, y in zip(inv[row], inv[col])]
    return inv


def crt_combine(residues, moduli):
    """Combine x = r_i (mod q_i) for pairwise coprime q_i."""
    x, m = 0, 1
    for r, q in zip(residues, moduli):
        t = ((r - x) * pow(m, -1, q)) % q
        x += m * t
        m *= q
    return x % m


def inverse_mod(m, k):
    """Inverse of a square matrix over Z_k.

    Each prime-power component is inverted separately and the results are
    glued back together entrywise by CRT.
    """
    m = as_int_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotInvertible("matrix is not square")
    n = m.shape[0]
    parts = []
    moduli = []
    for p, r in factorize(k):
        q = p**r
        parts.append(_inverse_prime_power(m, p, q))
        moduli.append(q)
    out = np.zeros((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = crt_combine([part[i][j] for part in parts], moduli)
    return out
