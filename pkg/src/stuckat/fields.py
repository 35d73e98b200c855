"""Binary extension fields GF(2^d) with elements stored as ints.

The modulus for each degree is fixed: the numerically smallest irreducible
polynomial (``lowest_irreducible``) for the seed field, and the smallest
primitive one (``lowest_primitive``) where log/exp tables are needed. Both are
pure functions of the degree, so encoder and decoder always agree.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def _pmod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def _pmulmod(a: int, b: int, m: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
    return _pmod(r, m)


def _pgcd(a: int, b: int) -> int:
    while b:
        a, b = b, _pmod(a, b)
    return a


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _x_pow_2k(k: int, f: int) -> int:
    """x^(2^k) mod f."""
    r = 0b10
    for _ in range(k):
        r = _pmulmod(r, r, f)
    return r


def is_irreducible(f: int) -> bool:
    """Rabin's test for a polynomial over GF(2) encoded as an int."""
    d = f.bit_length() - 1
    if d < 1:
        return False
    if d == 1:
        return True
    if _x_pow_2k(d, f) != _pmod(0b10, f):
        return False
    for p in _prime_factors(d):
        h = _x_pow_2k(d // p, f) ^ 0b10
        if _pgcd(f, h) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def lowest_irreducible(degree: int) -> int:
    if degree < 1:
        raise ValueError("degree must be positive")
    for f in range(1 << degree, 1 << (degree + 1)):
        if is_irreducible(f):
            return f
    raise AssertionError("unreachable: irreducibles exist in every degree")


def _pow_mod(base: int, e: int, f: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = _pmulmod(r, base, f)
        base = _pmulmod(base, base, f)
        e >>= 1
    return _pmod(r, f)


def is_primitive(f: int) -> bool:
    if not is_irreducible(f):
        return False
    d = f.bit_length() - 1
    order = (1 << d) - 1
    gen = _pmod(0b10, f)
    if order == 1:
        return gen == 1
    return all(_pow_mod(gen, order // p, f) != 1 for p in _prime_factors(order))


@lru_cache(maxsize=None)
def lowest_primitive(degree: int) -> int:
    if degree < 1:
        raise ValueError("degree must be positive")
    for f in range(1 << degree, 1 << (degree + 1)):
        if is_primitive(f):
            return f
    raise AssertionError("unreachable: primitive polynomials exist in every degree")


def field_mul(a: int, b: int, degree: int) -> int:
    """Product in GF(2^degree) under the lowest irreducible modulus."""
    mask = (1 << degree) - 1
    if a & ~mask or b & ~mask:
        raise ValueError(f"operands must be {degree}-bit values")
    return _pmulmod(a, b, lowest_irreducible(degree))


class Multiplier:
    """Fast repeated multiplication by one fixed element ``c`` of GF(2^degree).

    Multiplication by ``c`` is GF(2)-linear, so it is tabulated one byte of
    the operand at a time.
    """

    def __init__(self, c: int, degree: int, modulus: int | None = None):
        f = modulus if modulus is not None else lowest_irreducible(degree)
        basis = []
        cur = _pmod(c, f)
        for _ in range(degree):
            basis.append(cur)
            cur <<= 1
            if cur >> degree:
                cur ^= f
        nbytes = (degree + 7) // 8
        self._tables = []
        for k in range(nbytes):
            table = [0] * 256
            for v in range(1, 256):
                low = (v & -v).bit_length() - 1
                idx = 8 * k + low
                table[v] = table[v & (v - 1)] ^ (basis[idx] if idx < degree else 0)
            self._tables.append(table)

    def __call__(self, a: int) -> int:
        r = 0
        for table in self._tables:
            r ^= table[a & 0xFF]
            a >>= 8
        return r


def vec_mul(a: np.ndarray, b: np.ndarray | int, degree: int, modulus: int | None = None) -> np.ndarray:
    """Elementwise product of uint64 arrays in GF(2^degree); needs degree <= 31."""
    if degree > 31:
        raise ValueError("vectorised multiply supports degree <= 31")
    f = np.uint64(modulus if modulus is not None else lowest_irreducible(degree))
    a = np.asarray(a, dtype=np.uint64).copy()
    b = np.broadcast_to(np.asarray(b, dtype=np.uint64), a.shape)
    top = np.uint64(1 << degree)
    one = np.uint64(1)
    r = np.zeros(a.shape, dtype=np.uint64)
    for bit in range(degree):
        sel = (b >> np.uint64(bit)) & one
        r ^= a * sel
        a <<= one
        a ^= np.where(a & top, f, np.uint64(0))
    return r


@lru_cache(maxsize=8)
def exp_table(degree: int) -> np.ndarray:
    """Powers g^0 .. g^(2^degree - 2) of the generator x under ``lowest_primitive``."""
    f = lowest_primitive(degree)
    q = (1 << degree) - 1
    e = np.empty(q, dtype=np.uint64)
    e[0] = 1
    filled = 1
    step = _pmod(0b10, f)  # g^filled
    while filled < q:
        n = min(filled, q - filled)
        e[filled : filled + n] = vec_mul(e[:n], step, degree, f)
        filled += n
        step = _pmulmod(step, step, f)
    e.setflags(write=False)
    return e
