"""Seeded mu-almost k-wise independent bit generator.

Construction: a seed of ``t`` bits is split into two field elements ``x, y`` of
GF(2^(t/2)). The ``h`` bits ``b_i = <x^i, y>`` (bitwise AND, then parity) form
a small-bias string, which is mapped through a binary matrix whose every
``k`` rows are linearly independent:

    g(x, y) = A @ (b_0, ..., b_(h-1))

``A`` has rows ``(1, a, a^2, ..., a^(k-1))`` for distinct points ``a`` of
GF(2^m), ``m = ceil(log2 r)``, each power written on ``m`` bits. Any ``k`` such
rows are independent over GF(2^m) (Vandermonde), hence over GF(2).

Seeds serialise as ``t`` raw bits, most significant first: the first half is
``x`` and the second half ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import fields
from .errors import ProfileError
from .gf2core import from_bin, int_to_bits

__all__ = [
    "GeneratorParams",
    "DualDistanceMatrix",
    "derive_params",
    "build_dual_distance_matrix",
    "field_mul",
    "expand_seed",
    "expand_seed_ints",
    "expand_batch",
    "inner_bits",
    "seed_from_int",
    "split_seed",
    "seed_length_bound",
    "bias_bound",
]

field_mul = fields.field_mul


def _ceil_log2(n: int) -> int:
    return max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class GeneratorParams:
    r: int
    k: int
    mu_exp: int  # mu = 2 ** -mu_exp
    eval_degree: int  # m = ceil(log2 r), at least 1
    h: int
    t: int

    @property
    def mu(self) -> Fraction:
        return Fraction(1, 1 << self.mu_exp)

    @property
    def half(self) -> int:
        return self.t // 2


def _mu_exponent(mu) -> int:
    frac = Fraction(mu)
    if not 0 < frac < 1 or frac.numerator != 1 or frac.denominator & (frac.denominator - 1):
        raise ProfileError(f"mu must be a power of two in (0, 1), got {mu}")
    return frac.denominator.bit_length() - 1


def derive_params(r: int, k: int, mu) -> GeneratorParams:
    """Parameters for an ``r``-bit output that is ``mu``-almost ``k``-wise independent.

    ``mu`` is a power of two (float, Fraction or ``"2^-e"``-style exact value).
    Each seed half gets ``ceil(log2(h / mu))`` bits: the bias of the powering
    string is at most ``(h - 1) / 2^(t/2)``.
    """
    if r < 2 or not 1 <= k <= r:
        raise ProfileError("need r >= 2 and 1 <= k <= r")
    e = _mu_exponent(mu)
    m = max(1, _ceil_log2(r))
    h = k * m
    half = max(1, _ceil_log2(h) + e)
    return GeneratorParams(r=r, k=k, mu_exp=e, eval_degree=m, h=h, t=2 * half)


@dataclass(frozen=True, eq=False)
class DualDistanceMatrix:
    """``r x h`` matrix stored column-wise, each column packed little-endian into uint64 words."""

    r: int
    k: int
    h: int
    columns: np.ndarray = field(repr=False)

    @property
    def guaranteed_dual_distance(self) -> int:
        return self.k

    @property
    def matrix(self) -> np.ndarray:
        """Dense ``r x h`` uint8 view; only sensible for small ``r``."""
        raw = self.columns.view(np.uint8)
        bits = np.unpackbits(raw, axis=1, bitorder="little")[:, : self.r]
        return np.ascontiguousarray(bits.T)


@lru_cache(maxsize=6)
def build_dual_distance_matrix(r: int, k: int) -> DualDistanceMatrix:
    if r < 2 or not 1 <= k <= r:
        raise ProfileError("need r >= 2 and 1 <= k <= r")
    m = max(1, _ceil_log2(r))
    if m > 31:
        raise ProfileError("evaluation field too large")
    q = (1 << m) - 1
    exp = fields.exp_table(m)
    nwords = (r + 63) // 64
    h = k * m
    cols = np.zeros((h, nwords), dtype=np.uint64)
    # row 0 evaluates the point 0, row j >= 1 the point g^(j-1)
    logs = np.arange(r - 1, dtype=np.int64)
    exp32 = exp.astype("<u4")
    for l in range(k):
        vals = np.empty(r, dtype="<u4")
        vals[0] = 1 if l == 0 else 0
        vals[1:] = exp32[(logs * l) % q]
        bits = np.unpackbits(vals.view(np.uint8).reshape(r, 4), axis=1, bitorder="little")
        packed = np.packbits(bits[:, :m].T, axis=1, bitorder="little")
        block = np.zeros((m, nwords * 8), dtype=np.uint8)
        block[:, : packed.shape[1]] = packed
        cols[l * m : (l + 1) * m] = block.view(np.uint64)
    cols.setflags(write=False)
    return DualDistanceMatrix(r=r, k=k, h=h, columns=cols)


def split_seed(params: GeneratorParams, seed: np.ndarray) -> tuple[int, int]:
    seed = np.asarray(seed, dtype=np.uint8)
    if seed.shape != (params.t,):
        raise ValueError(f"seed must have {params.t} bits, got {seed.shape}")
    return from_bin(seed[: params.half]), from_bin(seed[params.half :])


def seed_from_int(params: GeneratorParams, value: int) -> np.ndarray:
    return int_to_bits(value, params.t)


def inner_bits(params: GeneratorParams, x: int, y: int) -> list[int]:
    """The powering string ``b_i = <x^i, y>`` for ``i < h``."""
    mulx = fields.Multiplier(x, params.half)
    out = []
    p = 1
    for _ in range(params.h):
        out.append((p & y).bit_count() & 1)
        p = mulx(p)
    return out


def _combine(code: DualDistanceMatrix, b: list[int]) -> np.ndarray:
    acc = np.zeros(code.columns.shape[1], dtype=np.uint64)
    cols = code.columns
    for c, bit in enumerate(b):
        if bit:
            acc ^= cols[c]
    return acc


def _check(params: GeneratorParams, code: DualDistanceMatrix) -> None:
    if code.r != params.r or code.h != params.h:
        raise ValueError("generator code does not match the parameters")


def expand_seed_ints(params: GeneratorParams, code: DualDistanceMatrix, x: int, y: int) -> np.ndarray:
    _check(params, code)
    acc = _combine(code, inner_bits(params, x, y))
    return np.unpackbits(acc.view(np.uint8), bitorder="little")[: params.r]


def expand_seed(params: GeneratorParams, code: DualDistanceMatrix, seed: np.ndarray) -> np.ndarray:
    """The ``r`` generator bits for ``seed`` (uint8 vector)."""
    x, y = split_seed(params, seed)
    return expand_seed_ints(params, code, x, y)


def expand_batch(
    params: GeneratorParams, code: DualDistanceMatrix, xs: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Outputs for many seeds at once, shape ``(len(xs), r)``; needs ``t/2 <= 31``.

    Intended for small ``r`` (audits, rank experiments).
    """
    _check(params, code)
    xs = np.asarray(xs, dtype=np.uint64)
    ys = np.asarray(ys, dtype=np.uint64)
    n = xs.size
    b = np.empty((n, params.h), dtype=np.uint8)
    p = np.ones(n, dtype=np.uint64)
    for i in range(params.h):
        b[:, i] = np.bitwise_count(p & ys) & 1
        p = fields.vec_mul(p, xs, params.half)
    A = code.matrix.astype(np.int32)
    return ((b.astype(np.int32) @ A.T) & 1).astype(np.uint8)


def seed_length_bound(params: GeneratorParams) -> int:
    """Minimal even ``t`` with ``t >= ceil(log2(h / mu))`` (the unscaled bound)."""
    t = max(1, _ceil_log2(params.h) + params.mu_exp)
    return t + (t & 1)


def bias_bound(params: GeneratorParams) -> Fraction:
    """Bias of the powering string: ``(h - 1) / 2^(t/2)``."""
    return Fraction(params.h - 1, 1 << params.half)
