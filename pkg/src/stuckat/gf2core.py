"""GF(2) substrate: bit vectors, matrices, constrained solving, weight flips.

Bit vectors are 1-D ``numpy.uint8`` arrays of 0/1 and matrices are 2-D ones.
Positions are 0-based. Inside the elimination routines each matrix row is
packed into a Python int (bit ``c`` holds column ``c``), which keeps row
operations to a single XOR.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientUnfrozen, RankDeficient

__all__ = [
    "as_bits",
    "index_array",
    "weight",
    "rank",
    "mat_vec_mul",
    "solve_constrained",
    "flip_to_residue",
    "to_bin",
    "from_bin",
    "pack_rows",
    "eliminate",
    "int_to_bits",
    "pack64",
    "batch_eliminate",
]


def as_bits(v: Iterable[int] | np.ndarray | str) -> np.ndarray:
    """Coerce a string like ``"10110"`` or any 0/1 sequence to a uint8 vector."""
    if isinstance(v, str):
        arr = np.frombuffer(v.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(v, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit vector must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bit vector entries must be 0 or 1")
    return arr.astype(np.uint8, copy=False)


def index_array(indices: Iterable[int] | np.ndarray) -> np.ndarray:
    if isinstance(indices, np.ndarray):
        return indices.astype(np.intp, copy=False)
    return np.fromiter(indices, dtype=np.intp)


def weight(v: np.ndarray) -> int:
    return int(np.count_nonzero(v))


def to_bin(value: int, width: int) -> np.ndarray:
    """Binary representation of ``value`` on ``width`` bits, most significant first."""
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return int_to_bits(value, width)


def int_to_bits(value: int, width: int) -> np.ndarray:
    out = np.zeros(width, dtype=np.uint8)
    for i in range(width):
        out[width - 1 - i] = (value >> i) & 1
    return out


def from_bin(bits: Sequence[int] | np.ndarray) -> int:
    value = 0
    for b in np.asarray(bits, dtype=np.uint8).tolist():
        value = (value << 1) | b
    return value


def pack_rows(A: np.ndarray) -> list[int]:
    """Pack each row of a 0/1 matrix into an int, column ``c`` at bit ``c``."""
    A = np.asarray(A, dtype=np.uint8)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    if A.shape[1] == 0:
        return [0] * A.shape[0]
    packed = np.packbits(A, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def eliminate(rows: Sequence[int], nvars: int) -> tuple[int, int | None]:
    """Reduce an augmented system to reduced row-echelon form.

    ``rows`` carry the coefficients in bits ``0..nvars-1`` and the right-hand
    side in bit ``nvars``. Pivots are taken at the lowest set coefficient bit.
    Returns ``(rank, solution)`` where ``solution`` packs the variables with
    every free variable set to 0, or is ``None`` when the system is
    inconsistent.
    """
    varmask = (1 << nvars) - 1
    basis: list[list[int]] = []  # [pivot_bit, row]
    consistent = True
    for row in rows:
        for pb, prow in basis:
            if row & pb:
                row ^= prow
        coeffs = row & varmask
        if not coeffs:
            if row:
                consistent = False
            continue
        pb = coeffs & -coeffs
        for entry in basis:
            if entry[1] & pb:
                entry[1] ^= row
        basis.append([pb, row])
    if not consistent:
        return len(basis), None
    rhs_bit = 1 << nvars
    solution = 0
    for pb, row in basis:
        if row & rhs_bit:
            solution |= pb
    return len(basis), solution


def pack64(rows: np.ndarray) -> np.ndarray:
    """Pack an ``(n, w)`` 0/1 matrix with ``w <= 64`` into uint64, column c at bit c."""
    n, w = rows.shape
    if w > 64:
        raise ValueError("rows wider than 64 bits")
    padded = np.zeros((n, 64), dtype=np.uint8)
    padded[:, :w] = rows
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").ravel().astype(np.uint64)


def batch_eliminate(rows: np.ndarray, ncols: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Jordan on many small systems at once.

    ``rows`` is ``(nsys, R)`` uint64, coefficients in bits ``< ncols`` and the
    right-hand side at bit ``ncols``. Returns ``(rank, solution, consistent)``
    per system, free variables set to 0.
    """
    if not 0 <= ncols < 64:
        raise ValueError("need ncols < 64 so the right-hand side fits")
    rows = np.array(rows, dtype=np.uint64)
    nsys, R = rows.shape
    rank = np.zeros(nsys, dtype=np.intp)
    pivcol = np.full((nsys, R), -1, dtype=np.int64)
    ridx = np.arange(R)
    for c in range(ncols):
        bit = np.uint64(1 << c)
        has = (rows & bit) != 0
        cand = has & (ridx[None, :] >= rank[:, None])
        ok = np.flatnonzero(cand.any(axis=1))
        if ok.size == 0:
            continue
        src = cand[ok].argmax(axis=1)
        dst = rank[ok]
        a, b = rows[ok, src].copy(), rows[ok, dst].copy()
        rows[ok, dst], rows[ok, src] = a, b
        hit = (rows[ok] & bit) != 0
        hit[np.arange(ok.size), dst] = False
        rows[ok] ^= np.where(hit, a[:, None], np.uint64(0))
        pivcol[ok, dst] = c
        rank[ok] += 1
    coeff_mask = np.uint64((1 << ncols) - 1)
    rhs = (rows >> np.uint64(ncols)) & np.uint64(1)
    consistent = ~(((rows & coeff_mask) == 0) & (rhs == 1)).any(axis=1)
    contrib = np.where(pivcol >= 0, rhs << np.clip(pivcol, 0, None).astype(np.uint64), np.uint64(0))
    solution = np.bitwise_or.reduce(contrib, axis=1)
    return rank, solution, consistent


def rank(A: np.ndarray) -> int:
    A = np.asarray(A, dtype=np.uint8)
    if A.size == 0:
        return 0
    r, _ = eliminate(pack_rows(A), A.shape[1])
    return r


def mat_vec_mul(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.uint8)
    v = np.asarray(v, dtype=np.uint8)
    if A.ndim != 2 or v.ndim != 1 or A.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {v.shape}")
    return (A.astype(np.int64) @ v.astype(np.int64) & 1).astype(np.uint8)


def solve_constrained(
    A: np.ndarray, fixed: Mapping[int, int], target: np.ndarray
) -> np.ndarray:
    """Find ``w`` with ``A @ w == target`` and ``w[c] == fixed[c]`` for fixed columns.

    Free variables left undetermined by the elimination are set to 0, so the
    result is a deterministic function of the inputs. Raises
    :class:`RankDeficient` when no such ``w`` exists.
    """
    A = np.asarray(A, dtype=np.uint8)
    target = np.asarray(target, dtype=np.uint8)
    rows, cols = A.shape
    if target.shape != (rows,):
        raise ValueError("target length must equal the number of rows")
    if any(not 0 <= c < cols for c in fixed):
        raise ValueError("fixed column out of range")
    fixed_cols = np.array(sorted(fixed), dtype=np.intp)
    free_cols = np.setdiff1d(np.arange(cols), fixed_cols)
    w = np.zeros(cols, dtype=np.uint8)
    if fixed_cols.size:
        w[fixed_cols] = [fixed[int(c)] & 1 for c in fixed_cols]
    residual = target ^ mat_vec_mul(A[:, fixed_cols], w[fixed_cols])
    aug = np.concatenate([A[:, free_cols], residual[:, None]], axis=1)
    _, sol = eliminate(pack_rows(aug), free_cols.size)
    if sol is None:
        raise RankDeficient("residual target lies outside the span of the free columns")
    w[free_cols] = [(sol >> i) & 1 for i in range(free_cols.size)]
    return w


def flip_to_residue(
    v: np.ndarray, frozen: Iterable[int] | np.ndarray, d: int, x: int
) -> np.ndarray:
    """Flip at most ``d`` unfrozen bits of ``v`` so that its weight is ``x`` mod ``d``.

    The majority value among unfrozen cells is flipped (ties flip ones), taking
    the lowest-indexed occurrences: flipping zeros raises the weight, flipping
    ones lowers it. With at least ``2d`` unfrozen cells the majority always has
    ``d`` members, so this never fails; with fewer it raises
    :class:`InsufficientUnfrozen` only when the majority runs out.
    """
    if d < 1 or not 0 <= x < d:
        raise ValueError("need d >= 1 and 0 <= x < d")
    v = np.asarray(v, dtype=np.uint8)
    mask = np.ones(v.size, dtype=bool)
    mask[index_array(frozen)] = False
    free = np.flatnonzero(mask)
    y = weight(v) % d
    vals = v[free]
    ones = free[vals == 1]
    zeros = free[vals == 0]
    if ones.size >= zeros.size:
        pick, need, value = ones, (y - x) % d, 0
    else:
        pick, need, value = zeros, (x - y) % d, 1
    if need > pick.size:
        raise InsufficientUnfrozen(f"{free.size} unfrozen cells cannot reach residue {x} mod {d}")
    out = v.copy()
    out[pick[:need]] = value
    return out
