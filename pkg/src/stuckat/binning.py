"""Random-binning stuck-at code for tiny N, used as a ground-truth oracle.

Every vector of ``{0,1}^N`` gets a label ``(i, m)``: the level ``i`` is
uniform on ``1..L`` and ``m`` is uniform on ``{0,1}^(n_i)`` with
``n_i = i * N / (L + 1)``. Encoding searches the bin of the wanted label for
a vector that agrees with the cover on the frozen cells; decoding is a table
lookup. Vectors are indexed by their integer value with the first bit as the
most significant one, so "smallest index" means lexicographically smallest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .blockcodec import MemoryImage
from .errors import NotEncodable, ProfileError
from .gf2core import as_bits, from_bin, int_to_bits

__all__ = [
    "BinTable",
    "build_bin_table",
    "binning_encode",
    "binning_decode",
    "select_level",
    "default_epsilon",
    "exhaustive_failure_rate",
    "sampled_failure_rate",
]

MAX_N = 20


@dataclass(frozen=True, eq=False)
class BinTable:
    N: int
    L: int
    rng_seed: int
    level: np.ndarray = field(repr=False)  # uint8, 1..L
    value: np.ndarray = field(repr=False)  # uint32 message as an integer

    @property
    def unit(self) -> int:
        return self.N // (self.L + 1)

    def msg_length(self, level: int) -> int:
        return self.unit * level

    def members(self, level: int, msg) -> np.ndarray:
        msg = as_bits(msg)
        if msg.size != self.msg_length(level):
            raise ValueError(f"level {level} carries {self.msg_length(level)} bits")
        return np.flatnonzero((self.level == level) & (self.value == from_bin(msg)))


def build_bin_table(N: int, L: int, rng_seed: int) -> BinTable:
    if not 1 <= N <= MAX_N:
        raise ProfileError(f"N must be in [1, {MAX_N}]")
    if L < 1 or N % (L + 1):
        raise ProfileError("L + 1 must divide N")
    rng = np.random.default_rng(rng_seed)
    size = 1 << N
    level = rng.integers(1, L + 1, size=size, dtype=np.uint8)
    lengths = (N // (L + 1)) * level.astype(np.int64)
    raw = rng.integers(0, 1 << 32, size=size, dtype=np.uint64)
    value = (raw & ((np.uint64(1) << lengths.astype(np.uint64)) - np.uint64(1))).astype(np.uint32)
    level.setflags(write=False)
    value.setflags(write=False)
    return BinTable(N=N, L=L, rng_seed=rng_seed, level=level, value=value)


def default_epsilon(L: int) -> float:
    """The smallest gap compatible with ``L <= 2/eps <= L + 1``."""
    return 2.0 / (L + 1)


def select_level(N: int, L: int, eps: float, n_frozen: int) -> int:
    """Largest ``j`` with ``(1 - rho) N >= j N / (L + 1) + eps N / 2``; 0 if none."""
    free = N - n_frozen
    best = 0
    for j in range(1, L + 1):
        if free >= j * N / (L + 1) + eps * N / 2 - 1e-12:
            best = j
    return best


def _frozen_int(N: int, frozen: np.ndarray) -> int:
    mask = 0
    for f in frozen.tolist():
        mask |= 1 << (N - 1 - f)
    return mask


def binning_encode(table: BinTable, image: MemoryImage, level: int, msg) -> np.ndarray:
    if image.N != table.N:
        raise ValueError("image length does not match the table")
    if not 1 <= level <= table.L:
        raise ValueError(f"level must be in 1..{table.L}")
    cand = table.members(level, msg)
    fmask = _frozen_int(table.N, image.frozen)
    want = from_bin(image.cover) & fmask
    hits = cand[(cand & fmask) == want]
    if hits.size == 0:
        raise NotEncodable(f"bin ({level}, {as_bits(msg).tolist()}) has no vector matching the frozen cells")
    return int_to_bits(int(hits[0]), table.N)


def binning_decode(table: BinTable, stored) -> tuple[int, np.ndarray]:
    stored = as_bits(stored)
    if stored.size != table.N:
        raise ValueError("stored vector length does not match the table")
    idx = from_bin(stored)
    level = int(table.level[idx])
    return level, int_to_bits(int(table.value[idx]), table.msg_length(level))


def exhaustive_failure_rate(table: BinTable, n_frozen: int, eps: float | None = None) -> tuple[int, int]:
    """Count ``(cover, frozen set, message)`` triples that hit NotEncodable.

    Returns ``(failures, total)``; the level is picked by :func:`select_level`.
    """
    N, L = table.N, table.L
    if N > 12:
        raise ProfileError("exhaustive count is limited to N <= 12")
    eps = default_epsilon(L) if eps is None else eps
    j = select_level(N, L, eps, n_frozen)
    if j == 0:
        raise ProfileError("no level fits this frozen count")
    in_level = table.level == j
    vectors = np.arange(1 << N, dtype=np.int64)
    members = vectors[in_level]
    msgs = table.value[in_level].astype(np.int64)
    nmsg = 1 << table.msg_length(j)
    fails = total = 0
    for F in combinations(range(N), n_frozen):
        fmask = _frozen_int(N, np.array(F, dtype=np.intp))
        # reach[m, pattern]: some member of bin (j, m) shows this frozen pattern
        reach = np.zeros((nmsg, 1 << N), dtype=bool)
        reach[msgs, members & fmask] = True
        ok = reach[:, vectors & fmask]
        fails += int((~ok).sum())
        total += ok.size
    return fails, total


def sampled_failure_rate(
    table: BinTable, n_frozen: int, trials: int, rng_seed: int, eps: float | None = None
) -> tuple[int, int]:
    """Monte Carlo version of :func:`exhaustive_failure_rate` for larger N."""
    N, L = table.N, table.L
    eps = default_epsilon(L) if eps is None else eps
    j = select_level(N, L, eps, n_frozen)
    if j == 0:
        raise ProfileError("no level fits this frozen count")
    rng = np.random.default_rng(rng_seed)
    fails = 0
    for _ in range(trials):
        cover = rng.integers(0, 2, N, dtype=np.uint8)
        frozen = rng.choice(N, n_frozen, replace=False)
        msg = rng.integers(0, 2, table.msg_length(j), dtype=np.uint8)
        try:
            binning_encode(table, MemoryImage(cover, frozen), j, msg)
        except NotEncodable:
            fails += 1
    return fails, trials
