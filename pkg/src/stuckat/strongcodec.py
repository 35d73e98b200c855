"""Strong stuck-at codec: no side channel, the decoder sees only the stored bits.

Layout of an ``N``-bit memory with ``B' = N / C``:

* ``v2 = [(i-1) B', i B')`` holds the outer metadata. Inside it an aligned
  window ``v22`` of ``len22`` cells stores the outer metadata ``u1`` with a
  nested block codec; the weight of ``v2`` modulo ``mod2`` carries the nested
  chain start ``u2``.
* ``v4 = [j, N)`` is the shortest suffix with ``V4 = ceil(N / log2 N)``
  unfrozen cells; flips there make the total weight congruent to the
  position code of ``(i, window)`` modulo ``mod4``.
* Everything else carries the message through the outer block codec.

Every outer block touching ``v2`` or ``v4`` is treated as frozen by the outer
encoder, so later flips never disturb an outer chain block. The nested codec
uses a fixed seed derived from the profile, hence ``u2`` is only the chain
start ``Bin(first_block) || Bin(first_count)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np

from . import blockcodec as bc
from .errors import (
    InsufficientUnfrozen,
    InvalidPositionCode,
    MalformedChain,
    MessageTooLong,
    NoValidInterval,
    NoValidSubblock,
    ProfileError,
    RankDeficient,
)
from .gf2core import as_bits, flip_to_residue, from_bin, index_array, to_bin, weight

__all__ = [
    "StrongProfile",
    "desk_profile",
    "Partition",
    "NestedLayout",
    "StrongEncodeResult",
    "find_partition",
    "find_subblock",
    "candidate_subblocks",
    "pack_position_code",
    "unpack_position_code",
    "strong_capacity",
    "encode",
    "encode_detailed",
    "decode",
]


def _ceil_log2(n: int) -> int:
    return max(0, (n - 1).bit_length())


def _next_pow2(n: int) -> int:
    return 1 << _ceil_log2(max(1, n))


@dataclass(frozen=True)
class StrongProfile:
    """Constants shared by the strong encoder and decoder.

    ``mod2`` and ``mod4`` default to the smallest values that make the
    residues decodable: ``2^|u2|`` and the power of two covering all
    ``C * W`` position codes.
    """

    N: int
    C: int
    len22: int
    inner_C: int = 4
    inner_s: int | None = None
    outer_s: int | None = None
    mod2: int | None = None
    mod4: int | None = None

    def __post_init__(self):
        if self.C < 3:
            raise ProfileError("C must be at least 3")
        if self.N % self.C:
            raise ProfileError("C must divide N")
        if not 0 < self.len22 <= self.N // self.C:
            raise ProfileError("len22 must fit inside one metadata interval")
        # pin the slack defaults so equal codes compare equal
        object.__setattr__(self, "outer_s", self.outer.s)
        object.__setattr__(self, "inner_s", self.inner.s)
        if self.mod2 is None:
            object.__setattr__(self, "mod2", 1 << self.u2_length)
        elif self.mod2 < 1 << self.u2_length:
            raise ProfileError(f"mod2 must be at least 2^{self.u2_length}")
        if self.mod4 is None:
            object.__setattr__(self, "mod4", _next_pow2(self.C * self.W))
        elif self.mod4 < self.C * self.W:
            raise ProfileError(f"mod4 must be at least {self.C * self.W}")

    @cached_property
    def outer(self) -> bc.ParamProfile:
        return bc.make_profile(self.N, self.C, s=self.outer_s)

    @cached_property
    def inner(self) -> bc.ParamProfile:
        return bc.make_profile(self.len22, self.inner_C, s=self.inner_s)

    @property
    def Bp(self) -> int:
        return self.N // self.C

    @property
    def delta(self) -> float:
        return 1.0 / self.C

    @property
    def W(self) -> int:
        """Aligned windows per metadata interval."""
        return self.Bp // self.len22

    @property
    def V4(self) -> int:
        return -(-self.N // _ceil_log2(self.N))

    @property
    def u2_length(self) -> int:
        return self.inner.p + self.inner.q

    @property
    def K(self) -> int:
        return self.outer.K

    @cached_property
    def inner_seed(self) -> np.ndarray:
        """Fixed nested seed, a hash of the parameters that define the nested code."""
        t = self.inner.t
        tag = f"stuckat/nested-seed/N={self.len22}/C={self.inner_C}/t={t}".encode()
        raw = np.frombuffer(hashlib.shake_256(tag).digest((t + 7) // 8), dtype=np.uint8)
        bits = np.unpackbits(raw)[:t]
        bits.setflags(write=False)
        return bits

    def as_dict(self) -> dict[str, int]:
        return {
            "N": self.N,
            "C": self.C,
            "K": self.K,
            "delta_den": self.C,
            "len22": self.len22,
            "mod2": self.mod2,
            "mod4": self.mod4,
            "inner_C": self.inner_C,
            "inner_s": self.inner.s,
            "outer_s": self.outer.s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StrongProfile":
        prof = cls(
            N=int(d["N"]),
            C=int(d["C"]),
            len22=int(d["len22"]),
            inner_C=int(d["inner_C"]),
            inner_s=int(d["inner_s"]),
            outer_s=int(d["outer_s"]),
            mod2=int(d["mod2"]),
            mod4=int(d["mod4"]),
        )
        for key in ("K", "delta_den"):
            if key in d and int(d[key]) != prof.as_dict()[key]:
                raise ProfileError(f"{key} = {d[key]} disagrees with the derived value")
        return prof

    def margins(self, rho: float) -> dict[str, float]:
        """Expected slack of each structural requirement at a uniform defect fraction."""
        inner_cap = self.inner.M * max(0.0, (1 - rho) * self.inner.B - self.inner.overhead)
        return {
            "defect_range": (1 - rho) - 2 * self.delta,
            "nested_capacity": inner_cap - self.outer.meta_length,
            "v2_flip_room": (1 - rho) * (self.Bp - self.len22) - 2 * self.mod2,
            "v4_flip_room": self.V4 - 2 * self.mod4,
        }

    def validate(self, rho: float) -> None:
        bad = {k: v for k, v in self.margins(rho).items() if v <= 0}
        if bad:
            raise ProfileError(f"profile infeasible at rho={rho}: {bad}")


def desk_profile(N: int = 1 << 14, C: int = 4, len22: int = 600, inner_C: int = 4, inner_s: int = 6) -> StrongProfile:
    """Parameters that work at N = 2^14 for defect fractions up to about 0.3."""
    return StrongProfile(N=N, C=C, len22=len22, inner_C=inner_C, inner_s=inner_s)


@dataclass(frozen=True)
class Partition:
    i: int  # 1-based metadata interval
    j: int  # 0-based start of the tail region v4
    Bp: int
    N: int

    @property
    def v2(self) -> tuple[int, int]:
        return (self.i - 1) * self.Bp, self.i * self.Bp

    @property
    def v4(self) -> tuple[int, int]:
        return self.j, self.N

    @property
    def v1(self) -> tuple[int, int]:
        return 0, self.v2[0]

    @property
    def v3(self) -> tuple[int, int]:
        return self.v2[1], self.j


@dataclass(frozen=True)
class NestedLayout:
    i_prime: int  # 0-based absolute start of v22
    window: int
    len22: int
    v2: tuple[int, int]

    @property
    def v22(self) -> tuple[int, int]:
        return self.i_prime, self.i_prime + self.len22

    @property
    def widths(self) -> tuple[int, int, int]:
        lo, hi = self.v2
        return self.i_prime - lo, self.len22, hi - self.i_prime - self.len22


class StrongEncodeResult(NamedTuple):
    stored: np.ndarray
    partition: Partition
    layout: NestedLayout
    outer_attempts: int
    windows_tried: int
    flips2: int
    flips4: int


def _mask(N: int, frozen) -> np.ndarray:
    if isinstance(frozen, bc.MemoryImage):
        return frozen.frozen_mask
    m = np.zeros(N, dtype=bool)
    m[index_array(frozen)] = True
    return m


def _tail_start(profile: StrongProfile, fmask: np.ndarray) -> int:
    free = np.flatnonzero(~fmask)
    if free.size < profile.V4:
        raise NoValidInterval(f"only {free.size} unfrozen cells, the tail needs {profile.V4}")
    return int(free[-profile.V4])


def _threshold(profile: StrongProfile, fmask: np.ndarray, length: int) -> float:
    rho = fmask.sum() / profile.N
    return (rho + 2 * profile.delta) * length


def _valid_intervals(profile: StrongProfile, fmask: np.ndarray) -> Iterator[Partition]:
    j = _tail_start(profile, fmask)
    limit = _threshold(profile, fmask, profile.Bp)
    counts = fmask.reshape(profile.C, profile.Bp).sum(axis=1)
    for i in range(1, profile.C + 1):
        if i * profile.Bp <= j and counts[i - 1] <= limit + 1e-9:
            yield Partition(i=i, j=j, Bp=profile.Bp, N=profile.N)


def find_partition(profile: StrongProfile, frozen) -> Partition:
    """Smallest interval ``i`` left of the tail whose frozen count is at most ``(rho + 2/C) B'``."""
    fmask = _mask(profile.N, frozen)
    for part in _valid_intervals(profile, fmask):
        return part
    raise NoValidInterval("no metadata interval satisfies both conditions")


def candidate_subblocks(profile: StrongProfile, partition: Partition, frozen) -> Iterator[NestedLayout]:
    fmask = _mask(profile.N, frozen)
    limit = _threshold(profile, fmask, profile.len22)
    lo, hi = partition.v2
    for w in range(profile.W):
        start = lo + w * profile.len22
        if fmask[start : start + profile.len22].sum() <= limit + 1e-9:
            yield NestedLayout(i_prime=start, window=w, len22=profile.len22, v2=(lo, hi))


def find_subblock(profile: StrongProfile, partition: Partition, frozen) -> NestedLayout:
    for layout in candidate_subblocks(profile, partition, frozen):
        return layout
    raise NoValidSubblock("no aligned window satisfies the frozen-count bound")


def pack_position_code(profile: StrongProfile, i: int, i_prime: int) -> int:
    """``d = (i - 1) W + i_prime / len22`` for an offset ``i_prime`` relative to the start of v2."""
    if not 1 <= i <= profile.C:
        raise ValueError(f"interval {i} out of range")
    window, rem = divmod(i_prime, profile.len22)
    if rem or not 0 <= window < profile.W:
        raise ValueError(f"offset {i_prime} is not an aligned window start")
    return (i - 1) * profile.W + window


def unpack_position_code(profile: StrongProfile, d: int) -> tuple[int, int]:
    if not 0 <= d < profile.C * profile.W:
        raise InvalidPositionCode(f"position code {d} outside [0, {profile.C * profile.W})")
    i, window = divmod(d, profile.W)
    return i + 1, window * profile.len22


def _guard_cells(profile: StrongProfile, part: Partition) -> np.ndarray:
    """Cells of every outer block that intersects v2 or v4."""
    B, M = profile.outer.B, profile.outer.M
    lo, hi = part.v2
    blocks = set(range(lo // B, min(M, -(-hi // B))))
    blocks.update(range(part.j // B, M))
    idx = np.array(sorted(blocks), dtype=np.intp)
    cells = (idx[:, None] * B + np.arange(B)).ravel()
    return np.concatenate([cells, np.arange(lo, hi), np.arange(part.j, profile.N)])


def _outer_image(profile: StrongProfile, image: bc.MemoryImage, part: Partition) -> bc.MemoryImage:
    return image.with_frozen(_guard_cells(profile, part))


def strong_capacity(profile: StrongProfile, image: bc.MemoryImage) -> int:
    """Largest message the encoder accepts (outer capacity after guarding)."""
    part = find_partition(profile, image)
    return bc.capacity(profile.outer, _outer_image(profile, image, part))


def encode_detailed(
    profile: StrongProfile, image: bc.MemoryImage, msg, seed_source: bc.SeedSource, retries: int = 16
) -> StrongEncodeResult:
    msg = as_bits(msg)
    if image.N != profile.N:
        raise ValueError("image length does not match the profile")
    part = find_partition(profile, image)
    outer_img = _outer_image(profile, image, part)
    cap = bc.capacity(profile.outer, outer_img)
    if msg.size > cap:
        raise MessageTooLong(f"message of {msg.size} bits exceeds capacity {cap}")
    w, meta1, attempts = bc.encode_with_sidechannel(profile.outer, outer_img, msg, seed_source, retries)
    u1 = meta1.to_bits(profile.outer)

    fmask = image.frozen_mask
    lo, hi = part.v2
    tried = 0
    last_error: Exception | None = None
    for layout in candidate_subblocks(profile, part, image):
        tried += 1
        a, b = layout.v22
        sub = bc.MemoryImage(w[a:b], np.flatnonzero(fmask[a:b]))
        try:
            w22, meta2 = bc.encode_with_seed(profile.inner, sub, u1, profile.inner_seed)
        except (RankDeficient, MessageTooLong) as exc:
            last_error = exc
            continue
        U = from_bin(np.concatenate([to_bin(meta2.first_block, profile.inner.p), to_bin(meta2.first_count, profile.inner.q)]))
        outside = np.concatenate([np.arange(lo, a), np.arange(b, hi)])
        x = (U - weight(w22)) % profile.mod2
        try:
            flipped = flip_to_residue(w[outside], np.flatnonzero(fmask[outside]), profile.mod2, x)
        except InsufficientUnfrozen as exc:
            last_error = exc
            continue
        out = w.copy()
        out[a:b] = w22
        flips2 = int(np.count_nonzero(flipped != out[outside]))
        out[outside] = flipped
        break
    else:
        if last_error is None:
            raise NoValidSubblock("no aligned window satisfies the frozen-count bound")
        raise last_error

    d = pack_position_code(profile, part.i, layout.i_prime - lo)
    tail = np.arange(part.j, profile.N)
    x = (d - (weight(out) - weight(out[tail]))) % profile.mod4
    new_tail = flip_to_residue(out[tail], np.flatnonzero(fmask[tail]), profile.mod4, x)
    flips4 = int(np.count_nonzero(new_tail != out[tail]))
    out[tail] = new_tail
    return StrongEncodeResult(out, part, layout, attempts, tried, flips2, flips4)


def encode(profile: StrongProfile, image: bc.MemoryImage, msg, seed_source: bc.SeedSource, retries: int = 16) -> np.ndarray:
    return encode_detailed(profile, image, msg, seed_source, retries).stored


def decode(profile: StrongProfile, stored) -> np.ndarray:
    """Recover the message from the stored vector alone."""
    stored = as_bits(stored)
    if stored.size != profile.N:
        raise ValueError("stored vector length does not match the profile")
    i, offset = unpack_position_code(profile, weight(stored) % profile.mod4)
    lo = (i - 1) * profile.Bp
    U = weight(stored[lo : lo + profile.Bp]) % profile.mod2
    if U >> profile.u2_length:
        raise MalformedChain(f"nested chain start {U} does not fit in {profile.u2_length} bits")
    inner = profile.inner
    u2 = to_bin(U, profile.u2_length)
    meta2 = bc.SideChannelMetadata(profile.inner_seed, from_bin(u2[: inner.p]), from_bin(u2[inner.p :]))
    a = lo + offset
    u1 = bc.decode_with_sidechannel(inner, stored[a : a + profile.len22], meta2)
    if u1.size != profile.outer.meta_length:
        raise MalformedChain(f"nested payload has {u1.size} bits, expected {profile.outer.meta_length}")
    meta1 = bc.SideChannelMetadata.from_bits(profile.outer, u1)
    return bc.decode_with_sidechannel(profile.outer, stored, meta1)
