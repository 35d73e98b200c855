"""Block-chained stuck-at codec that relies on a clean side channel.

The memory is cut into ``M`` blocks of ``B`` bits (1-indexed; index 0 is the
chain terminator). Block ``i`` that takes part in the chain stores

    A_i @ w_i = msg_i || Bin(next, p) || Bin(m_next, q)

where ``A_i`` is an ``mbar_i x B`` matrix cut from the generator output and
only unfrozen coordinates of ``w_i`` are chosen by the encoder. The decoder
needs the generator seed plus the first chain entry, which travel on the
side channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, NamedTuple, Union

import numpy as np

from . import smallbias
from .errors import MalformedChain, MessageTooLong, ProfileError, RankDeficient, SearchExhausted
from .gf2core import as_bits, batch_eliminate, eliminate, from_bin, index_array, pack64, pack_rows, to_bin

__all__ = [
    "ParamProfile",
    "make_profile",
    "MemoryImage",
    "BlockPlan",
    "SideChannelMetadata",
    "EncodeResult",
    "plan_blocks",
    "capacity",
    "contract_length",
    "encode_with_seed",
    "encode_with_sidechannel",
    "decode_with_sidechannel",
    "deterministic_seed_search",
    "seed_supplier",
    "block_matrices",
]

SeedSource = Union[np.random.Generator, Callable[[], np.ndarray]]


def _ceil_log2(n: int) -> int:
    return max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class ParamProfile:
    """Scheme constants shared by encoder and decoder."""

    N: int
    C: int
    B: int
    M: int
    p: int  # pointer width, indices 0..M
    q: int  # count width, counts 0..B
    s: int  # rank slack
    gen: smallbias.GeneratorParams

    @property
    def mu(self):
        return self.gen.mu

    @property
    def t(self) -> int:
        return self.gen.t

    @property
    def overhead(self) -> int:
        return self.p + self.q + self.s

    @property
    def meta_length(self) -> int:
        return self.gen.t + self.p + self.q

    @property
    def K(self) -> int:
        """Smallest integer K with ``t + p + q <= K * C * ceil(log2 N)``."""
        unit = self.C * _ceil_log2(self.N)
        return -(-self.meta_length // unit)

    @cached_property
    def code(self) -> smallbias.DualDistanceMatrix:
        return smallbias.build_dual_distance_matrix(self.gen.r, self.gen.k)

    def block_range(self, i: int) -> tuple[int, int]:
        """0-based half-open cell range of 1-based block ``i``."""
        return (i - 1) * self.B, i * self.B

    def expand(self, seed: np.ndarray) -> np.ndarray:
        return smallbias.expand_seed(self.gen, self.code, seed)


def make_profile(
    N: int,
    C: int,
    *,
    B: int | None = None,
    s: int | None = None,
    k: int | None = None,
    mu=None,
) -> ParamProfile:
    """Profile with ``B = C * ceil(log2 N)`` unless overridden.

    The generator defaults to ``k = B`` and ``mu = 2^-B`` (that is ``N^-C``
    for ``N`` a power of two); ``r = B * N`` bits cover every block.
    """
    if C < 3:
        raise ProfileError("C must be at least 3")
    if N < 4:
        raise ProfileError("N must be at least 4")
    B = C * _ceil_log2(N) if B is None else B
    M = N // B
    if M < 1:
        raise ProfileError(f"block length {B} exceeds N = {N}")
    p = _ceil_log2(M + 1)
    q = _ceil_log2(B + 1)
    s = p if s is None else s
    if s < 0:
        raise ProfileError("slack must be non-negative")
    k = B if k is None else k
    mu = 2.0 ** -B if mu is None else mu
    gen = smallbias.derive_params(B * N, k, mu)
    return ParamProfile(N=N, C=C, B=B, M=M, p=p, q=q, s=s, gen=gen)


@dataclass(frozen=True, eq=False)
class MemoryImage:
    """Cover vector plus its frozen (stuck) positions, 0-based."""

    cover: np.ndarray
    frozen: np.ndarray

    def __post_init__(self):
        cover = as_bits(self.cover).copy()
        frozen = np.unique(index_array(self.frozen))
        if frozen.size and (frozen[0] < 0 or frozen[-1] >= cover.size):
            raise ValueError("frozen index out of range")
        cover.setflags(write=False)
        frozen.setflags(write=False)
        object.__setattr__(self, "cover", cover)
        object.__setattr__(self, "frozen", frozen)

    @property
    def N(self) -> int:
        return self.cover.size

    @property
    def rho(self) -> float:
        return self.frozen.size / self.N if self.N else 0.0

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=bool)
        mask[self.frozen] = True
        mask.setflags(write=False)
        return mask

    def with_frozen(self, extra: Iterable[int] | np.ndarray) -> "MemoryImage":
        return MemoryImage(self.cover, np.union1d(self.frozen, index_array(extra)))

    def consistent(self, w: np.ndarray) -> bool:
        return bool(np.array_equal(np.asarray(w)[self.frozen], self.cover[self.frozen]))


@dataclass(frozen=True)
class BlockPlan:
    """Per-block budgets (index 0 unused so that block ``i`` sits at ``[i]``)."""

    unfrozen: np.ndarray
    m: np.ndarray
    mbar: np.ndarray
    chain: tuple[int, ...]
    B: int

    @property
    def rho(self) -> np.ndarray:
        return 1.0 - self.unfrozen[1:] / self.B

    @property
    def total(self) -> int:
        return int(self.m.sum())


@dataclass(frozen=True)
class SideChannelMetadata:
    seed: np.ndarray = field(repr=False)
    first_block: int
    first_count: int

    def to_bits(self, profile: ParamProfile) -> np.ndarray:
        seed = as_bits(self.seed)
        if seed.size != profile.t:
            raise ValueError("seed length does not match the profile")
        return np.concatenate(
            [seed, to_bin(self.first_block, profile.p), to_bin(self.first_count, profile.q)]
        )

    @classmethod
    def from_bits(cls, profile: ParamProfile, bits) -> "SideChannelMetadata":
        bits = as_bits(bits)
        if bits.size != profile.meta_length:
            raise ValueError(f"metadata must have {profile.meta_length} bits, got {bits.size}")
        t, p = profile.t, profile.p
        return cls(
            seed=bits[:t].copy(),
            first_block=from_bin(bits[t : t + p]),
            first_count=from_bin(bits[t + p :]),
        )

    def __eq__(self, other):
        if not isinstance(other, SideChannelMetadata):
            return NotImplemented
        return (
            np.array_equal(self.seed, other.seed)
            and self.first_block == other.first_block
            and self.first_count == other.first_count
        )

    __hash__ = None


class EncodeResult(NamedTuple):
    stored: np.ndarray
    meta: SideChannelMetadata
    attempts: int


def _unfrozen_per_block(profile: ParamProfile, frozen_mask: np.ndarray) -> np.ndarray:
    used = profile.M * profile.B
    per = profile.B - frozen_mask[:used].reshape(profile.M, profile.B).sum(axis=1)
    return np.concatenate([[0], per]).astype(np.int64)


def _mask_of(profile: ParamProfile, frozen) -> np.ndarray:
    if isinstance(frozen, MemoryImage):
        return frozen.frozen_mask
    mask = np.zeros(profile.N, dtype=bool)
    mask[index_array(frozen)] = True
    return mask


def capacity(profile: ParamProfile, frozen) -> int:
    """Largest message length the planner accepts for this frozen set."""
    avail = _unfrozen_per_block(profile, _mask_of(profile, frozen)) - profile.overhead
    return int(np.clip(avail, 0, None).sum())


def contract_length(profile: ParamProfile, rho: float, slack_terms: int = 3) -> int:
    """``floor((1 - rho - slack_terms/C) N)`` clamped at zero; the guaranteed rate floor."""
    n = profile.N
    value = (1.0 - rho - slack_terms / profile.C) * n
    return max(0, int(np.floor(value + 1e-9)))


def plan_blocks(profile: ParamProfile, frozen, msg_len: int) -> BlockPlan:
    """Greedy left-to-right allocation of message bits to blocks."""
    if msg_len < 0:
        raise ValueError("negative message length")
    unfrozen = _unfrozen_per_block(profile, _mask_of(profile, frozen))
    avail = np.clip(unfrozen - profile.overhead, 0, None)
    avail[0] = 0
    if int(avail.sum()) < msg_len:
        raise MessageTooLong(f"message of {msg_len} bits exceeds capacity {int(avail.sum())}")
    before = np.concatenate([[0], np.cumsum(avail)[:-1]])
    m = np.clip(np.minimum(avail, msg_len - before), 0, None)
    mbar = np.where(m > 0, m + profile.p + profile.q, 0)
    chain = tuple(int(i) for i in np.flatnonzero(m))
    return BlockPlan(unfrozen=unfrozen, m=m, mbar=mbar, chain=chain, B=profile.B)


def seed_supplier(source: SeedSource, t: int) -> Callable[[], np.ndarray]:
    if isinstance(source, np.random.Generator):
        return lambda: source.integers(0, 2, size=t, dtype=np.uint8)
    if callable(source):
        return lambda: as_bits(source())
    raise TypeError("seed source must be a numpy Generator or a callable")


def block_matrices(profile: ParamProfile, plan: BlockPlan, bits: np.ndarray) -> dict[int, np.ndarray]:
    """Dense ``A_i`` for every chain block, cut consecutively from ``bits``."""
    out = {}
    off = 0
    B = profile.B
    for i in plan.chain:
        n = int(plan.mbar[i]) * B
        out[i] = bits[off : off + n].reshape(-1, B)
        off += n
    return out


def _targets(profile: ParamProfile, plan: BlockPlan, msg: np.ndarray) -> dict[int, np.ndarray]:
    out = {}
    off = 0
    chain = plan.chain
    for j, i in enumerate(chain):
        mi = int(plan.m[i])
        nxt = chain[j + 1] if j + 1 < len(chain) else 0
        mnext = int(plan.m[nxt]) if nxt else 0
        out[i] = np.concatenate([msg[off : off + mi], to_bin(nxt, profile.p), to_bin(mnext, profile.q)])
        off += mi
    return out


def encode_with_seed(
    profile: ParamProfile, image: MemoryImage, msg, seed, plan: BlockPlan | None = None
) -> tuple[np.ndarray, SideChannelMetadata]:
    """One encoding attempt with a fixed seed; raises RankDeficient on failure."""
    msg = as_bits(msg)
    seed = as_bits(seed)
    if image.N != profile.N:
        raise ValueError("image length does not match the profile")
    if plan is None:
        plan = plan_blocks(profile, image, msg.size)
    w = image.cover.copy()
    chain = plan.chain
    first = chain[0] if chain else 0
    meta = SideChannelMetadata(seed=seed.copy(), first_block=first, first_count=int(plan.m[first]) if first else 0)
    if not chain:
        return w, meta
    bits = profile.expand(seed)
    mats = block_matrices(profile, plan, bits)
    targets = _targets(profile, plan, msg)
    if profile.B < 64:
        _solve_fast(profile, image, plan, mats, targets, w)
    else:
        _solve_slow(profile, image, plan, mats, targets, w)
    return w, meta


def _solve_fast(profile, image, plan, mats, targets, w) -> None:
    B = profile.B
    chain = np.array(plan.chain, dtype=np.intp)
    mbar = plan.mbar[chain]
    nrows = int(mbar.sum())
    # every chain row, its block (position in the chain) and its row index inside the block
    A = np.concatenate([mats[i] for i in plan.chain])
    owner = np.repeat(np.arange(chain.size), mbar)
    local = np.arange(nrows) - np.repeat(np.cumsum(mbar) - mbar, mbar)
    cells = (chain[:, None] - 1) * B + np.arange(B)
    free = ~image.frozen_mask[cells]
    stuck_one = (~free & (image.cover[cells] == 1)).astype(np.uint8)
    rhs = np.concatenate([targets[i] for i in plan.chain])
    rhs ^= ((A & stuck_one[owner]).sum(axis=1) & 1).astype(np.uint8)
    packed = pack64(np.concatenate([A & free[owner].astype(np.uint8), rhs[:, None]], axis=1))
    rows = np.zeros((chain.size, int(mbar.max())), dtype=np.uint64)
    rows[owner, local] = packed
    rank, sol, ok = batch_eliminate(rows, B)
    bad = np.flatnonzero((rank != mbar) | ~ok)
    if bad.size:
        raise RankDeficient(f"block {chain[bad[0]]} restricted matrix is not full rank")
    x = ((sol[:, None] >> np.arange(B, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)
    w[cells[free]] = x[free]


def _solve_slow(profile, image, plan, mats, targets, w) -> None:
    fmask = image.frozen_mask
    cover = image.cover
    for i in plan.chain:
        lo, hi = profile.block_range(i)
        free = np.flatnonzero(~fmask[lo:hi])
        fixed = np.flatnonzero(fmask[lo:hi])
        A = mats[i]
        rhs = targets[i] ^ ((A[:, fixed].astype(np.int64) @ cover[lo:hi][fixed]) & 1).astype(np.uint8)
        aug = np.concatenate([A[:, free], rhs[:, None]], axis=1)
        rk, sol = eliminate(pack_rows(aug), free.size)
        if sol is None or rk != A.shape[0]:
            raise RankDeficient(f"block {i} restricted matrix is not full rank")
        w[lo + free] = [(sol >> c) & 1 for c in range(free.size)]


def encode_with_sidechannel(
    profile: ParamProfile, image: MemoryImage, msg, seed_source: SeedSource, retries: int = 16
) -> EncodeResult:
    """Randomized encoder: fresh seeds until every chain block is full rank."""
    if retries < 1:
        raise ValueError("retries must be at least 1")
    msg = as_bits(msg)
    plan = plan_blocks(profile, image, msg.size)
    draw = seed_supplier(seed_source, profile.t)
    for attempt in range(1, retries + 1):
        try:
            w, meta = encode_with_seed(profile, image, msg, draw(), plan)
        except RankDeficient:
            continue
        return EncodeResult(w, meta, attempt)
    raise RankDeficient(f"no full-rank seed in {retries} attempts")


def decode_with_sidechannel(profile: ParamProfile, stored, meta: SideChannelMetadata) -> np.ndarray:
    stored = as_bits(stored)
    if stored.size != profile.N:
        raise ValueError("stored vector length does not match the profile")
    B, p, q = profile.B, profile.p, profile.q
    block, count = meta.first_block, meta.first_count
    if block == 0:
        if count:
            raise MalformedChain("empty chain with a nonzero count")
        return np.zeros(0, dtype=np.uint8)
    bits = profile.expand(as_bits(meta.seed))
    pieces = []
    off = 0
    prev = 0
    while block:
        if block > profile.M or block <= prev:
            raise MalformedChain(f"pointer {block} after block {prev}")
        mbar = count + p + q
        if count < 1 or mbar > B:
            raise MalformedChain(f"count {count} impossible in block {block}")
        A = bits[off : off + mbar * B].reshape(mbar, B)
        off += mbar * B
        lo, hi = profile.block_range(block)
        y = ((A.astype(np.int64) @ stored[lo:hi]) & 1).astype(np.uint8)
        pieces.append(y[:count])
        prev = block
        block = from_bin(y[count : count + p])
        count = from_bin(y[count + p :])
    return np.concatenate(pieces)


def _full_rank(profile: ParamProfile, image: MemoryImage, plan: BlockPlan, bits: np.ndarray) -> bool:
    fmask = image.frozen_mask
    for i, A in block_matrices(profile, plan, bits).items():
        lo, hi = profile.block_range(i)
        sub = A[:, ~fmask[lo:hi]]
        rk, _ = eliminate(pack_rows(sub), sub.shape[1])
        if rk != A.shape[0]:
            return False
    return True


def deterministic_seed_search(
    profile: ParamProfile, image: MemoryImage, plan: BlockPlan, budget: int
) -> np.ndarray:
    """Lexicographically first seed (MSB first) making every chain block full rank."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    limit = min(budget, 1 << profile.t)
    for value in range(limit):
        seed = to_bin(value, profile.t)
        if not plan.chain or _full_rank(profile, image, plan, profile.expand(seed)):
            return seed
    raise SearchExhausted(f"no full-rank seed among the first {limit}")
