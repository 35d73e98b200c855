import inspect

import numpy as np
import pytest

from stuckat import blockcodec as bc
from stuckat import fileio
from stuckat import strongcodec as sc
from stuckat.errors import InvalidPositionCode, MessageTooLong, NoValidInterval, NoValidSubblock, ProfileError
from stuckat.gf2core import weight


@pytest.fixture(scope="module")
def desk():
    return sc.desk_profile()


@pytest.fixture(scope="module")
def small():
    return sc.StrongProfile(N=512, C=4, len22=32)


def image_with(N, frozen, rng):
    return bc.MemoryImage(rng.integers(0, 2, N, dtype=np.uint8), np.asarray(frozen, dtype=np.intp))


def partition_conditions_hold(profile, frozen_mask, part):
    rho = frozen_mask.sum() / profile.N
    lo, hi = part.v2
    unfrozen_tail = (~frozen_mask[part.j :]).sum()
    return (
        frozen_mask[lo:hi].sum() <= (rho + 2 / profile.C) * profile.Bp
        and hi <= part.j
        and unfrozen_tail == profile.V4
        and not frozen_mask[part.j]  # j is as large as possible
    )


def test_partition_without_defects(small):
    part = sc.find_partition(small, [])
    assert part.i == 1
    assert part.j == small.N - small.V4  # 0-based form of N - ceil(N / log N) + 1


def test_partition_skips_packed_interval(small, rng):
    frozen = np.arange(small.Bp)  # whole first interval, rho = 1/4
    part = sc.find_partition(small, frozen)
    assert part.i == 2
    mask = np.zeros(small.N, dtype=bool)
    mask[frozen] = True
    assert partition_conditions_hold(small, mask, part)


def test_partition_random_sweep(small, rng):
    for _ in range(200):
        frozen = rng.choice(small.N, int(0.4 * small.N), replace=False)
        mask = np.zeros(small.N, dtype=bool)
        mask[frozen] = True
        assert partition_conditions_hold(small, mask, sc.find_partition(small, frozen))


def test_partition_out_of_contract(small):
    with pytest.raises(NoValidInterval):
        sc.find_partition(small, np.arange(small.N - 10))


def test_subblock_examples(small, rng):
    part = sc.find_partition(small, [])
    assert sc.find_subblock(small, part, []).i_prime == part.v2[0]
    # a few defects elsewhere keep rho small, the first window is saturated
    frozen = np.concatenate([np.arange(small.len22), [400, 401]])
    part = sc.find_partition(small, frozen)
    lay = sc.find_subblock(small, part, frozen)
    assert lay.window == 1 and lay.i_prime == part.v2[0] + small.len22


def test_subblock_condition_sweep(small, rng):
    for _ in range(200):
        frozen = rng.choice(small.N, int(0.3 * small.N), replace=False)
        mask = np.zeros(small.N, dtype=bool)
        mask[frozen] = True
        rho = mask.mean()
        part = sc.find_partition(small, frozen)
        lay = sc.find_subblock(small, part, frozen)
        a, b = lay.v22
        assert mask[a:b].sum() <= (rho + 2 / small.C) * small.len22
        assert sum(lay.widths) == small.Bp


def test_no_valid_subblock(small):
    part = sc.Partition(i=1, j=small.N - small.V4, Bp=small.Bp, N=small.N)
    with pytest.raises(NoValidSubblock):
        sc.find_subblock(small, part, np.arange(small.Bp))


def test_position_code(desk):
    assert sc.pack_position_code(desk, 1, 0) == 0
    last = sc.pack_position_code(desk, desk.C, (desk.W - 1) * desk.len22)
    assert last == desk.C * desk.W - 1 < desk.mod4
    seen = set()
    for i in range(1, desk.C + 1):
        for w in range(desk.W):
            d = sc.pack_position_code(desk, i, w * desk.len22)
            assert sc.unpack_position_code(desk, d) == (i, w * desk.len22)
            seen.add(d)
    assert seen == set(range(desk.C * desk.W))
    with pytest.raises(InvalidPositionCode):
        sc.unpack_position_code(desk, desk.C * desk.W)
    with pytest.raises(ValueError):
        sc.pack_position_code(desk, 1, 7)


def test_desk_profile_constants(desk):
    assert (desk.W, desk.mod2, desk.mod4, desk.V4) == (6, 1024, 32, 1171)
    assert desk.outer.meta_length == 149 and desk.K == 3
    for rho in (0.05, 0.1, 0.2, 0.3):
        desk.validate(rho)
    with pytest.raises(ProfileError):
        desk.validate(0.55)


def test_profile_rejects_bad_moduli():
    with pytest.raises(ProfileError):
        sc.StrongProfile(N=1 << 14, C=4, len22=600, mod2=512)
    with pytest.raises(ProfileError):
        sc.StrongProfile(N=1 << 14, C=4, len22=600, mod4=16)
    with pytest.raises(ProfileError):
        sc.StrongProfile(N=1 << 14, C=4, len22=5000)


def test_profile_file_roundtrip(desk, tmp_path):
    fileio.dump_profile(tmp_path / "p.txt", desk)
    assert fileio.load_profile(tmp_path / "p.txt") == desk


def test_decoder_signature_has_no_rho():
    assert list(inspect.signature(sc.decode).parameters) == ["profile", "stored"]


@pytest.mark.parametrize("rho", [0.0, 0.05, 0.15, 0.3])
def test_roundtrip_and_layering(desk, rho):
    rng = np.random.default_rng(int(rho * 100))
    for _ in range(4):
        img = image_with(desk.N, rng.choice(desk.N, int(rho * desk.N), replace=False), rng)
        msg = rng.integers(0, 2, sc.strong_capacity(desk, img), dtype=np.uint8)
        res = sc.encode_detailed(desk, img, msg, rng)
        w = res.stored
        assert img.consistent(w)
        assert res.flips2 <= desk.mod2 and res.flips4 <= desk.mod4
        lo, hi = res.partition.v2
        d = weight(w) % desk.mod4
        assert sc.unpack_position_code(desk, d) == (res.partition.i, res.layout.i_prime - lo)
        assert weight(w[lo:hi]) % desk.mod2 < 1 << desk.u2_length
        # all writes outside v2 and the tail come from the outer codec only
        assert np.array_equal(sc.decode(desk, w), msg)


def test_same_message_different_defects(desk, rng):
    msg = rng.integers(0, 2, 1500, dtype=np.uint8)
    outs = []
    for rho in (0.1, 0.25):
        img = image_with(desk.N, rng.choice(desk.N, int(rho * desk.N), replace=False), rng)
        w = sc.encode(desk, img, msg, rng)
        outs.append(w)
        assert np.array_equal(sc.decode(desk, w), msg)
    assert not np.array_equal(outs[0], outs[1])


def test_message_too_long(desk, rng):
    img = image_with(desk.N, rng.choice(desk.N, int(0.2 * desk.N), replace=False), rng)
    cap = sc.strong_capacity(desk, img)
    with pytest.raises(MessageTooLong):
        sc.encode(desk, img, np.zeros(cap + 1, dtype=np.uint8), rng)
