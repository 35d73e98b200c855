import numpy as np
import pytest

from stuckat import binning as bn
from stuckat.blockcodec import MemoryImage
from stuckat.errors import NotEncodable, ProfileError
from stuckat.experiments import binning_oracle
from stuckat.gf2core import from_bin, int_to_bits


@pytest.fixture(scope="module")
def table8():
    return bn.build_bin_table(8, 3, 0)


def chi2(counts, expected):
    return float(((counts - expected) ** 2 / expected).sum())


def chi2_limit(df):
    # generous normal approximation, about six standard deviations
    return df + 6 * np.sqrt(2 * df)


def test_table_is_deterministic():
    a, b = bn.build_bin_table(10, 4, 7), bn.build_bin_table(10, 4, 7)
    assert np.array_equal(a.level, b.level) and np.array_equal(a.value, b.value)
    c = bn.build_bin_table(10, 4, 8)
    assert not np.array_equal(a.level, c.level)


def test_table_validation():
    with pytest.raises(ProfileError):
        bn.build_bin_table(9, 3, 0)
    with pytest.raises(ProfileError):
        bn.build_bin_table(24, 3, 0)


def test_level_and_value_marginals():
    t = bn.build_bin_table(16, 3, 1)
    lv = np.bincount(t.level, minlength=4)[1:]
    assert chi2(lv, np.full(3, t.level.size / 3)) < chi2_limit(2)
    for j in (1, 2):
        vals = t.value[t.level == j]
        assert vals.max() < 1 << t.msg_length(j)
        nb = 1 << t.msg_length(j)
        counts = np.bincount(vals, minlength=nb)
        assert chi2(counts, np.full(nb, vals.size / nb)) < chi2_limit(nb - 1)


def test_select_level():
    eps = bn.default_epsilon(3)
    assert eps == 0.5
    # N=8: free cells must cover 2j + 2
    assert [bn.select_level(8, 3, eps, f) for f in range(6)] == [3, 2, 2, 1, 1, 0]


def test_encode_picks_smallest_matching_vector(table8):
    rng = np.random.default_rng(3)
    for _ in range(50):
        frozen = np.sort(rng.choice(8, 2, replace=False))
        cover = rng.integers(0, 2, 8, dtype=np.uint8)
        level = int(rng.integers(1, 4))
        msg = rng.integers(0, 2, table8.msg_length(level), dtype=np.uint8)
        brute = [
            v for v in range(256)
            if table8.level[v] == level and table8.value[v] == from_bin(msg)
            and np.array_equal(int_to_bits(v, 8)[frozen], cover[frozen])
        ]
        image = MemoryImage(cover, frozen)
        if not brute:
            with pytest.raises(NotEncodable):
                bn.binning_encode(table8, image, level, msg)
            continue
        u = bn.binning_encode(table8, image, level, msg)
        assert from_bin(u) == brute[0]
        got_level, got = bn.binning_decode(table8, u)
        assert got_level == level and np.array_equal(got, msg)


def test_decode_is_total(table8):
    for v in range(256):
        level, msg = bn.binning_decode(table8, int_to_bits(v, 8))
        assert 1 <= level <= 3 and msg.size == table8.msg_length(level)


def test_exhaustive_rate_agrees_with_oracle():
    fails, total = bn.exhaustive_failure_rate(bn.build_bin_table(8, 3, 0), 2)
    report = binning_oracle(8, 3, 2, 0)
    assert (fails, total) == (report["not_encodable"], report["triples"])
    assert report["decode_matches"] == report["successes"] == report["consistent"]


def test_failure_rate_falls_with_N():
    rates = []
    for N in (8, 12, 16):
        fails, trials = bn.sampled_failure_rate(bn.build_bin_table(N, 3, 0), N // 4, 2000, 0)
        rates.append(fails / trials)
    assert rates[0] > rates[1] > rates[2]
