import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stuckat import fields


def brute_irreducible(f):
    """No factor of degree 1..deg/2, by trial division."""
    d = f.bit_length() - 1
    for g in range(2, 1 << (d // 2 + 1)):
        if fields._pmod(f, g) == 0 and g.bit_length() - 1 >= 1:
            return False
    return True


def test_lowest_irreducible_table():
    expect = [0x2, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11B, 0x203]
    assert [fields.lowest_irreducible(d) for d in range(1, 10)] == expect


def test_rabin_matches_trial_division():
    for f in range(4, 1 << 10):
        assert fields.is_irreducible(f) == brute_irreducible(f), hex(f)


def test_lowest_primitive_has_full_order():
    for d in range(2, 11):
        f = fields.lowest_primitive(d)
        x, seen = 1, set()
        for _ in range((1 << d) - 1):
            seen.add(x)
            x = fields._pmulmod(x, 2, f)
        assert len(seen) == (1 << d) - 1


def test_field_mul_examples():
    assert fields.field_mul(2, 2, 2) == 3  # x * x = x + 1 mod x^2 + x + 1
    for a in range(16):
        assert fields.field_mul(a, 1, 4) == a
        assert fields.field_mul(a, 0, 4) == 0
    with pytest.raises(ValueError):
        fields.field_mul(16, 1, 4)


@given(st.integers(1, 40).flatmap(lambda d: st.tuples(st.just(d), st.integers(0, (1 << d) - 1), st.integers(0, (1 << d) - 1))))
def test_multiplier_matches_field_mul(args):
    d, a, b = args
    assert fields.Multiplier(a, d)(b) == fields.field_mul(a, b, d)


@given(st.integers(1, 31), st.integers(0, 2**32 - 1))
def test_vec_mul_matches_scalar(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 1 << d, 50, dtype=np.uint64)
    b = rng.integers(0, 1 << d, 50, dtype=np.uint64)
    got = fields.vec_mul(a, b, d)
    assert got.tolist() == [fields.field_mul(int(x), int(y), d) for x, y in zip(a, b)]


def test_field_axioms_gf16():
    d = 4
    elems = range(16)
    for a in elems:
        for b in elems:
            assert fields.field_mul(a, b, d) == fields.field_mul(b, a, d)
        if a:
            assert any(fields.field_mul(a, b, d) == 1 for b in elems)


def test_exp_table_is_a_permutation():
    for d in (3, 8, 12):
        e = fields.exp_table(d)
        assert sorted(e.tolist()) == list(range(1, 1 << d))
