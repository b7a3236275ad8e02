import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horizdpa import field
from horizdpa.b233 import F_POLY, GX, GY, M, R

elements = st.integers(min_value=0, max_value=(1 << M) - 1)


def long_division(p: int) -> int:
    # bit-by-bit remainder, top down
    for i in range(p.bit_length() - 1, M - 1, -1):
        if (p >> i) & 1:
            p ^= F_POLY << (i - M)
    return p


def conv_mul(a: int, b: int) -> int:
    # polynomial product over GF(2) via integer convolution of bit vectors
    av = np.array([(a >> i) & 1 for i in range(M)], dtype=np.int64)
    bv = np.array([(b >> i) & 1 for i in range(M)], dtype=np.int64)
    c = np.convolve(av, bv) % 2
    return long_division(int("".join(str(int(x)) for x in c[::-1]), 2))


def test_add_is_xor():
    assert field.add(0b1011, 0b0110) == 0b1101
    assert field.add(GX, GX) == 0


def test_reduce_known_values():
    assert field.reduce(1 << 233) == (1 << 74) | 1
    assert field.reduce(1 << 464) == field.from_hex("08000000000000000000004000000000000000001000000000000000000")
    p = (1 << 464) | (1 << 300) | (1 << 233) | 5
    assert field.reduce(p) == field.from_hex("08000000000000000000004200000000000000005080000000000000004")
    assert field.reduce(GX) == GX


def test_reduce_matches_long_division():
    rnd = random.Random(1)
    for _ in range(10_000):
        p = rnd.getrandbits(465)
        assert field.reduce(p) == long_division(p)


def test_schoolbook_small_examples():
    # (t + 1)^2 = t^2 + 1 in characteristic 2
    assert field.mul_schoolbook(0b11, 0b11) == 0b101
    assert field.mul_schoolbook(1 << 232, 1 << 1) == (1 << 74) | 1
    assert field.mul_schoolbook(0, GX) == 0
    assert field.mul_schoolbook(1, GX) == GX


def test_schoolbook_against_convolution():
    rnd = random.Random(2)
    for _ in range(300):
        a, b = rnd.getrandbits(M), rnd.getrandbits(M)
        assert field.mul_schoolbook(a, b) == conv_mul(a, b)


def test_fast_mul_and_square_agree_with_schoolbook():
    rnd = random.Random(3)
    for _ in range(10_000):
        a, b = rnd.getrandbits(M), rnd.getrandbits(M)
        assert field.mul(a, b) == field.mul_schoolbook(a, b)
        assert field.square(a) == field.mul_schoolbook(a, a)


def test_ring_axioms_sampled():
    rnd = random.Random(4)
    for _ in range(10_000):
        a, b, c = (rnd.getrandbits(M) for _ in range(3))
        assert field.mul(a, b) == field.mul(b, a)
        assert field.mul(field.mul(a, b), c) == field.mul(a, field.mul(b, c))
        assert field.mul(a, b ^ c) == field.mul(a, b) ^ field.mul(a, c)


@settings(max_examples=200, deadline=None)
@given(elements, elements, elements)
def test_ring_axioms_property(a, b, c):
    assert field.mul(a, field.mul(b, c)) == field.mul(field.mul(a, b), c)
    assert field.mul(a, field.add(b, c)) == field.add(field.mul(a, b), field.mul(a, c))
    assert field.square(field.add(a, b)) == field.add(field.square(a), field.square(b))


@settings(max_examples=200, deadline=None)
@given(elements.filter(bool))
def test_inverse(a):
    assert field.mul(a, field.invert(a)) == 1


def test_invert_zero_raises():
    with pytest.raises(ZeroDivisionError):
        field.invert(0)


def test_frobenius_order():
    # a^(2^233) = a
    a = GX
    x = a
    for _ in range(M):
        x = field.square(x)
    assert x == a


def test_hex_roundtrip():
    h = field.to_hex(GX)
    assert len(h) == 59
    assert field.from_hex(h) == GX
    assert field.to_hex(0) == "0" * 59
    with pytest.raises(ValueError):
        field.from_hex("1" + "0" * 59)


def test_is_element():
    assert field.is_element(0)
    assert field.is_element((1 << M) - 1)
    assert not field.is_element(1 << M)
    assert not field.is_element(-1)


def test_generator_on_curve_and_has_order_r():
    assert field.G == field.AffinePoint(GX, GY)
    assert field.is_on_curve(field.G)
    assert field.kp_oracle(R, field.G).infinity
    assert field.kp_oracle(R - 1, field.G) == field.point_neg(field.G)


def _walk(n, seed):
    # points with known discrete logs, one affine addition per step
    rnd = random.Random(seed)
    t = rnd.randrange(1, R)
    T = field.kp_oracle(t, field.G)
    s0 = rnd.randrange(1, R)
    P = field.kp_oracle(s0, field.G)
    out = []
    for i in range(n):
        out.append(((s0 + i * t) % R, P))
        P = field.point_add(P, T)
    return out


def test_multiples_stay_on_curve():
    for _, P in _walk(100, 5):
        assert field.is_on_curve(P)


def test_group_law():
    pts = _walk(101, 6)
    for (a, P), (b, Q), (_, S) in zip(pts, pts[37:] + pts[:37], pts[71:] + pts[:71]):
        assert field.point_add(P, Q) == field.point_add(Q, P)
        assert field.point_add(field.point_add(P, Q), S) == field.point_add(P, field.point_add(Q, S))
    for a, P in pts[:5]:
        assert P == field.kp_oracle(a, field.G)
    (a, P), (b, Q) = pts[3], pts[90]
    assert field.point_add(P, Q) == field.kp_oracle((a + b) % R, field.G)
    P = field.kp_oracle(7, field.G)
    assert field.point_add(P, field.point_neg(P)).infinity
    assert field.point_add(P, field.INFINITY) == P
    assert field.point_double(P) == field.point_add(P, P) == field.kp_oracle(14, field.G)


def test_small_identities():
    assert field.add(0b101, 0b110) == 0b11
    assert field.add(GX, 0) == GX
    assert field.square(0) == 0 and field.square(1) == 1
    assert field.invert(1) == 1
    rnd = random.Random(7)
    for _ in range(1000):
        a = rnd.getrandbits(M) or 1
        inv = field.invert(a)
        assert field.mul_schoolbook(a, inv) == 1
        assert field.invert(inv) == a


def test_kp_oracle_small():
    G = field.G
    assert field.kp_oracle(0, G).infinity
    assert field.kp_oracle(5, field.INFINITY).infinity
    assert field.kp_oracle(1, G) == G
    assert field.kp_oracle(2, G) == field.point_add(G, G) == field.point_double(G)
    with pytest.raises(ValueError):
        field.kp_oracle(-1, G)
