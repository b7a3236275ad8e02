"""GF(2^233) arithmetic for NIST B-233 and an affine reference for kP.

Field elements are plain ``int`` values: bit ``i`` is the coefficient of
``t**i``.  Everything here is a pure function.

``mul_schoolbook`` and ``kp_oracle`` are deliberately naive.  They are the
references the Karatsuba multiplier and the Montgomery-ladder accelerator
are checked against, so they must not share code with either.
"""

from __future__ import annotations

from typing import NamedTuple

from . import b233

M = b233.M
F_POLY = b233.F_POLY
MASK = (1 << M) - 1
HEX_DIGITS = 59  # 233 bits rounded up to 236

FieldElement = int


class CurveB233(NamedTuple):
    a: int
    b: int
    gx: int
    gy: int
    r: int
    f_exponents: tuple[int, ...]


CURVE = CurveB233(b233.A, b233.B, b233.GX, b233.GY, b233.R, b233.F_EXPONENTS)


class AffinePoint(NamedTuple):
    x: int = 0
    y: int = 0
    infinity: bool = False

    def __str__(self):
        if self.infinity:
            return "O"
        return f"({to_hex(self.x)}, {to_hex(self.y)})"


INFINITY = AffinePoint(0, 0, True)
G = AffinePoint(CURVE.gx, CURVE.gy)


def is_element(a) -> bool:
    return isinstance(a, int) and 0 <= a <= MASK


def to_hex(a: int) -> str:
    """Big-endian, zero-padded 59-digit hex form."""
    if not is_element(a):
        raise ValueError(f"not a GF(2^233) element: {a!r}")
    return format(a, f"0{HEX_DIGITS}x")


def from_hex(s: str) -> int:
    s = s.strip().lower()
    if s.startswith("0x"):
        s = s[2:]
    if len(s) != HEX_DIGITS:
        raise ValueError(f"expected {HEX_DIGITS} hex digits, got {len(s)}")
    a = int(s, 16)
    if a > MASK:
        raise ValueError("top 3 bits of a field element must be zero")
    return a


def add(a: int, b: int) -> int:
    return a ^ b


def reduce(p: int) -> int:
    """Reduce a polynomial of degree <= 464 modulo t^233 + t^74 + 1."""
    if p < 0:
        raise ValueError("polynomial must be non-negative")
    # t^233 = t^74 + 1; two folds suffice for degree <= 464
    while p >> M:
        hi = p >> M
        p = (p & MASK) ^ hi ^ (hi << 74)
    return p


def mul_schoolbook(a: int, b: int) -> int:
    # c_i = XOR_{k+l=i} a_k b_l, accumulated row by row
    c = 0
    j = 0
    while b >> j:
        if (b >> j) & 1:
            c ^= a << j
        j += 1
    return reduce(c)


def mul(a: int, b: int) -> int:
    """Fast product (4-bit window), same result as :func:`mul_schoolbook`."""
    table = [0] * 16
    for i in range(1, 16):
        table[i] = (table[i >> 1] << 1) ^ (a if i & 1 else 0)
    c = 0
    shift = 0
    while b:
        c ^= table[b & 15] << shift
        b >>= 4
        shift += 4
    return reduce(c)


def _spread(byte: int) -> int:
    out = 0
    for i in range(8):
        if (byte >> i) & 1:
            out |= 1 << (2 * i)
    return out


_SPREAD = tuple(_spread(i) for i in range(256))


def square(a: int) -> int:
    c = 0
    shift = 0
    while a:
        c |= _SPREAD[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return reduce(c)


def invert(a: int) -> int:
    """Inverse via the extended Euclidean algorithm over GF(2)[t]."""
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^233)")
    u, v = reduce(a), F_POLY
    g1, g2 = 1, 0
    while u != 1:
        j = u.bit_length() - v.bit_length()
        if j < 0:
            u, v = v, u
            g1, g2 = g2, g1
            j = -j
        u ^= v << j
        g1 ^= g2 << j
    return reduce(g1)


# --- affine group law, reference only ---------------------------------------

def is_on_curve(P: AffinePoint) -> bool:
    if P.infinity:
        return True
    x, y = P.x, P.y
    if not (is_element(x) and is_element(y)):
        return False
    x2 = mul_schoolbook(x, x)
    lhs = mul_schoolbook(y, y) ^ mul_schoolbook(x, y)
    rhs = mul_schoolbook(x2, x) ^ mul_schoolbook(CURVE.a, x2) ^ CURVE.b
    return lhs == rhs


def point_neg(P: AffinePoint) -> AffinePoint:
    if P.infinity:
        return P
    return AffinePoint(P.x, P.x ^ P.y)


def point_double(P: AffinePoint) -> AffinePoint:
    if P.infinity or P.x == 0:
        return INFINITY
    lam = P.x ^ mul_schoolbook(P.y, invert(P.x))
    x3 = mul_schoolbook(lam, lam) ^ lam ^ CURVE.a
    y3 = mul_schoolbook(P.x, P.x) ^ mul_schoolbook(lam ^ 1, x3)
    return AffinePoint(x3, y3)


def point_add(P: AffinePoint, Q: AffinePoint) -> AffinePoint:
    if P.infinity:
        return Q
    if Q.infinity:
        return P
    if P.x == Q.x:
        if P.y == Q.y:
            return point_double(P)
        return INFINITY
    lam = mul_schoolbook(P.y ^ Q.y, invert(P.x ^ Q.x))
    x3 = mul_schoolbook(lam, lam) ^ lam ^ P.x ^ Q.x ^ CURVE.a
    y3 = mul_schoolbook(lam, P.x ^ x3) ^ x3 ^ P.y
    return AffinePoint(x3, y3)


def kp_oracle(k: int, P: AffinePoint) -> AffinePoint:
    """k*P by textbook left-to-right affine double-and-add."""
    if k < 0:
        raise ValueError("scalar must be non-negative")
    Q = INFINITY
    for i in reversed(range(k.bit_length())):
        Q = point_double(Q)
        if (k >> i) & 1:
            Q = point_add(Q, P)
    return Q
