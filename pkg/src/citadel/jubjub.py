"""Jubjub twisted Edwards curve and its prime-order subgroup.

The curve is ``-x^2 + y^2 = 1 + d x^2 y^2`` over the BLS12-381 scalar field
``F_q`` with ``d = -10240/10241``. The subgroup used by the protocol has
prime order ``T`` (~252 bits) and cofactor 8.

Points are kept in extended coordinates ``(X, Y, Z, T)`` with
``x = X/Z``, ``y = Y/Z`` and ``x*y = T/Z``. Nothing here is constant time.
"""

from __future__ import annotations

import hashlib
from typing import NewType

from gmpy2 import mpz

Q = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001
T = 0x0E7DB4EA6533AFA906673B0101343B00A6682093CCC81082D0970E5ED6F72CB7
COFACTOR = 8
D = (-10240 * pow(10241, -1, Q)) % Q
D2 = (2 * D) % Q

# gmpy2 copies for the hot paths; public values stay plain ints
_Q = mpz(Q)
_D2 = mpz(D2)
_ZERO, _ONE = mpz(0), mpz(1)

Scalar = NewType("Scalar", int)
"""An integer in ``[0, T)``."""

SCALAR_BYTES = 32
POINT_BYTES = 32


class EncodingError(ValueError):
    """Raised for non-canonical or off-curve byte encodings."""


# -- base field helpers -----------------------------------------------------

def _tonelli_constants():
    s, m = 0, Q - 1
    while m % 2 == 0:
        s, m = s + 1, m // 2
    z = 2
    while pow(z, (Q - 1) // 2, Q) != Q - 1:
        z += 1
    return s, m, pow(z, m, Q)


_TS_S, _TS_M, _TS_C = _tonelli_constants()


def fq_sqrt(n: int) -> int | None:
    """Square root in F_q, or None for non-residues."""
    n %= Q
    if n == 0:
        return 0
    if pow(n, (Q - 1) // 2, Q) != 1:
        return None
    m, c = _TS_S, _TS_C
    t = pow(n, _TS_M, Q)
    r = pow(n, (_TS_M + 1) // 2, Q)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % Q
            i += 1
        b = pow(c, 1 << (m - i - 1), Q)
        m, c = i, b * b % Q
        t, r = t * c % Q, r * b % Q
    return r


# -- points -----------------------------------------------------------------

class Point:
    """Immutable point on Jubjub in extended coordinates."""

    __slots__ = ("X", "Y", "Z", "T", "_affine")

    def __init__(self, X: int, Y: int, Z: int = 1, T_: int | None = None):
        self.X = mpz(X)
        self.Y = mpz(Y)
        self.Z = mpz(Z)
        self.T = self.X * self.Y % _Q if T_ is None else mpz(T_)
        self._affine = None

    @classmethod
    def identity(cls) -> Point:
        return cls(0, 1, 1, 0)

    @classmethod
    def from_affine(cls, x: int, y: int) -> Point:
        x, y = x % Q, y % Q
        if not is_on_curve(x, y):
            raise EncodingError("point is not on the curve")
        return cls(x, y, 1, x * y % Q)

    def affine(self) -> tuple[int, int]:
        if self._affine is None:
            zi = pow(int(self.Z), -1, Q)
            self._affine = (int(self.X * zi % _Q), int(self.Y * zi % _Q))
        return self._affine

    @property
    def x(self) -> int:
        return self.affine()[0]

    @property
    def y(self) -> int:
        return self.affine()[1]

    def __add__(self, other: Point) -> Point:
        X1, Y1, Z1, T1 = self.X, self.Y, self.Z, self.T
        X2, Y2, Z2, T2 = other.X, other.Y, other.Z, other.T
        a = (Y1 - X1) * (Y2 - X2) % _Q
        b = (Y1 + X1) * (Y2 + X2) % _Q
        c = T1 * _D2 % _Q * T2 % _Q
        d = 2 * Z1 * Z2 % _Q
        e, f, g, h = b - a, d - c, d + c, b + a
        return Point(e * f % _Q, g * h % _Q, f * g % _Q, e * h % _Q)

    def double(self) -> Point:
        X1, Y1, Z1 = self.X, self.Y, self.Z
        a = X1 * X1 % _Q
        b = Y1 * Y1 % _Q
        c = 2 * Z1 * Z1 % _Q
        e = ((X1 + Y1) * (X1 + Y1) - a - b) % _Q
        g = b - a  # a_curve = -1, so D = -A and G = D + B
        f = g - c
        h = -a - b
        return Point(e * f % _Q, g * h % _Q, f * g % _Q, e * h % _Q)

    def __neg__(self) -> Point:
        return Point(-self.X % Q, self.Y, self.Z, -self.T % Q)

    def __sub__(self, other: Point) -> Point:
        return self + (-other)

    def __mul__(self, k: int) -> Point:
        return scalar_mul(self, k)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return (self.X * other.Z - other.X * self.Z) % Q == 0 and (
            self.Y * other.Z - other.Y * self.Z
        ) % Q == 0

    def __hash__(self) -> int:
        return hash(self.affine())

    def is_identity(self) -> bool:
        return self.X % Q == 0 and (self.Y - self.Z) % Q == 0

    def in_subgroup(self) -> bool:
        return scalar_mul(self, T, reduce=False).is_identity()

    def to_bytes(self) -> bytes:
        return encode_point(self)

    def __repr__(self) -> str:
        return f"Point({self.to_bytes().hex()})"


def is_on_curve(x: int, y: int) -> bool:
    xx, yy = x * x % Q, y * y % Q
    return (yy - xx - 1 - D * xx % Q * yy) % Q == 0


def _dbl(X1, Y1, Z1):
    """Projective doubling; the T coordinate is not needed between doublings."""
    a = X1 * X1 % _Q
    b = Y1 * Y1 % _Q
    c = 2 * Z1 * Z1 % _Q
    xy = X1 + Y1
    e = (xy * xy - a - b) % _Q
    g = b - a
    f = g - c
    h = -a - b
    return e * f % _Q, g * h % _Q, f * g % _Q, e, h


def _add(X1, Y1, Z1, T1, X2, Y2, Z2, T2):
    a = (Y1 - X1) * (Y2 - X2) % _Q
    b = (Y1 + X1) * (Y2 + X2) % _Q
    c = T1 * T2 % _Q * _D2 % _Q
    d = 2 * Z1 * Z2 % _Q
    e, f, g, h = b - a, d - c, d + c, b + a
    return e * f % _Q, g * h % _Q, f * g % _Q, e * h % _Q


def scalar_mul(p: Point, k: int, reduce: bool = True) -> Point:
    """Fixed 4-bit window double-and-add on raw extended coordinates."""
    if reduce:
        k %= T
    if k == 0:
        return Point.identity()
    table = [None, (p.X, p.Y, p.Z, p.T)]
    for _ in range(14):
        table.append(_add(*table[-1], p.X, p.Y, p.Z, p.T))
    top = (k.bit_length() + 3) // 4 * 4 - 4
    X, Y, Z, T_ = table[(k >> top) & 0xF]
    for shift in range(top - 4, -4, -4):
        for _ in range(4):
            X, Y, Z, e, h = _dbl(X, Y, Z)
        T_ = e * h % _Q
        w = (k >> shift) & 0xF
        if w:
            X, Y, Z, T_ = _add(X, Y, Z, T_, *table[w])
    return Point(X, Y, Z, T_)


class FixedBase:
    """Precomputed radix-16 table for repeated multiplication of one base."""

    WINDOWS = (T.bit_length() + 3) // 4

    def __init__(self, base: Point):
        self.base = base
        self._table: list[list[tuple]] = []
        row_base = base
        for _ in range(self.WINDOWS):
            row = [Point.identity(), row_base]
            for _ in range(14):
                row.append(row[-1] + row_base)
            self._table.append([(q.X, q.Y, q.Z, q.T) for q in map(_normalize, row)])
            row_base = row[-1] + row_base

    def mul(self, k: int) -> Point:
        k %= T
        X, Y, Z, T_ = _ZERO, _ONE, _ONE, _ZERO
        i = 0
        while k:
            w = k & 0xF
            if w:
                X, Y, Z, T_ = _add(X, Y, Z, T_, *self._table[i][w])
            k >>= 4
            i += 1
        return Point(X, Y, Z, T_)


def _normalize(p: Point) -> Point:
    x, y = p.affine()
    return Point(x, y, 1, x * y % Q)


# -- encodings --------------------------------------------------------------

def encode_scalar(s: int) -> bytes:
    if not 0 <= s < T:
        raise EncodingError("scalar out of range")
    return s.to_bytes(SCALAR_BYTES, "little")


def decode_scalar(data: bytes) -> Scalar:
    if len(data) != SCALAR_BYTES:
        raise EncodingError("scalar encoding must be 32 bytes")
    s = int.from_bytes(data, "little")
    if s >= T:
        raise EncodingError("non-canonical scalar")
    return Scalar(s)


def encode_point(p: Point) -> bytes:
    x, y = p.affine()
    return (y | ((x & 1) << 255)).to_bytes(POINT_BYTES, "little")


def decode_point(data: bytes, check_subgroup: bool = True) -> Point:
    if len(data) != POINT_BYTES:
        raise EncodingError("point encoding must be 32 bytes")
    raw = int.from_bytes(data, "little")
    sign, y = raw >> 255, raw & ((1 << 255) - 1)
    if y >= Q:
        raise EncodingError("non-canonical y coordinate")
    yy = y * y % Q
    x = fq_sqrt((yy - 1) * pow(1 + D * yy, -1, Q))
    if x is None:
        raise EncodingError("no curve point with this y coordinate")
    if x == 0 and sign:
        raise EncodingError("non-canonical sign bit")
    if x & 1 != sign:
        x = Q - x
    p = Point(x, y, 1, x * y % Q)
    if check_subgroup and not p.in_subgroup():
        raise EncodingError("point is not in the prime-order subgroup")
    return p


def hash_to_point(tag: bytes) -> Point:
    """Deterministic try-and-increment map from a domain tag into the subgroup."""
    ctr = 0
    while True:
        h = hashlib.blake2b(tag + ctr.to_bytes(4, "little"), digest_size=64).digest()
        y = int.from_bytes(h, "little") % Q
        yy = y * y % Q
        x = fq_sqrt((yy - 1) * pow(1 + D * yy, -1, Q))
        if x is not None:
            if x & 1 != h[0] & 1:
                x = Q - x
            p = Point(x, y, 1, x * y % Q).double().double().double()
            if not p.is_identity():
                return p
        ctr += 1


def random_scalar(rng, nonzero: bool = True) -> Scalar:
    return Scalar(rng.randrange(1 if nonzero else 0, T))
