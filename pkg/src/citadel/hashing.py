"""Field-friendly sponge hash and the byte-oriented fast hash.

``hash_sponge`` is a Poseidon-style permutation (x^5 S-box, 8 full rounds,
60 partial rounds, width 5, Cauchy MDS) over the Jubjub base field,
absorbed at rate 4. Round constants are generated from BLAKE2b, so outputs
are not compatible with any deployed Poseidon instance.

The capacity element is initialised with a tag that encodes the number of
absorbed field elements and, per input, whether it was a scalar or a
point. Inputs of different length or shape therefore never share a state.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Sequence, Union

from gmpy2 import mpz

from .jubjub import Q, T, Point, Scalar

WIDTH = 5
RATE = 4
FULL_ROUNDS = 8
PARTIAL_ROUNDS = 60
MAX_INPUTS = 200

Element = Union[int, Point]


def _constants():
    n = WIDTH * (FULL_ROUNDS + PARTIAL_ROUNDS)
    rc = []
    ctr = 0
    while len(rc) < n:
        h = hashlib.blake2b(b"citadel/sponge/rc" + ctr.to_bytes(4, "little"), digest_size=64)
        rc.append(int.from_bytes(h.digest(), "little") % Q)
        ctr += 1
    xs = list(range(WIDTH))
    ys = list(range(WIDTH, 2 * WIDTH))
    mds = [[pow(x + y, -1, Q) for y in ys] for x in xs]
    return [tuple(rc[i:i + WIDTH]) for i in range(0, n, WIDTH)], mds


ROUND_CONSTANTS, MDS = _constants()
_Q = mpz(Q)
_HALF = FULL_ROUNDS // 2


def _matmul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return [[sum(a[i][k] * b[k][j] for k in range(m)) % Q for j in range(p)] for i in range(n)]


def _matvec(a, v):
    return [sum(a[i][k] * v[k] for k in range(len(v))) % Q for i in range(len(a))]


def _inverse(a):
    """Gauss-Jordan inverse modulo Q."""
    n = len(a)
    rows = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if rows[r][col])
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = pow(rows[col][col], -1, Q)
        rows[col] = [x * inv % Q for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(x - f * y) % Q for x, y in zip(rows[r], rows[col])]
    return [r[n:] for r in rows]


def _sparse_schedule():
    """Rewrite the partial rounds so each touches one constant and a sparse matrix.

    Only the first lane goes through the S-box in a partial round, so the
    other lanes' round constants can be pushed forward through the linear
    layer, and the MDS matrix can be split as ``diag(1, H) * B`` with B
    sparse; the dense ``diag(1, H)`` factor commutes with the S-box and is
    folded into the next round's matrix. Output is identical to applying
    the plain rounds.
    """
    rc = [list(r) for r in ROUND_CONSTANTS]
    first, last = _HALF, _HALF + PARTIAL_ROUNDS
    for r in range(first, last):
        carry = _matvec(MDS, [0] + rc[r][1:])
        rc[r] = [rc[r][0], 0, 0, 0, 0]
        rc[r + 1] = [(x + y) % Q for x, y in zip(rc[r + 1], carry)]
    sparse = []
    cur = MDS
    for _ in range(first, last):
        hat = [row[1:] for row in cur[1:]]
        w = _matvec(_inverse(hat), [row[0] for row in cur[1:]])
        sparse.append((cur[0][0], cur[0][1:], w))
        a = [[1, 0, 0, 0, 0]] + [[0] + row for row in hat]
        cur = _matmul(MDS, a)
    # ``hat`` is now the dense factor left over after the last partial round
    return rc, sparse, hat


_RC_OPT, _SPARSE, _TAIL = _sparse_schedule()
_RC = [tuple(mpz(c) for c in row) for row in _RC_OPT]
_MDS = [[mpz(m) for m in row] for row in MDS]
_SP = [(mpz(d), tuple(mpz(x) for x in v), tuple(mpz(x) for x in w)) for d, v, w in _SPARSE]
_TL = [[mpz(x) for x in row] for row in _TAIL]


def permute(state: Sequence[int]) -> list[int]:
    s0, s1, s2, s3, s4 = (mpz(v) for v in state)
    Q = _Q
    (m00, m01, m02, m03, m04), (m10, m11, m12, m13, m14), (m20, m21, m22, m23, m24), (
        m30, m31, m32, m33, m34), (m40, m41, m42, m43, m44) = _MDS

    def full(r, s0, s1, s2, s3, s4):
        c0, c1, c2, c3, c4 = _RC[r]
        s0 = (s0 + c0) % Q
        s1 = (s1 + c1) % Q
        s2 = (s2 + c2) % Q
        s3 = (s3 + c3) % Q
        s4 = (s4 + c4) % Q
        x = s0 * s0 % Q
        s0 = x * x % Q * s0 % Q
        x = s1 * s1 % Q
        s1 = x * x % Q * s1 % Q
        x = s2 * s2 % Q
        s2 = x * x % Q * s2 % Q
        x = s3 * s3 % Q
        s3 = x * x % Q * s3 % Q
        x = s4 * s4 % Q
        s4 = x * x % Q * s4 % Q
        return (
            (m00 * s0 + m01 * s1 + m02 * s2 + m03 * s3 + m04 * s4) % Q,
            (m10 * s0 + m11 * s1 + m12 * s2 + m13 * s3 + m14 * s4) % Q,
            (m20 * s0 + m21 * s1 + m22 * s2 + m23 * s3 + m24 * s4) % Q,
            (m30 * s0 + m31 * s1 + m32 * s2 + m33 * s3 + m34 * s4) % Q,
            (m40 * s0 + m41 * s1 + m42 * s2 + m43 * s3 + m44 * s4) % Q,
        )

    for r in range(_HALF):
        s0, s1, s2, s3, s4 = full(r, s0, s1, s2, s3, s4)
    for r, (d, (v1, v2, v3, v4), (w1, w2, w3, w4)) in enumerate(_SP, _HALF):
        s0 = (s0 + _RC[r][0]) % Q
        x = s0 * s0 % Q
        s0 = x * x % Q * s0 % Q
        # lanes 1-4 only accumulate here; they are reduced once after the loop
        s0, s1, s2, s3, s4 = (
            (d * s0 + v1 * s1 + v2 * s2 + v3 * s3 + v4 * s4) % Q,
            w1 * s0 + s1,
            w2 * s0 + s2,
            w3 * s0 + s3,
            w4 * s0 + s4,
        )
    s1, s2, s3, s4 = s1 % Q, s2 % Q, s3 % Q, s4 % Q
    (t11, t12, t13, t14), (t21, t22, t23, t24), (t31, t32, t33, t34), (t41, t42, t43, t44) = _TL
    s1, s2, s3, s4 = (
        (t11 * s1 + t12 * s2 + t13 * s3 + t14 * s4) % Q,
        (t21 * s1 + t22 * s2 + t23 * s3 + t24 * s4) % Q,
        (t31 * s1 + t32 * s2 + t33 * s3 + t34 * s4) % Q,
        (t41 * s1 + t42 * s2 + t43 * s3 + t44 * s4) % Q,
    )
    for r in range(_HALF + PARTIAL_ROUNDS, FULL_ROUNDS + PARTIAL_ROUNDS):
        s0, s1, s2, s3, s4 = full(r, s0, s1, s2, s3, s4)
    return [int(s0), int(s1), int(s2), int(s3), int(s4)]


def to_field_elements(inputs: Iterable[Element]) -> tuple[list[int], int]:
    """Flatten inputs into base-field elements plus the capacity tag."""
    flat: list[int] = []
    shape = 1
    count = 0
    for item in inputs:
        count += 1
        if isinstance(item, Point):
            flat.extend(item.affine())
            shape = shape << 1 | 1
        else:
            if not 0 <= item < Q:
                raise ValueError("sponge input out of field range")
            flat.append(item)
            shape <<= 1
    if count == 0:
        raise ValueError("hash_sponge needs at least one input")
    if count > MAX_INPUTS:
        raise ValueError(f"hash_sponge accepts at most {MAX_INPUTS} inputs")
    return flat, (shape << 32) | len(flat)


def hash_sponge(inputs: Sequence[Element]) -> Scalar:
    """Sponge hash of scalars and points, reduced into the scalar field."""
    flat, tag = to_field_elements(inputs)
    state = [tag, 0, 0, 0, 0]
    for i in range(0, len(flat), RATE):
        chunk = flat[i:i + RATE]
        for j, v in enumerate(chunk):
            state[j + 1] = (state[j + 1] + v) % Q
        state = permute(state)
    return Scalar(state[1] % T)


def hash_fast(data: bytes) -> Scalar:
    """BLAKE2b-512 of ``data`` reduced into the scalar field."""
    digest = hashlib.blake2b(data, digest_size=64, person=b"citadel-fast").digest()
    return Scalar(int.from_bytes(digest, "little") % T)


def bytes_to_elements(data: bytes) -> list[int]:
    """Pack bytes into field elements, 31 bytes each, length-prefixed."""
    out = [len(data)]
    for i in range(0, len(data), 31):
        out.append(int.from_bytes(data[i:i + 31], "little"))
    return out


def hash_sponge_bytes(data: bytes, chunk: int = 128) -> Scalar:
    """Sponge hash of arbitrary bytes, chaining blocks of field elements."""
    elements = bytes_to_elements(data)
    acc = hash_sponge(elements[:chunk])
    for i in range(chunk, len(elements), chunk):
        acc = hash_sponge([acc, *elements[i:i + chunk]])
    return acc
