"""Commitments, key derivation, Schnorr signatures and note encryption."""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from typing import Sequence, Union

from nacl.bindings import (
    crypto_aead_xchacha20poly1305_ietf_decrypt,
    crypto_aead_xchacha20poly1305_ietf_encrypt,
)
from nacl.exceptions import CryptoError

from .hashing import hash_fast, hash_sponge
from .jubjub import (
    T,
    EncodingError,
    FixedBase,
    Point,
    Scalar,
    decode_point,
    decode_scalar,
    encode_point,
    encode_scalar,
    hash_to_point,
    random_scalar,
)

G = hash_to_point(b"citadel/generator/G")
G_PRIME = hash_to_point(b"citadel/generator/G'")
_G = FixedBase(G)
_G_PRIME = FixedBase(G_PRIME)

NONCE_BYTES = 24
SymKey = bytes


def default_rng():
    return secrets.SystemRandom()


def mul_g(k: int) -> Point:
    return _G.mul(k)


def mul_g_prime(k: int) -> Point:
    return _G_PRIME.mul(k)


@dataclass(frozen=True)
class CommitKey:
    g: Point
    g_prime: Point


COMMIT_KEY = CommitKey(G, G_PRIME)


def commit(m: int, r: int, ck: CommitKey = COMMIT_KEY) -> Point:
    """Pedersen commitment ``m*G + r*G'``."""
    if ck is COMMIT_KEY:
        return mul_g(m) + mul_g_prime(r)
    return ck.g * m + ck.g_prime * r


def open_commitment(m: int, r: int, c: Point, ck: CommitKey = COMMIT_KEY) -> bool:
    return commit(m, r, ck) == c


# -- keys -------------------------------------------------------------------

@dataclass(frozen=True)
class PublicKey:
    A: Point
    B: Point

    def to_bytes(self) -> bytes:
        return encode_point(self.A) + encode_point(self.B)

    @classmethod
    def from_bytes(cls, data: bytes) -> PublicKey:
        if len(data) != 64:
            raise EncodingError("public key encoding must be 64 bytes")
        return cls(decode_point(data[:32]), decode_point(data[32:]))


@dataclass(frozen=True)
class ViewKey:
    a: Scalar
    B: Point

    def owns(self, npk: Point, R: Point) -> bool:
        """True when ``(npk, R)`` was derived for the holder of this key."""
        return npk == mul_g(_dh_scalar(R * self.a)) + self.B


@dataclass(frozen=True)
class StaticKeys:
    a: Scalar
    b: Scalar
    A: Point
    B: Point

    @property
    def public(self) -> PublicKey:
        return PublicKey(self.A, self.B)

    @property
    def view_key(self) -> ViewKey:
        return ViewKey(self.a, self.B)


@dataclass(frozen=True)
class NoteKeyPair:
    npk: Point
    R: Point
    k_dh: Point


@dataclass(frozen=True)
class NoteSecretKey:
    nsk: Scalar
    npk_prime: Point

    @property
    def npk(self) -> Point:
        return mul_g(self.nsk)


class NoteNotOwned(Exception):
    """The note's one-time key was not derived for the given static key."""


def static_keys_from_secret(a: int, b: int) -> StaticKeys:
    if not (0 < a < T and 0 < b < T):
        raise ValueError("secret key halves must be nonzero scalars")
    return StaticKeys(Scalar(a), Scalar(b), mul_g(a), mul_g(b))


def gen_static_keys(rng=None) -> StaticKeys:
    rng = rng or default_rng()
    return static_keys_from_secret(random_scalar(rng), random_scalar(rng))


def _dh_scalar(k_dh: Point) -> Scalar:
    return hash_fast(encode_point(k_dh))


def gen_note_keypair(pk: PublicKey, rng=None) -> tuple[NoteKeyPair, Scalar]:
    """One-time note key for receiver ``pk``; returns the ephemeral ``r`` too."""
    if pk.A.is_identity() or pk.B.is_identity():
        raise ValueError("receiver public key has an identity component")
    rng = rng or default_rng()
    r = random_scalar(rng)
    k_dh = pk.A * r
    npk = mul_g(_dh_scalar(k_dh)) + pk.B
    return NoteKeyPair(npk, mul_g(r), k_dh), r


def recover_note_secret(sk: StaticKeys, R: Point, npk: Point) -> NoteSecretKey:
    """Derive ``nsk`` for a note with ``(npk, R)``, checking it is ours."""
    h = _dh_scalar(R * sk.a)
    if mul_g(h) + sk.B != npk:
        raise NoteNotOwned("note public key does not match this static key")
    nsk = Scalar((h + sk.b) % T)
    return NoteSecretKey(nsk, mul_g_prime(nsk))


def shared_key(sk: StaticKeys, R: Point) -> Point:
    """Receiver side of the note Diffie-Hellman exchange."""
    return R * sk.a


# -- Schnorr ----------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    R: Point
    u: Scalar


@dataclass(frozen=True)
class DoubleSignature:
    R: Point
    R_prime: Point
    u: Scalar


def sign_single(sk: int, m: int, rng=None) -> Signature:
    rng = rng or default_rng()
    r = random_scalar(rng)
    R = mul_g(r)
    c = hash_sponge([m, R])
    return Signature(R, Scalar((r - c * sk) % T))


def verify_single(pk: Point, m: int, sig: Signature) -> bool:
    if not 0 <= sig.u < T or not 0 <= m < T:
        return False
    c = hash_sponge([m, sig.R])
    return sig.R == mul_g(sig.u) + pk * c


def sign_double(sk: int, m: int, rng=None) -> DoubleSignature:
    rng = rng or default_rng()
    r = random_scalar(rng)
    R, R_prime = mul_g(r), mul_g_prime(r)
    c = hash_sponge([m, R, R_prime])
    return DoubleSignature(R, R_prime, Scalar((r - c * sk) % T))


def verify_double(pk: Point, pk_prime: Point, m: int, sig: DoubleSignature) -> bool:
    if not 0 <= sig.u < T or not 0 <= m < T:
        return False
    c = hash_sponge([m, sig.R, sig.R_prime])
    return (
        sig.R == mul_g(sig.u) + pk * c
        and sig.R_prime == mul_g_prime(sig.u) + pk_prime * c
    )


# -- symmetric encryption ---------------------------------------------------

class DecryptionError(Exception):
    """Authentication failed: wrong key, wrong nonce or tampered ciphertext."""


Element = Union[int, Point]
_TAG_SCALAR = b"\x00"
_TAG_POINT = b"\x01"


def encode_elements(items: Sequence[Element]) -> bytes:
    out = bytearray()
    for item in items:
        if isinstance(item, Point):
            out += _TAG_POINT + encode_point(item)
        else:
            out += _TAG_SCALAR + encode_scalar(item)
    return bytes(out)


def decode_elements(data: bytes) -> list[Element]:
    if len(data) % 33:
        raise EncodingError("element list has a ragged length")
    items: list[Element] = []
    for i in range(0, len(data), 33):
        tag, body = data[i:i + 1], data[i + 1:i + 33]
        if tag == _TAG_POINT:
            items.append(decode_point(body))
        elif tag == _TAG_SCALAR:
            items.append(decode_scalar(body))
        else:
            raise EncodingError(f"unknown element tag {tag!r}")
    return items


def derive_symmetric_key(k: Point) -> SymKey:
    return encode_scalar(hash_fast(b"citadel/symkey" + encode_point(k)))


def symmetric_key_from_scalar(k: int) -> SymKey:
    return encode_scalar(k)


def nonce_bytes(nonce: int) -> bytes:
    if not 0 <= nonce < 1 << (8 * NONCE_BYTES):
        raise ValueError("nonce does not fit in 24 bytes")
    return nonce.to_bytes(NONCE_BYTES, "little")


def random_nonce(rng) -> Scalar:
    # 192-bit nonces are valid scalars and fill the AEAD nonce exactly
    return Scalar(rng.randrange(1, 1 << (8 * NONCE_BYTES)))


def encrypt(key: SymKey, plaintext: Sequence[Element], nonce: int) -> bytes:
    return crypto_aead_xchacha20poly1305_ietf_encrypt(
        encode_elements(plaintext), None, nonce_bytes(nonce), key
    )


def decrypt(key: SymKey, ciphertext: bytes, nonce: int) -> list[Element]:
    try:
        plain = crypto_aead_xchacha20poly1305_ietf_decrypt(
            ciphertext, None, nonce_bytes(nonce), key
        )
    except CryptoError as exc:
        raise DecryptionError("ciphertext failed authentication") from exc
    return decode_elements(plain)
