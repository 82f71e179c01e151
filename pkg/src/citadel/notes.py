"""Phoenix notes: the four note types, minting, hashing and nullifiers."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Optional, Sequence

from .crypto import (
    Element,
    NoteSecretKey,
    PublicKey,
    StaticKeys,
    SymKey,
    commit,
    decode_elements,
    decrypt,
    derive_symmetric_key,
    encode_elements,
    encrypt,
    gen_note_keypair,
    random_nonce,
    recover_note_secret,
    shared_key,
)
from .hashing import bytes_to_elements, hash_sponge
from .jubjub import Point, Scalar, random_scalar

MAX_VALUE = 1 << 62


class NoteType(IntEnum):
    TRANSPARENT_VALUE = 0
    OBFUSCATED_VALUE = 1
    TRANSPARENT_NFT = 2
    OBFUSCATED_NFT = 3

    @property
    def is_value(self) -> bool:
        return self in (NoteType.TRANSPARENT_VALUE, NoteType.OBFUSCATED_VALUE)

    @property
    def is_obfuscated(self) -> bool:
        return self in (NoteType.OBFUSCATED_VALUE, NoteType.OBFUSCATED_NFT)


VALUE_TYPES = frozenset({NoteType.TRANSPARENT_VALUE, NoteType.OBFUSCATED_VALUE})


class ValueRangeError(ValueError):
    pass


class NonceReuse(ValueError):
    pass


@dataclass(frozen=True)
class Opening:
    value: Scalar
    blinder: Scalar


@dataclass(frozen=True)
class Note:
    note_type: NoteType
    com: Optional[Point]
    nonce: Scalar
    enc: bytes
    npk: Point
    R: Point
    pos: Optional[int] = None

    def at(self, pos: int) -> Note:
        return replace(self, pos=pos)


def check_value(v: int) -> None:
    if not 0 <= v < MAX_VALUE:
        raise ValueRangeError(f"value {v} outside [0, 2^62)")


def mint_value_note(pk: PublicKey, v: int, obfuscated: bool, rng) -> tuple[Note, Opening]:
    check_value(v)
    keys, _ = gen_note_keypair(pk, rng)
    if obfuscated:
        s = random_scalar(rng)
        nonce = random_nonce(rng)
        enc = encrypt(derive_symmetric_key(keys.k_dh), [v, s], nonce)
        note_type = NoteType.OBFUSCATED_VALUE
    else:
        s, nonce = 0, 0
        enc = encode_elements([v])
        note_type = NoteType.TRANSPARENT_VALUE
    note = Note(note_type, commit(v, s), Scalar(nonce), enc, keys.npk, keys.R)
    return note, Opening(Scalar(v), Scalar(s))


def mint_nft(npk: Point, R: Point, payload: Sequence[Element], key: SymKey,
             obfuscated: bool, rng, nonce: int | None = None,
             used_nonces: set | None = None) -> Note:
    """Mint an NFT note carrying ``payload``; no value commitment.

    ``used_nonces`` (a set of ``(key, nonce)``) enforces nonce uniqueness per
    key across mints that share the set.
    """
    if not payload:
        raise ValueError("NFT payload must not be empty")
    if not obfuscated:
        return Note(NoteType.TRANSPARENT_NFT, None, Scalar(0), encode_elements(payload), npk, R)
    if nonce is None:
        nonce = random_nonce(rng)
    if used_nonces is not None:
        if (key, nonce) in used_nonces:
            raise NonceReuse("nonce already used with this key")
        used_nonces.add((key, nonce))
    enc = encrypt(key, payload, nonce)
    return Note(NoteType.OBFUSCATED_NFT, None, Scalar(nonce), enc, npk, R)


def note_fields(note: Note) -> list[Element]:
    """Field-element view of a note as absorbed by ``note_hash``."""
    if note.pos is None:
        raise ValueError("note has no ledger position yet")
    head: list[Element] = [int(note.note_type), note.pos, note.nonce]
    head += [1, note.com] if note.com is not None else [0]
    return head + [note.npk, note.R] + bytes_to_elements(note.enc)


def note_hash(note: Note) -> Scalar:
    return hash_sponge(note_fields(note))


def compute_nullifier(key: NoteSecretKey | Point, pos: int) -> Scalar:
    npk_prime = key.npk_prime if isinstance(key, NoteSecretKey) else key
    return hash_sponge([npk_prime, pos])


def read_payload(note: Note, key: SymKey | None = None) -> list[Element]:
    """Plaintext elements of a note; obfuscated notes need ``key``."""
    if not note.note_type.is_obfuscated:
        return decode_elements(note.enc)
    if key is None:
        raise ValueError("obfuscated note needs a decryption key")
    return decrypt(key, note.enc, note.nonce)


def open_value_note(note: Note, sk: StaticKeys) -> Opening:
    """Recover ``(v, s)`` of a value note addressed to ``sk``."""
    if not note.note_type.is_value:
        raise ValueError("not a value note")
    if note.note_type is NoteType.TRANSPARENT_VALUE:
        (v,) = decode_elements(note.enc)
        return Opening(Scalar(v), Scalar(0))
    v, s = decrypt(derive_symmetric_key(shared_key(sk, note.R)), note.enc, note.nonce)
    return Opening(Scalar(v), Scalar(s))


def note_secret(note: Note, sk: StaticKeys) -> NoteSecretKey:
    return recover_note_secret(sk, note.R, note.npk)
