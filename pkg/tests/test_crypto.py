import random

import pytest
from hypothesis import given, strategies as st

import oracles
from citadel.crypto import (
    G,
    G_PRIME,
    DecryptionError,
    DoubleSignature,
    NoteNotOwned,
    Signature,
    commit,
    decrypt,
    derive_symmetric_key,
    encrypt,
    gen_note_keypair,
    gen_static_keys,
    mul_g,
    mul_g_prime,
    open_commitment,
    recover_note_secret,
    shared_key,
    sign_double,
    sign_single,
    verify_double,
    verify_single,
)
from citadel.hashing import hash_fast, hash_sponge
from citadel.jubjub import (
    Q,
    T,
    EncodingError,
    Point,
    decode_point,
    decode_scalar,
    encode_point,
    encode_scalar,
    is_on_curve,
    scalar_mul,
)

scalars = st.integers(min_value=0, max_value=T - 1)
nonzero = st.integers(min_value=1, max_value=T - 1)


def affine_bytes(p):
    return oracles.compress(p)


# -- curve ------------------------------------------------------------------

def test_generators_are_on_curve_in_subgroup_and_distinct():
    for g in (G, G_PRIME):
        assert is_on_curve(*g.affine())
        assert g.in_subgroup() and not g.is_identity()
    assert G != G_PRIME


@given(scalars)
def test_fixed_base_matches_oracle(k):
    assert encode_point(mul_g(k)) == affine_bytes(oracles.mul(k, G.affine()))


@given(scalars, scalars)
def test_variable_base_matches_oracle(k, j):
    p = mul_g(j)
    assert encode_point(scalar_mul(p, k)) == affine_bytes(oracles.mul(k, p.affine()))


@given(scalars, scalars)
def test_addition_matches_oracle(a, b):
    p, q = mul_g(a), mul_g_prime(b)
    assert encode_point(p + q) == affine_bytes(oracles.add(p.affine(), q.affine()))


def test_subgroup_order():
    assert scalar_mul(G, T, reduce=False).is_identity()
    assert mul_g(T) == Point.identity()


@given(scalars)
def test_scalar_encoding_roundtrip(k):
    assert decode_scalar(encode_scalar(k)) == k


@given(scalars)
def test_point_encoding_roundtrip(k):
    p = mul_g(k)
    assert decode_point(encode_point(p)) == p


def test_non_canonical_scalar_rejected():
    with pytest.raises(EncodingError):
        decode_scalar(T.to_bytes(32, "little"))
    with pytest.raises(EncodingError):
        decode_scalar(b"\x00" * 31)


def test_non_canonical_point_rejected():
    # y >= Q
    with pytest.raises(EncodingError):
        decode_point(Q.to_bytes(32, "little"))
    # x = 0 with the sign bit set is not a canonical encoding
    bad = bytearray(encode_point(Point.identity()))
    bad[31] |= 0x80
    with pytest.raises(EncodingError):
        decode_point(bytes(bad))


def test_small_order_point_rejected():
    # (0, -1) has order 2
    enc = (Q - 1).to_bytes(32, "little")
    assert decode_point(enc, check_subgroup=False) is not None
    with pytest.raises(EncodingError):
        decode_point(enc)


# -- commitments ------------------------------------------------------------

def test_commit_zero_and_generator_cases():
    assert commit(0, 0).is_identity()
    assert commit(1, 0) == G


def test_commit_matches_oracle():
    c = commit(5, 7)
    assert encode_point(c) == affine_bytes(oracles.commit(5, 7, G.affine(), G_PRIME.affine()))
    assert open_commitment(5, 7, c)
    assert not open_commitment(6, 7, c)
    assert open_commitment(0, 0, Point.identity())


@given(scalars, scalars)
def test_commitment_binding_at_api_level(m, r):
    c = commit(m, r)
    assert open_commitment(m, r, c)
    assert not open_commitment(m, (r + 1) % T, c)
    assert not open_commitment((m + 1) % T, r, c)


def test_commitment_hiding_structurally():
    rng = random.Random(3)
    seen = {encode_point(commit(9, rng.randrange(1, T))) for _ in range(1000)}
    assert len(seen) == 1000


# -- hashing ----------------------------------------------------------------

def test_sponge_deterministic_and_domain_separated():
    x, y = 12345, 678
    assert hash_sponge([x]) == hash_sponge([x])
    assert hash_sponge([x]) != hash_sponge([x, 0])
    assert hash_sponge([x, y]) != hash_sponge([y, x])
    # a point is not confused with its two coordinates
    assert hash_sponge([G]) != hash_sponge(list(G.affine()))


@given(st.lists(scalars, min_size=1, max_size=9))
def test_sponge_matches_oracle(xs):
    assert hash_sponge(xs) == oracles.sponge(xs, [False] * len(xs))


def test_sponge_rejects_empty_and_out_of_range():
    with pytest.raises(ValueError):
        hash_sponge([])
    with pytest.raises(ValueError):
        hash_sponge([Q])


def test_fast_hash_properties():
    assert hash_fast(b"") == hash_fast(b"")
    assert hash_fast(b"\x00") != hash_fast(b"\x01")
    assert 0 <= hash_fast(b"abc") < T


# -- keys -------------------------------------------------------------------

def test_static_keys_invariants(rng):
    k1, k2 = gen_static_keys(rng), gen_static_keys(rng)
    assert k1.A == mul_g(k1.a) and k1.B == mul_g(k1.b)
    assert (k1.a, k1.b) != (k2.a, k2.b)


def test_note_key_dh_symmetry_and_recovery(rng):
    keys = gen_static_keys(rng)
    nk, r = gen_note_keypair(keys.public, rng)
    assert shared_key(keys, nk.R) == keys.A * r == nk.k_dh
    assert keys.view_key.owns(nk.npk, nk.R)
    nsk = recover_note_secret(keys, nk.R, nk.npk)
    assert mul_g(nsk.nsk) == nk.npk
    assert nsk.npk_prime == mul_g_prime(nsk.nsk)


def test_third_party_cannot_claim_note(rng):
    keys, other = gen_static_keys(rng), gen_static_keys(rng)
    nk, _ = gen_note_keypair(keys.public, rng)
    assert not other.view_key.owns(nk.npk, nk.R)
    with pytest.raises(NoteNotOwned):
        recover_note_secret(other, nk.R, nk.npk)


def test_one_time_keys_are_fresh(rng):
    keys = gen_static_keys(rng)
    a, _ = gen_note_keypair(keys.public, rng)
    b, _ = gen_note_keypair(keys.public, rng)
    assert a.npk != b.npk and a.R != b.R
    assert a.npk not in (keys.A, keys.B)


# -- signatures -------------------------------------------------------------

@given(nonzero, scalars)
def test_single_signature_roundtrip_and_tamper(sk, m):
    rng = random.Random(sk ^ m)
    pk = mul_g(sk)
    sig = sign_single(sk, m, rng)
    assert verify_single(pk, m, sig)
    assert not verify_single(pk, (m + 1) % T, sig)
    assert not verify_single(pk + G, m, sig)
    assert not verify_single(pk, m, Signature(sig.R + G, sig.u))
    assert not verify_single(pk, m, Signature(sig.R, (sig.u + 1) % T))


@given(nonzero, scalars)
def test_double_signature_roundtrip_and_tamper(sk, m):
    rng = random.Random(sk ^ m)
    pk, pk_prime = mul_g(sk), mul_g_prime(sk)
    sig = sign_double(sk, m, rng)
    assert verify_double(pk, pk_prime, m, sig)
    assert not verify_double(pk, pk_prime, (m + 1) % T, sig)
    assert not verify_double(pk, pk_prime, m, DoubleSignature(sig.R, sig.R_prime + G, sig.u))
    assert not verify_double(pk, pk_prime, m, DoubleSignature(sig.R + G, sig.R_prime, sig.u))
    assert not verify_double(pk, pk_prime, m, DoubleSignature(sig.R, sig.R_prime, (sig.u + 1) % T))
    # pk'' not derived from the same secret
    assert not verify_double(pk, mul_g_prime((sk + 1) % T), m, sig)


def test_double_signature_links_keys(rng):
    sk = rng.randrange(1, T)
    sig = sign_double(sk, 77, rng)
    # independent construction of pk' from sk is the only accepting choice
    assert verify_double(mul_g(sk), scalar_mul(G_PRIME, sk), 77, sig)
    assert not verify_double(mul_g(sk), mul_g(sk), 77, sig)


def test_single_signature_completeness_many():
    rng = random.Random(11)
    for _ in range(1000):
        sk, m = rng.randrange(1, T), rng.randrange(T)
        assert verify_single(mul_g(sk), m, sign_single(sk, m, rng))


# -- encryption -------------------------------------------------------------

def test_encrypt_roundtrip_and_failures(rng):
    key = derive_symmetric_key(mul_g(5))
    msg = [10, 20, G]
    ct = encrypt(key, msg, 99)
    assert decrypt(key, ct, 99) == msg
    flipped = bytes([ct[0] ^ 1]) + ct[1:]
    with pytest.raises(DecryptionError):
        decrypt(key, flipped, 99)
    with pytest.raises(DecryptionError):
        decrypt(derive_symmetric_key(mul_g(6)), ct, 99)
    with pytest.raises(DecryptionError):
        decrypt(key, ct, 98)
