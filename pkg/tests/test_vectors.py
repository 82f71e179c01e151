"""Library against the frozen fixtures in vectors/.

Curve, sponge and Merkle fixtures were computed by the slow oracles; here
the fast library code must reproduce them. Serialized notes and
transactions must survive a decode/encode cycle bit for bit.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from citadel.crypto import (
    G,
    G_PRIME,
    DoubleSignature,
    Signature,
    commit,
    mul_g,
    mul_g_prime,
    verify_double,
    verify_single,
)
from citadel.encoding import envelope, open_envelope
from citadel.hashing import hash_fast, hash_sponge
from citadel.jubjub import decode_point, decode_scalar, encode_point
from citadel.ledger import Ledger
from citadel.merkle import EMPTY_LEAF, TOMBSTONE, MerkleTree
from citadel.notes import Note, note_hash
from citadel.tx import Transaction, tx_hash_of

ROOT = Path(__file__).resolve().parent.parent
VECTORS = ROOT / "vectors"


def load(name):
    return json.loads((VECTORS / name).read_text())


def sc(h):
    return decode_scalar(bytes.fromhex(h))


def pt(h):
    return decode_point(bytes.fromhex(h))


CRYPTO = load("crypto.json")


def test_generators():
    assert encode_point(G).hex() == CRYPTO["generators"]["G"]
    assert encode_point(G_PRIME).hex() == CRYPTO["generators"]["G_prime"]


@pytest.mark.parametrize("case", CRYPTO["scalar_mul_G"])
def test_scalar_mul(case):
    assert encode_point(mul_g(sc(case["k"]))).hex() == case["point"]


@pytest.mark.parametrize("case", CRYPTO["commit"])
def test_commit(case):
    assert encode_point(commit(sc(case["m"]), sc(case["r"]))).hex() == case["com"]


@pytest.mark.parametrize("case", CRYPTO["sponge"])
def test_sponge(case):
    items = [sc(v) if k == "s" else pt(v) for d in case["inputs"] for k, v in d.items()]
    assert hash_sponge(items) == sc(case["out"])


@pytest.mark.parametrize("case", CRYPTO["hash_fast"])
def test_hash_fast(case):
    assert hash_fast(bytes.fromhex(case["data"])) == sc(case["out"])


@pytest.mark.parametrize("case", CRYPTO["signatures"])
def test_signatures(case):
    sk, m = sc(case["sk"]), sc(case["m"])
    pk, pk_prime = pt(case["pk"]), pt(case["pk_prime"])
    assert mul_g(sk) == pk and mul_g_prime(sk) == pk_prime
    s1 = Signature(pt(case["single"]["R"]), sc(case["single"]["u"]))
    d = case["double"]
    s2 = DoubleSignature(pt(d["R"]), pt(d["R_prime"]), sc(d["u"]))
    assert verify_single(pk, m, s1) and verify_double(pk, pk_prime, m, s2)
    assert not verify_single(pk, (m + 1), s1)


MERKLE = load("merkle.json")


def test_merkle_constants():
    assert EMPTY_LEAF == sc(MERKLE["empty_leaf"]) and TOMBSTONE == sc(MERKLE["tombstone"])


@pytest.mark.parametrize("case", MERKLE["cases"], ids=lambda c: f"k{c['arity']}h{c['depth']}n{len(c['leaves'])}")
def test_merkle_roots(case):
    tree = MerkleTree(case["arity"], case["depth"])
    for leaf in case["leaves"]:
        tree.append(sc(leaf))
    assert tree.root == sc(case["root"])


@pytest.mark.parametrize("case", load("notes.json")["notes"], ids=lambda c: c["name"])
def test_note_roundtrip(case):
    blob = (VECTORS / case["file"]).read_bytes()
    note = open_envelope("note", Note, blob)
    assert envelope("note", note) == blob
    assert note_hash(note) == sc(case["note_hash"])


TX = load("tx.json")


@pytest.mark.parametrize("case", TX["transactions"], ids=lambda c: c["name"])
def test_tx_roundtrip(case):
    blob = (VECTORS / case["file"]).read_bytes()
    tx = open_envelope("tx", Transaction, blob)
    assert envelope("tx", tx) == blob
    assert tx.tx_hash == tx_hash_of(tx) == sc(case["tx_hash"])


def test_ledger_state_digest():
    led = Ledger.from_bytes((VECTORS / TX["ledger"]["file"]).read_bytes())
    assert led.digest().hex() == TX["ledger"]["digest"]
    assert led.to_bytes() == (VECTORS / TX["ledger"]["file"]).read_bytes()
    again = Ledger.replay(led.log, led.config)
    assert again.digest() == led.digest()


def test_generator_is_deterministic(tmp_path):
    subprocess.run([sys.executable, str(ROOT / "scripts" / "gen_vectors.py"), "--out", str(tmp_path)],
                   check=True, capture_output=True)
    frozen = sorted(p.relative_to(VECTORS) for p in VECTORS.rglob("*") if p.is_file())
    fresh = sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*") if p.is_file())
    assert fresh == frozen
    for rel in frozen:
        assert (tmp_path / rel).read_bytes() == (VECTORS / rel).read_bytes(), rel
