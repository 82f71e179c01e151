"""Regenerate the frozen fixtures under vectors/.

Curve, commitment, sponge and Merkle values come from the slow reference
implementations in tests/oracles.py, not from the library. Serialized
objects (notes, transactions) are produced by the library from a seeded RNG
and pinned so later changes to the wire format show up as test failures.

    python3 scripts/gen_vectors.py [--out vectors]
"""

import argparse
import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402
from citadel.crypto import (  # noqa: E402
    G,
    G_PRIME,
    derive_symmetric_key,
    gen_note_keypair,
    gen_static_keys,
    recover_note_secret,
    sign_double,
    sign_single,
)
from citadel.encoding import envelope  # noqa: E402
from citadel.hashing import hash_fast  # noqa: E402
from citadel.jubjub import encode_scalar  # noqa: E402
from citadel.ledger import Ledger  # noqa: E402
from citadel.merkle import EMPTY_LEAF, TOMBSTONE  # noqa: E402
from citadel.notes import compute_nullifier, mint_nft, mint_value_note, note_hash  # noqa: E402
from citadel.protocol import (  # noqa: E402
    License,
    gen_sp_keys,
    issue_license,
    send_license_request,
    use_license,
)
from citadel.wallet import Wallet  # noqa: E402

SEED = 0x5EED


def sx(v: int) -> str:
    return encode_scalar(v).hex()


def px(p) -> str:
    return oracles.compress(p).hex()


def crypto_vectors(rng: random.Random) -> dict:
    g, h = G.affine(), G_PRIME.affine()
    ks = [1, 2, 7, oracles.T - 1] + [rng.randrange(oracles.T) for _ in range(4)]
    commits = [(0, 0), (1, 0), (5, 7), (6, 7)] + [
        (rng.randrange(1 << 62), rng.randrange(oracles.T)) for _ in range(4)
    ]
    sponge_cases = [
        [("s", 0)], [("s", 1)], [("s", 1), ("s", 0)], [("s", 1), ("s", 2)], [("s", 2), ("s", 1)],
        [("p", g)], [("p", g), ("s", 5)], [("s", i) for i in range(9)],
    ]
    sponge = []
    for case in sponge_cases:
        flat, shape = [], []
        for kind, v in case:
            flat += list(v) if kind == "p" else [v]
            shape.append(kind == "p")
        sponge.append({
            "inputs": [{kind: (px(v) if kind == "p" else sx(v))} for kind, v in case],
            "out": sx(oracles.sponge(flat, shape)),
        })
    fast = [{"data": d.hex(), "out": sx(hash_fast(d))} for d in (b"", b"\x00", b"\x01", b"citadel")]

    sigs = []
    for _ in range(3):
        sk, m = rng.randrange(1, oracles.T), rng.randrange(oracles.T)
        s1 = sign_single(sk, m, rng)
        s2 = sign_double(sk, m, rng)
        sigs.append({
            "sk": sx(sk), "m": sx(m),
            "pk": px(oracles.mul(sk, g)), "pk_prime": px(oracles.mul(sk, h)),
            "single": {"R": s1.R.to_bytes().hex(), "u": sx(s1.u)},
            "double": {"R": s2.R.to_bytes().hex(), "R_prime": s2.R_prime.to_bytes().hex(),
                       "u": sx(s2.u)},
        })
    return {
        "generators": {"G": px(g), "G_prime": px(h)},
        "scalar_mul_G": [{"k": sx(k), "point": px(oracles.mul(k, g))} for k in ks],
        "commit": [{"m": sx(m), "r": sx(r), "com": px(oracles.commit(m, r, g, h))}
                   for m, r in commits],
        "sponge": sponge,
        "hash_fast": fast,
        "signatures": sigs,
    }


def merkle_vectors(rng: random.Random) -> dict:
    def hfn(children):
        return oracles.sponge(children, [False] * len(children))

    cases = []
    for arity, depth, n in [(2, 1, 0), (2, 3, 5), (4, 2, 16), (4, 3, 7), (4, 17, 0), (4, 17, 6)]:
        leaves = [rng.randrange(oracles.T) for _ in range(n)]
        root = oracles.merkle_root_sparse(leaves, arity, depth, hfn, EMPTY_LEAF)
        cases.append({"arity": arity, "depth": depth, "leaves": [sx(x) for x in leaves],
                      "root": sx(root)})
    return {"empty_leaf": sx(EMPTY_LEAF), "tombstone": sx(TOMBSTONE), "cases": cases}


def note_vectors(rng: random.Random, out: Path) -> dict:
    keys = gen_static_keys(rng)
    pk = keys.public
    docs = []
    made = [
        ("transparent_value", mint_value_note(pk, 10, False, rng)[0]),
        ("obfuscated_value", mint_value_note(pk, 10, True, rng)[0]),
    ]
    nk, _ = gen_note_keypair(pk, rng)
    made.append(("transparent_nft", mint_nft(nk.npk, nk.R, [1, 2, G], b"", False, rng)))
    nk, _ = gen_note_keypair(pk, rng)
    made.append(("obfuscated_nft", mint_nft(nk.npk, nk.R, [3, G_PRIME],
                                            derive_symmetric_key(nk.k_dh), True, rng)))
    (out / "notes").mkdir(parents=True, exist_ok=True)
    for pos, (name, note) in enumerate(made):
        note = note.at(pos)
        nsk = recover_note_secret(keys, note.R, note.npk)
        blob = envelope("note", note)
        (out / "notes" / f"{name}.bin").write_bytes(blob)
        docs.append({"name": name, "file": f"notes/{name}.bin", "note_hash": sx(note_hash(note)),
                     "nullifier": sx(compute_nullifier(nsk, pos))})
    return {"notes": docs}


def tx_vectors(rng: random.Random, out: Path) -> dict:
    led = Ledger()
    sp = gen_sp_keys(rng)
    spw, user = Wallet.for_sp(sp), Wallet(gen_static_keys(rng))
    led.faucet(user.keys.public, 100, rng)
    led.faucet(sp.note_keys.public, 20, rng)
    user.sync(led)
    spw.sync(led)
    docs = []

    def keep(name, tx):
        assert led.submit_tx(tx), name
        (out / "tx" / f"{name}.bin").write_bytes(envelope("tx", tx))
        docs.append({"name": name, "file": f"tx/{name}.bin", "tx_hash": sx(tx.tx_hash)})
        user.sync(led)
        spw.sync(led)

    tx, _ = send_license_request(user, sp.note_keys.public, 10, 1, led.notes_tree, led.backend, rng)
    keep("license_request", tx)
    req = next(iter(spw.requests.values())).request
    tx, _ = issue_license(sp, spw, req, 42, 1, led.notes_tree, led.backend, rng)
    keep("license_issue", tx)
    rec = next(iter(user.licenses.values()))
    tx, _ = use_license(user, License(rec.note, rec.payload, rec.pos), 0, sp.public, 1,
                        led.notes_tree, led.backend, rng)
    keep("license_use", tx)
    (out / "ledger.bin").write_bytes(led.to_bytes())
    return {"transactions": docs, "ledger": {"file": "ledger.bin", "digest": led.digest().hex()}}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "vectors"))
    args = ap.parse_args()
    out = Path(args.out)
    (out / "tx").mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    for name, doc in [
        ("crypto.json", crypto_vectors(rng)),
        ("merkle.json", merkle_vectors(rng)),
        ("notes.json", note_vectors(rng, out)),
        ("tx.json", tx_vectors(rng, out)),
    ]:
        (out / name).write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
