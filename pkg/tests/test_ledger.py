import json
from dataclasses import replace

import pytest

from citadel.crypto import gen_static_keys, sign_single
from citadel.jubjub import T
from citadel.ledger import (
    EntryKind,
    Ledger,
    LedgerConfig,
    LedgerCorrupt,
    LedgerVersionError,
    Reject,
    Revocation,
    RevocationRejected,
)
from citadel.notes import mint_value_note
from citadel.protocol import (
    LICENSE_RELATION,
    LicenseClause,
    gen_sp_keys,
    license_args,
    license_message,
    prepare_license_use,
)
from citadel.tx import TX_RELATION, ValueMint, build_transaction, prepare_transaction, tx_hash_of

from helpers import World


def pay(world, src, dst, amount, gas=1):
    spends, change = src.fund(amount + gas)
    mints = [ValueMint(dst.keys.public, amount)]
    if change:
        mints.append(ValueMint(src.keys.public, change))
    return build_transaction(spends, mints, gas, world.tree, world.backend, world.rng)


def rehash(tx):
    return replace(tx, tx_hash=tx_hash_of(tx))


# -- basic acceptance -------------------------------------------------------

def test_positions_are_consecutive_and_height_counts_entries(world):
    alice, bob = world.user(), world.user(0)
    assert world.ledger.height == 1 and len(world.tree) == 1
    receipt = world.submit(pay(world, alice, bob, 30), alice, bob)
    assert receipt.positions == [1, 2]
    assert world.ledger.height == 2
    assert world.ledger.receipt_of(receipt.tx_hash).height == 1
    assert bob.balance == 30 and alice.balance == 69


def test_duplicate_submission_rejected_as_spent(world):
    alice, bob = world.user(), world.user(0)
    tx = pay(world, alice, bob, 30)
    assert world.ledger.submit_tx(tx)
    digest = world.ledger.digest()
    receipt = world.ledger.submit_tx(tx)
    assert not receipt and receipt.reject_reason == Reject.NULLIFIER_SEEN
    assert world.ledger.digest() == digest


@pytest.mark.parametrize("first", [0, 1])
def test_double_spend_interleavings(world, first):
    alice, bob, carol = world.user(), world.user(0), world.user(0)
    a = pay(world, alice, bob, 10)
    alice.release()
    b = pay(world, alice, carol, 20)
    assert set(a.spends) == set(b.spends)
    order = [a, b] if first == 0 else [b, a]
    assert world.ledger.submit_tx(order[0])
    receipt = world.ledger.submit_tx(order[1])
    assert receipt.reject_reason == Reject.NULLIFIER_SEEN


def test_structural_rejections(world):
    alice, bob = world.user(), world.user(0)
    tx = pay(world, alice, bob, 10)
    led = world.ledger
    digest = led.digest()
    cases = {
        Reject.HASH_MISMATCH: replace(tx, gas=tx.gas + 1),
        Reject.UNKNOWN_ROOT: rehash(replace(tx, anchor=(tx.anchor + 1) % T)),
        Reject.MISSING_PROOF: replace(tx, proof=None),
        Reject.SPEND_TYPE: rehash(replace(tx, spend_types=[])),
    }
    note, _ = mint_value_note(bob.keys.public, 5, False, world.rng)
    cases[Reject.MALFORMED_MINT] = rehash(replace(tx, mints=[replace(note, com=note.com + note.com)]))
    for reason, bad in cases.items():
        receipt = led.submit_tx(bad)
        assert not receipt and receipt.reject_reason == reason, reason
    assert led.digest() == digest
    assert led.submit_tx(tx)


def test_gas_below_fee_rejected(rng):
    world = World(rng, gas=2)
    alice, bob = world.user(), world.user(0)
    tx = pay(world, alice, bob, 10, gas=1)
    assert world.ledger.submit_tx(tx).reject_reason == Reject.GAS


def test_proof_failure_reports_clause(world):
    alice, bob = world.user(), world.user(0)
    spends, change = alice.fund(11)
    draft = prepare_transaction(spends, [ValueMint(bob.keys.public, 10),
                                         ValueMint(alice.keys.public, change)], 1, world.tree,
                                world.rng)
    w = draft.witness(world.rng)
    bad = replace(w, mints=[replace(w.mints[0], blinder=(w.mints[0].blinder + 1) % T)] + w.mints[1:])
    tx = draft.seal(world.backend, world.rng)
    forged = replace(tx, proof=world.backend.prove(TX_RELATION, tx.statement(), bad, strict=False))
    assert world.ledger.submit_tx(forged).reject_reason == "tx.commitment"


def test_tree_full(rng):
    world = World(rng, arity=2, depth=2)
    alice, bob = world.user(), world.user(0)
    world.ledger.faucet(alice.keys.public, 1, rng)
    world.ledger.faucet(alice.keys.public, 1, rng)
    alice.sync(world.ledger)
    tx = pay(world, alice, bob, 10)
    assert world.ledger.submit_tx(tx).reject_reason == Reject.TREE_FULL


def test_plain_tx_is_not_a_contract_call(world):
    alice, bob = world.user(), world.user(0)
    tx = pay(world, alice, bob, 10)
    assert world.ledger.call_license_contract(tx).reject_reason == Reject.UNKNOWN_CONTRACT


# -- license contract -------------------------------------------------------

@pytest.fixture
def licensed(world):
    user, sp = world.user(), world.sp()
    return world, user, sp, world.license_for(user, sp)


def test_license_call_atomic_with_fee_payment(licensed):
    world, user, sp, lic = licensed
    led = world.ledger
    b = prepare_license_use(user, lic, 0, sp.sp.public, 1, world.tree, world.rng)
    tx = b.seal(world.backend, world.rng)
    digest, spent = led.digest(), set(led.spent_nullifiers)

    # fee part broken: the transaction proof fails, so the license nullifier is not recorded
    w = b.draft.witness(world.rng)
    bad_w = replace(w, mints=[replace(w.mints[0], blinder=(w.mints[0].blinder + 1) % T)] + w.mints[1:])
    forged = replace(tx, proof=world.backend.prove(TX_RELATION, tx.statement(), bad_w, strict=False))
    assert led.submit_tx(forged).reject_reason.startswith("tx.")

    # license part broken: the fee is not burned and no note is spent
    lw = replace(b.witness, s2=(b.witness.s2 + 1) % T)
    proof = world.backend.prove(LICENSE_RELATION, b.statement, lw, strict=False)
    forged = replace(tx, contract_call=replace(tx.contract_call, proof=proof))
    assert led.submit_tx(forged).reject_reason == LicenseClause.COM2
    forged = replace(tx, contract_call=replace(tx.contract_call, proof=None))
    assert led.submit_tx(forged).reject_reason == Reject.MISSING_PROOF

    assert led.digest() == digest and led.spent_nullifiers == spent
    assert license_args(tx.contract_call).nullifier_lic not in led.license_nullifiers
    assert led.submit_tx(tx)
    assert license_args(tx.contract_call).nullifier_lic in led.license_nullifiers


def test_malformed_contract_args(licensed):
    world, user, sp, lic = licensed
    b = prepare_license_use(user, lic, 0, sp.sp.public, 1, world.tree, world.rng)
    tx = b.seal(world.backend, world.rng)
    bad = rehash(replace(tx, contract_call=replace(tx.contract_call, args=b"\x00\x01")))
    assert world.ledger.submit_tx(bad).reject_reason in (Reject.BAD_ARGS, "tx.ownership")
    unknown = rehash(replace(tx, contract_call=replace(tx.contract_call, contract="other")))
    assert not world.ledger.submit_tx(unknown)


def test_license_use_first_and_second(licensed):
    world, user, sp, lic = licensed
    for c in (0, 1, 2):
        tx, _ = world.use(user, sp, lic, c=c)
        assert world.submit(tx, user, sp)
    assert len(world.ledger.license_nullifiers) == 3
    assert len(world.ledger.license_nullifiers_tree) == 3
    tx, _ = world.use(user, sp, lic, c=1)
    assert world.ledger.submit_tx(tx).reject_reason == Reject.LICENSE_NULLIFIER_SEEN


# -- scanning ---------------------------------------------------------------

def test_scan_separation_and_incremental(world):
    alice, bob = world.user(), world.user()
    hits_a = world.ledger.scan(alice.keys.view_key)
    hits_b = world.ledger.scan(bob.keys.view_key)
    assert {h.pos for h in hits_a}.isdisjoint({h.pos for h in hits_b})
    h = world.ledger.height
    world.submit(pay(world, alice, bob, 7), alice, bob)
    new_b = world.ledger.scan(bob.keys.view_key, h)
    assert len(new_b) == 1 and new_b[0].height == h
    assert world.ledger.scan(bob.keys.view_key, world.ledger.height) == []


# -- revocation -------------------------------------------------------------

def test_revoke_requires_issuer_signature(licensed, rng):
    world, user, sp, lic = licensed
    npk, attr = lic.note.npk, lic.payload.attr
    other = gen_sp_keys(rng)
    forged = sign_single(other.lic_sk, license_message(npk, attr), rng)
    with pytest.raises(RevocationRejected):
        world.ledger.revoke_license_note(Revocation(lic.pos, forged, npk, attr, sp.sp.lic_pk))
    with pytest.raises(RevocationRejected):
        world.ledger.revoke_license_note(Revocation(0, lic.payload.sig_lic, npk, attr, sp.sp.lic_pk))
    with pytest.raises(RevocationRejected):
        world.ledger.revoke_license_note(Revocation(10 ** 6, lic.payload.sig_lic, npk, attr,
                                                    sp.sp.lic_pk))
    # value notes are never revocable, whatever the signature
    coin = world.ledger.note_at(0)
    own = sign_single(other.lic_sk, license_message(coin.npk, attr), rng)
    with pytest.raises(RevocationRejected):
        world.ledger.revoke_license_note(Revocation(0, own, coin.npk, attr, other.lic_pk))
    assert world.ledger.revoked == set()


def test_revoke_idempotent(licensed):
    world, user, sp, lic = licensed
    rev = Revocation(lic.pos, lic.payload.sig_lic, lic.note.npk, lic.payload.attr, sp.sp.lic_pk)
    root = world.ledger.revoke_license_note(rev)
    h = world.ledger.height
    assert world.ledger.revoke_license_note(rev) == root
    assert world.ledger.height == h
    assert world.ledger.log[-1].kind is EntryKind.REVOKE


# -- persistence and replay -------------------------------------------------

def busy_ledger(world):
    user, sp = world.user(), world.sp()
    lic = world.license_for(user, sp)
    tx, _ = world.use(user, sp, lic, c=3)
    assert world.submit(tx, user, sp)
    world.ledger.revoke_license_note(
        Revocation(lic.pos, lic.payload.sig_lic, lic.note.npk, lic.payload.attr, sp.sp.lic_pk))
    return user, sp, lic


def test_persist_restore_roundtrip(world, tmp_path):
    user, sp, lic = busy_ledger(world)
    path = tmp_path / "state.bin"
    world.ledger.persist(path)
    back = Ledger.restore(path)
    assert back.digest() == world.ledger.digest()
    assert back.faucet_supply == world.ledger.faucet_supply
    assert back.gas_burned == world.ledger.gas_burned
    assert back.revoked == world.ledger.revoked
    assert back.revocation_floor == world.ledger.revocation_floor
    assert [r.note for r in back.notes] == [r.note for r in world.ledger.notes]
    # the restored ledger keeps enforcing spent-ness
    tx = world.ledger.log[2].tx
    assert back.submit_tx(tx).reject_reason == Reject.NULLIFIER_SEEN


def test_restore_detects_damage(world, tmp_path):
    busy_ledger(world)
    data = world.ledger.to_bytes()
    with pytest.raises(LedgerCorrupt):
        Ledger.from_bytes(data[: len(data) // 2])
    with pytest.raises(LedgerCorrupt):
        Ledger.from_bytes(data[:20])
    flipped = bytearray(data)
    flipped[100] ^= 1
    with pytest.raises(LedgerCorrupt):
        Ledger.from_bytes(bytes(flipped))
    import hashlib
    body = bytearray(data[:-32])
    body[3] = 9
    with pytest.raises(LedgerVersionError):
        Ledger.from_bytes(bytes(body) + hashlib.blake2b(bytes(body), digest_size=32).digest())


def test_replay_reproduces_digest(world):
    busy_ledger(world)
    again = Ledger.replay(world.ledger.log, world.ledger.config)
    assert again.digest() == world.ledger.digest()
    assert again.height == world.ledger.height


def test_event_log_has_one_line_per_entry(rng, tmp_path):
    log = tmp_path / "events.jsonl"
    world = World(rng)
    world.ledger.event_log = log
    busy_ledger(world)
    lines = [json.loads(x) for x in log.read_text().splitlines()]
    assert len(lines) == world.ledger.height
    assert [x["height"] for x in lines] == list(range(world.ledger.height))
    assert {x["kind"] for x in lines} == {"tx", "faucet", "revoke"}


def test_rejected_submission_leaves_log_untouched(rng, tmp_path):
    log = tmp_path / "events.jsonl"
    led = Ledger(LedgerConfig(), event_log=log)
    keys = gen_static_keys(rng)
    led.faucet(keys.public, 5, rng)
    assert len(log.read_text().splitlines()) == 1
