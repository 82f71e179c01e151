"""Citadel license lifecycle: request, issuance, on-chain use, service grant.

Roles:

* the user pays a service provider (SP) and, in the same transaction,
  sends it an encrypted request NFT carrying a fresh one-time key;
* the SP signs ``(npk_user, attr)`` and sends the license back as an
  encrypted NFT only the user can read;
* to use it, the user calls the license contract with a proof of the
  license relation, publishing a license nullifier and commitments to
  ``(lic_pk, attr, c)``, and sends the commitment randomness (the session
  cookie) to the SP in an NFT;
* off-chain, the user reveals the openings and the SP checks them against
  the on-chain commitments.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

from .crypto import (
    DecryptionError,
    DoubleSignature,
    NoteSecretKey,
    PublicKey,
    Signature,
    StaticKeys,
    commit,
    derive_symmetric_key,
    gen_note_keypair,
    gen_static_keys,
    mul_g,
    open_commitment,
    recover_note_secret,
    shared_key,
    sign_double,
    sign_single,
    symmetric_key_from_scalar,
    verify_double,
    verify_single,
)
from .encoding import EncodingError, decode, encode
from .hashing import hash_sponge
from .jubjub import Point, Scalar, random_scalar
from .merkle import MalformedProof, MerkleProof, MerkleTree, verify as verify_merkle
from .notes import Note, NoteType, note_hash, read_payload
from .proof import Verdict, register_relation
from .tx import (
    ContractCall,
    NftMint,
    SpendInput,
    Transaction,
    TxDraft,
    ValueMint,
    prepare_transaction,
)

LICENSE_RELATION = "license"
LICENSE_CONTRACT = "license"


class LicenseClause:
    SIGNATURE = "license.signature"
    OWNERSHIP = "license.ownership"
    MEMBERSHIP = "license.membership"
    NULLIFIER = "license.nullifier"
    COM0 = "license.com0"
    COM1 = "license.com1"
    COM2 = "license.com2"

    ALL = (SIGNATURE, OWNERSHIP, MEMBERSHIP, NULLIFIER, COM0, COM1, COM2)


class LicenseError(Exception):
    pass


class LicenseUnavailable(LicenseError):
    """No valid membership path: revoked, unconfirmed or unknown note."""


class MalformedRequest(LicenseError):
    pass


# -- keys and payloads ------------------------------------------------------

@dataclass(frozen=True)
class SpPublic:
    note_pk: PublicKey
    lic_pk: Point


@dataclass(frozen=True)
class SpKeys:
    note_keys: StaticKeys
    lic_sk: Scalar
    lic_pk: Point

    @property
    def public(self) -> SpPublic:
        return SpPublic(self.note_keys.public, self.lic_pk)


def gen_sp_keys(rng) -> SpKeys:
    lic_sk = random_scalar(rng)
    return SpKeys(gen_static_keys(rng), lic_sk, mul_g(lic_sk))


@dataclass(frozen=True)
class LicenseRequest:
    npk_user: Point
    R_user: Point
    k_user: Scalar

    def elements(self) -> list:
        return [self.npk_user, self.R_user, self.k_user]

    @classmethod
    def from_elements(cls, items) -> LicenseRequest:
        if len(items) != 3 or not isinstance(items[0], Point) or not isinstance(items[1], Point) \
                or isinstance(items[2], Point):
            raise MalformedRequest("license request payload has the wrong shape")
        return cls(items[0], items[1], Scalar(items[2]))


@dataclass(frozen=True)
class LicensePayload:
    sig_lic: Signature
    attr: Scalar

    def elements(self) -> list:
        return [self.sig_lic.R, self.sig_lic.u, self.attr]

    @classmethod
    def from_elements(cls, items) -> LicensePayload:
        if len(items) != 3 or not isinstance(items[0], Point) or isinstance(items[1], Point) \
                or isinstance(items[2], Point):
            raise LicenseError("license payload has the wrong shape")
        return cls(Signature(items[0], Scalar(items[1])), Scalar(items[2]))


@dataclass(frozen=True)
class SessionCookie:
    s0: Scalar
    s1: Scalar
    s2: Scalar

    @classmethod
    def random(cls, rng) -> SessionCookie:
        return cls(random_scalar(rng), random_scalar(rng), random_scalar(rng))

    def elements(self) -> list:
        return [self.s0, self.s1, self.s2]


@dataclass(frozen=True)
class License:
    note: Note
    payload: LicensePayload
    pos: int


def license_message(npk_user: Point, attr: int) -> Scalar:
    return hash_sponge([npk_user, attr])


def user_license_key(npk_user: Point, nsk: NoteSecretKey) -> Scalar:
    return hash_sponge([npk_user, nsk.nsk])


# -- the license relation ---------------------------------------------------

@dataclass(frozen=True)
class LicenseArgs:
    """Public contract arguments; hashed into the enclosing transaction."""

    notes_root: Scalar
    nullifier_lic: Scalar
    com0: Scalar
    com1: Point
    com2: Point


@dataclass(frozen=True)
class LicenseStatement:
    notes_root: Scalar
    nullifier_lic: Scalar
    com0: Scalar
    com1: Point
    com2: Point
    tx_hash: Scalar

    @classmethod
    def from_args(cls, args: LicenseArgs, tx_hash: int) -> LicenseStatement:
        return cls(args.notes_root, args.nullifier_lic, args.com0, args.com1, args.com2,
                   Scalar(tx_hash))


@dataclass(frozen=True)
class LicenseWitness:
    license_note: Note
    merkle_proof: MerkleProof
    npk_user: Point
    npk_prime_user: Point
    sig_tx: DoubleSignature
    sig_lic: Signature
    attr: Scalar
    c: Scalar
    lic_pk: Point
    s0: Scalar
    s1: Scalar
    s2: Scalar


def check_license_relation(st: LicenseStatement, w: LicenseWitness) -> Verdict:
    if not verify_single(w.lic_pk, license_message(w.npk_user, w.attr), w.sig_lic):
        return Verdict.reject(LicenseClause.SIGNATURE)
    if not verify_double(w.npk_user, w.npk_prime_user, st.tx_hash, w.sig_tx):
        return Verdict.reject(LicenseClause.OWNERSHIP)
    note = w.license_note
    try:
        member = (
            note.pos is not None
            and note.npk == w.npk_user
            and w.merkle_proof.pos == note.pos
            and w.merkle_proof.leaf == note_hash(note)
            and verify_merkle(st.notes_root, w.merkle_proof)
        )
    except MalformedProof:
        member = False
    if not member:
        return Verdict.reject(LicenseClause.MEMBERSHIP)
    if st.nullifier_lic != hash_sponge([w.npk_prime_user, w.c]):
        return Verdict.reject(LicenseClause.NULLIFIER)
    if st.com0 != hash_sponge([w.lic_pk, w.s0]):
        return Verdict.reject(LicenseClause.COM0)
    if not open_commitment(w.attr, w.s1, st.com1):
        return Verdict.reject(LicenseClause.COM1)
    if not open_commitment(w.c, w.s2, st.com2):
        return Verdict.reject(LicenseClause.COM2)
    return Verdict.accept()


register_relation(LICENSE_RELATION, check_license_relation, LicenseWitness)


def license_args(call: ContractCall) -> LicenseArgs:
    if call.contract != LICENSE_CONTRACT:
        raise LicenseError(f"not a license contract call: {call.contract!r}")
    return decode(LicenseArgs, call.args)


# -- protocol steps ---------------------------------------------------------

class Funds:
    """What the protocol needs from a wallet: keys and coin selection."""

    keys: StaticKeys

    def fund(self, amount: int) -> tuple[list[SpendInput], int]:
        raise NotImplementedError


def _with_change(funds, amount: int, mints: list) -> tuple[list[SpendInput], list]:
    spends, change = funds.fund(amount)
    if change:
        mints = mints + [ValueMint(funds.keys.public, change)]
    return spends, mints


def send_license_request(user, sp_note_pk: PublicKey, price: int, gas: int, tree: MerkleTree,
                         backend, rng) -> tuple[Transaction, LicenseRequest]:
    """Step 1: pay ``price`` to the SP and send it an encrypted request NFT."""
    keys, _ = gen_note_keypair(user.keys.public, rng)
    nsk = recover_note_secret(user.keys, keys.R, keys.npk)
    req = LicenseRequest(keys.npk, keys.R, user_license_key(keys.npk, nsk))
    mints = [ValueMint(sp_note_pk, price), NftMint.to(sp_note_pk, req.elements(), rng)]
    spends, mints = _with_change(user, price + gas, mints)
    draft = prepare_transaction(spends, mints, gas, tree, rng)
    return draft.seal(backend, rng), req


def read_request(sp_keys: StaticKeys, note: Note) -> LicenseRequest:
    """Step 2 (SP side): decrypt a request NFT addressed to the SP."""
    if note.note_type is not NoteType.OBFUSCATED_NFT:
        raise MalformedRequest("license requests travel as obfuscated NFTs")
    try:
        items = read_payload(note, derive_symmetric_key(shared_key(sp_keys, note.R)))
    except (DecryptionError, EncodingError) as exc:
        raise MalformedRequest(str(exc)) from exc
    return LicenseRequest.from_elements(items)


def issue_license(sp: SpKeys, sp_funds, req: LicenseRequest, attr: int, gas: int,
                  tree: MerkleTree, backend, rng) -> tuple[Transaction, LicensePayload]:
    """Steps 2-3: sign ``(npk_user, attr)`` and mint the license to the user."""
    if req.npk_user.is_identity() or req.R_user.is_identity():
        raise MalformedRequest("request carries an identity point")
    sig = sign_single(sp.lic_sk, license_message(req.npk_user, attr), rng)
    payload = LicensePayload(sig, Scalar(attr))
    nft = NftMint(req.npk_user, req.R_user, symmetric_key_from_scalar(req.k_user),
                  payload.elements(), obfuscated=True)
    spends, mints = _with_change(sp_funds, gas, [nft])
    return prepare_transaction(spends, mints, gas, tree, rng).seal(backend, rng), payload


def open_license(user_keys: StaticKeys, note: Note) -> LicensePayload:
    """Step 4: decrypt a license NFT with the user's one-time license key."""
    if note.note_type is not NoteType.OBFUSCATED_NFT:
        raise LicenseError("licenses travel as obfuscated NFTs")
    nsk = recover_note_secret(user_keys, note.R, note.npk)
    key = symmetric_key_from_scalar(user_license_key(note.npk, nsk))
    try:
        items = read_payload(note, key)
    except (DecryptionError, EncodingError) as exc:
        raise LicenseError(str(exc)) from exc
    return LicensePayload.from_elements(items)


def fetch_license(user_keys: StaticKeys, hits) -> list[License]:
    """Step 4 over scan results: every decryptable license among ``hits``.

    ``hits`` are ``(note, pos)`` pairs, typically from a view-key scan of
    confirmed ledger state; unconfirmed notes never show up there.
    """
    found = []
    for note, pos in hits:
        if note.note_type is not NoteType.OBFUSCATED_NFT:
            continue
        try:
            payload = open_license(user_keys, note)
        except (LicenseError, ValueError):
            continue
        found.append(License(note.at(pos), payload, pos))
    if not found:
        raise LicenseError("no license found")
    return found


@dataclass
class LicenseUseBundle:
    """Everything for one license use, before the proofs are attached."""

    draft: TxDraft
    call: ContractCall
    statement: LicenseStatement
    witness: LicenseWitness
    cookie: SessionCookie

    def seal(self, backend, rng) -> Transaction:
        proof = backend.prove(LICENSE_RELATION, self.statement, self.witness)
        return self.draft.seal(backend, rng, replace(self.call, proof=proof))


def prepare_license_use(user, lic: License, c: int, sp: SpPublic, gas: int, tree: MerkleTree,
                        rng) -> LicenseUseBundle:
    note = lic.note.at(lic.pos)
    if lic.pos >= len(tree) or tree.leaves[lic.pos] != note_hash(note):
        raise LicenseUnavailable("license note has no valid membership path")
    nsk = recover_note_secret(user.keys, note.R, note.npk)
    sc = SessionCookie.random(rng)
    attr = lic.payload.attr
    args = LicenseArgs(
        tree.root,
        hash_sponge([nsk.npk_prime, c]),
        hash_sponge([sp.lic_pk, sc.s0]),
        commit(attr, sc.s1),
        commit(c, sc.s2),
    )
    call = ContractCall(LICENSE_CONTRACT, encode(args))
    spends, mints = _with_change(user, gas, [NftMint.to(sp.note_pk, sc.elements(), rng)])
    draft = prepare_transaction(spends, mints, gas, tree, rng, contract_call=call)

    statement = LicenseStatement.from_args(args, draft.tx_hash)
    witness = LicenseWitness(
        note, tree.prove(lic.pos), note.npk, nsk.npk_prime,
        sign_double(nsk.nsk, draft.tx_hash, rng), lic.payload.sig_lic, attr, Scalar(c),
        sp.lic_pk, sc.s0, sc.s1, sc.s2,
    )
    return LicenseUseBundle(draft, call, statement, witness, sc)


def use_license(user, lic: License, c: int, sp: SpPublic, gas: int, tree: MerkleTree, backend,
                rng) -> tuple[Transaction, SessionCookie]:
    """Step 5: nullify the license under challenge ``c`` via the license contract."""
    bundle = prepare_license_use(user, lic, c, sp, gas, tree, rng)
    return bundle.seal(backend, rng), bundle.cookie


@dataclass(frozen=True)
class ServiceRequest:
    tx_hash: Scalar
    lic_pk: Point
    attr: Scalar
    c: Scalar
    sc: SessionCookie


def request_service(tx_hash: int, lic_pk: Point, attr: int, c: int,
                    sc: SessionCookie) -> ServiceRequest:
    """Step 7: the tuple the user hands to the SP over the off-chain channel."""
    return ServiceRequest(Scalar(tx_hash), lic_pk, Scalar(attr), Scalar(c), sc)


@dataclass(frozen=True)
class Grant:
    granted: bool
    code: str

    def __bool__(self) -> bool:
        return self.granted


class GrantCode:
    GRANTED = "granted"
    UNKNOWN_TX = "unknown_tx"
    NOT_A_LICENSE_CALL = "not_a_license_call"
    FOREIGN_KEY = "policy.foreign_key"
    POLICY = "policy.rejected"
    OPENING = "opening_mismatch"
    COOKIE = "cookie_missing"


Policy = Callable[[int, int], bool]


def accept_all(attr: int, c: int) -> bool:
    return True


def grant_service(sp: SpKeys, req: ServiceRequest, ledger, policy: Policy = accept_all) -> Grant:
    """Step 8: check policy, commitment openings and receipt of the cookie NFT.

    ``ledger`` must expose ``get_tx(tx_hash) -> Transaction | None`` over
    confirmed state.
    """
    if req.lic_pk != sp.lic_pk:
        return Grant(False, GrantCode.FOREIGN_KEY)
    if not policy(req.attr, req.c):
        return Grant(False, GrantCode.POLICY)
    tx = ledger.get_tx(req.tx_hash)
    if tx is None:
        return Grant(False, GrantCode.UNKNOWN_TX)
    if tx.contract_call is None:
        return Grant(False, GrantCode.NOT_A_LICENSE_CALL)
    try:
        args = license_args(tx.contract_call)
    except (LicenseError, EncodingError):
        return Grant(False, GrantCode.NOT_A_LICENSE_CALL)
    sc = req.sc
    if not (
        hash_sponge([req.lic_pk, sc.s0]) == args.com0
        and open_commitment(req.attr, sc.s1, args.com1)
        and open_commitment(req.c, sc.s2, args.com2)
    ):
        return Grant(False, GrantCode.OPENING)
    if not _cookie_delivered(sp.note_keys, tx, sc):
        return Grant(False, GrantCode.COOKIE)
    return Grant(True, GrantCode.GRANTED)


def _cookie_delivered(keys: StaticKeys, tx: Transaction, sc: SessionCookie) -> bool:
    vk = keys.view_key
    for note in tx.mints:
        if note.note_type is not NoteType.OBFUSCATED_NFT or not vk.owns(note.npk, note.R):
            continue
        try:
            items = read_payload(note, derive_symmetric_key(shared_key(keys, note.R)))
        except (DecryptionError, EncodingError):
            continue
        if items == sc.elements():
            return True
    return False


def read_cookie(keys: StaticKeys, note: Note) -> Optional[SessionCookie]:
    """Step 6: recover a session cookie from an NFT addressed to the SP."""
    try:
        items = read_payload(note, derive_symmetric_key(shared_key(keys, note.R)))
    except (DecryptionError, EncodingError, ValueError):
        return None
    if len(items) != 3 or any(isinstance(x, Point) for x in items):
        return None
    return SessionCookie(*(Scalar(x) for x in items))
