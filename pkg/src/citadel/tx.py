"""Transactions and the transaction relation (membership, ownership,
nullification, commitment openings, balance and spent-type publicity)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

from .crypto import (
    DoubleSignature,
    NoteSecretKey,
    PublicKey,
    SymKey,
    derive_symmetric_key,
    gen_note_keypair,
    open_commitment,
    sign_double,
    verify_double,
)
from .encoding import encode
from .hashing import hash_sponge_bytes
from .jubjub import Point, Scalar
from .merkle import MalformedProof, MerkleProof, MerkleTree, verify as verify_merkle
from .notes import (
    MAX_VALUE,
    Note,
    NoteType,
    Opening,
    ValueRangeError,
    check_value,
    compute_nullifier,
    mint_nft,
    mint_value_note,
    note_hash,
)
from .proof import ProofObject, Verdict, register_relation

TX_RELATION = "tx"


class TxClause:
    """Reject identifiers of the transaction relation."""

    MEMBERSHIP = "tx.membership"
    OWNERSHIP = "tx.ownership"
    NULLIFIER = "tx.nullifier"
    COMMITMENT = "tx.commitment"
    BALANCE = "tx.balance"
    TYPE = "tx.type"
    SHAPE = "tx.shape"

    ALL = (MEMBERSHIP, OWNERSHIP, NULLIFIER, COMMITMENT, BALANCE, TYPE)


class TransactionError(ValueError):
    pass


class Unbalanced(TransactionError):
    pass


class MissingKey(TransactionError):
    pass


# -- wire types -------------------------------------------------------------

@dataclass(frozen=True)
class ContractCall:
    contract: str
    args: bytes
    proof: Optional[ProofObject] = None


@dataclass(frozen=True)
class TxStatement:
    notes_root: Scalar
    nullifiers: list[Scalar]
    spend_types: list[NoteType]
    mint_commitments: list[Point]
    gas: Scalar
    tx_hash: Scalar


@dataclass(frozen=True)
class SpendWitness:
    note: Note
    merkle_proof: MerkleProof
    npk_prime: Point
    opening: Opening
    sig: DoubleSignature


@dataclass(frozen=True)
class TxWitness:
    spends: list[SpendWitness]
    mints: list[Opening]


@dataclass(frozen=True)
class Transaction:
    anchor: Scalar
    spends: list[Scalar]
    spend_types: list[NoteType]
    mints: list[Note]
    gas: Scalar
    contract_call: Optional[ContractCall]
    tx_hash: Scalar
    proof: Optional[ProofObject]

    def statement(self) -> TxStatement:
        return TxStatement(
            self.anchor,
            list(self.spends),
            list(self.spend_types),
            [n.com for n in self.mints if n.note_type.is_value],
            self.gas,
            self.tx_hash,
        )


@dataclass(frozen=True)
class _HashedBody:
    anchor: Scalar
    spends: list[Scalar]
    spend_types: list[NoteType]
    mints: list[Note]
    gas: Scalar
    contract_call: Optional[ContractCall]


def compute_tx_hash(anchor, spends, spend_types, mints, gas, contract_call) -> Scalar:
    """Hash of everything public except signatures and proofs."""
    if contract_call is not None:
        contract_call = replace(contract_call, proof=None)
    body = _HashedBody(anchor, list(spends), list(spend_types), list(mints), gas, contract_call)
    return hash_sponge_bytes(b"citadel/tx" + encode(body))


def tx_hash_of(tx: Transaction) -> Scalar:
    return compute_tx_hash(tx.anchor, tx.spends, tx.spend_types, tx.mints, tx.gas,
                           tx.contract_call)


# -- relation ---------------------------------------------------------------

def check_tx_relation(st: TxStatement, w: TxWitness) -> Verdict:
    """Accept iff every clause holds; otherwise name the first failing one."""
    if len(w.spends) != len(st.nullifiers) or len(st.spend_types) != len(st.nullifiers):
        return Verdict.reject(TxClause.SHAPE)
    if len(w.mints) != len(st.mint_commitments):
        return Verdict.reject(TxClause.SHAPE)

    for i, sp in enumerate(w.spends):
        note = sp.note
        public_type = st.spend_types[i]
        if not public_type.is_value or note.note_type != public_type:
            return Verdict.reject(TxClause.TYPE)
        try:
            member = (
                note.pos is not None
                and sp.merkle_proof.pos == note.pos
                and sp.merkle_proof.leaf == note_hash(note)
                and verify_merkle(st.notes_root, sp.merkle_proof)
            )
        except MalformedProof:
            member = False
        if not member:
            return Verdict.reject(TxClause.MEMBERSHIP)
        if not verify_double(note.npk, sp.npk_prime, st.tx_hash, sp.sig):
            return Verdict.reject(TxClause.OWNERSHIP)
        if st.nullifiers[i] != compute_nullifier(sp.npk_prime, note.pos):
            return Verdict.reject(TxClause.NULLIFIER)
        if note.com is None or not open_commitment(sp.opening.value, sp.opening.blinder, note.com):
            return Verdict.reject(TxClause.COMMITMENT)

    for opening, com in zip(w.mints, st.mint_commitments):
        if not open_commitment(opening.value, opening.blinder, com):
            return Verdict.reject(TxClause.COMMITMENT)

    values_in = [sp.opening.value for sp in w.spends]
    values_out = [m.value for m in w.mints]
    if any(not 0 <= v < MAX_VALUE for v in values_in + values_out + [st.gas]):
        return Verdict.reject(TxClause.BALANCE)
    if sum(values_in) - sum(values_out) - st.gas != 0:
        return Verdict.reject(TxClause.BALANCE)
    return Verdict.accept()


register_relation(TX_RELATION, check_tx_relation, TxWitness)


# -- construction -----------------------------------------------------------

@dataclass(frozen=True)
class SpendInput:
    note: Note
    nsk: NoteSecretKey
    opening: Opening


@dataclass(frozen=True)
class ValueMint:
    pk: PublicKey
    value: int
    obfuscated: bool = True


@dataclass(frozen=True)
class NftMint:
    npk: Point
    R: Point
    key: SymKey
    payload: Sequence
    obfuscated: bool = True

    @classmethod
    def to(cls, pk: PublicKey, payload: Sequence, rng, obfuscated: bool = True) -> NftMint:
        """NFT addressed to ``pk``, encrypted under the note DH key."""
        keys, _ = gen_note_keypair(pk, rng)
        return cls(keys.npk, keys.R, derive_symmetric_key(keys.k_dh), payload, obfuscated)


MintSpec = Union[ValueMint, NftMint]


@dataclass
class TxDraft:
    """A transaction with everything fixed except signatures and proofs."""

    anchor: Scalar
    spends: list[SpendInput]
    merkle_proofs: list[MerkleProof]
    nullifiers: list[Scalar]
    mints: list[Note]
    mint_openings: list[Opening]
    gas: Scalar
    contract_call: Optional[ContractCall]
    tx_hash: Scalar

    @property
    def spend_types(self) -> list[NoteType]:
        return [s.note.note_type for s in self.spends]

    def statement(self) -> TxStatement:
        return TxStatement(
            self.anchor, list(self.nullifiers), self.spend_types,
            [n.com for n in self.mints if n.note_type.is_value], self.gas, self.tx_hash,
        )

    def witness(self, rng) -> TxWitness:
        """Sign ``tx_hash`` with every spend key and assemble the witness."""
        sigs = [sign_double(s.nsk.nsk, self.tx_hash, rng) for s in self.spends]
        return TxWitness(
            [
                SpendWitness(s.note, mp, s.nsk.npk_prime, s.opening, sig)
                for s, mp, sig in zip(self.spends, self.merkle_proofs, sigs)
            ],
            list(self.mint_openings),
        )

    def seal(self, backend, rng, contract_call: ContractCall | None = None) -> Transaction:
        """Attach signatures and the relation proof."""
        call = self.contract_call
        if contract_call is not None:
            if call is None or (contract_call.contract, contract_call.args) != (call.contract, call.args):
                raise TransactionError("contract call differs from the hashed one")
            call = contract_call
        proof = backend.prove(TX_RELATION, self.statement(), self.witness(rng))
        return Transaction(self.anchor, list(self.nullifiers), self.spend_types, list(self.mints),
                           self.gas, call, self.tx_hash, proof)


def prepare_transaction(spends: Sequence[SpendInput], mints: Sequence[MintSpec], gas: int,
                        tree: MerkleTree, rng,
                        contract_call: ContractCall | None = None) -> TxDraft:
    check_value(gas)
    for s in spends:
        check_value(s.opening.value)
        if s.note.pos is None:
            raise TransactionError("spent note has no ledger position")
        if not s.note.note_type.is_value:
            raise TransactionError("only value notes can be spent")
        if s.nsk.npk != s.note.npk:
            raise MissingKey("note secret key does not match the note")
    for m in mints:
        if isinstance(m, ValueMint):
            check_value(m.value)
    total_in = sum(s.opening.value for s in spends)
    total_out = sum(m.value for m in mints if isinstance(m, ValueMint))
    if total_in - total_out - gas != 0:
        raise Unbalanced(f"inputs {total_in} != outputs {total_out} + gas {gas}")

    notes, openings = [], []
    for m in mints:
        if isinstance(m, ValueMint):
            note, opening = mint_value_note(m.pk, m.value, m.obfuscated, rng)
            notes.append(note)
            openings.append(opening)
        else:
            notes.append(mint_nft(m.npk, m.R, m.payload, m.key, m.obfuscated, rng))

    anchor = tree.root
    proofs = [tree.prove(s.note.pos) for s in spends]
    nullifiers = [compute_nullifier(s.nsk, s.note.pos) for s in spends]
    types = [s.note.note_type for s in spends]
    tx_hash = compute_tx_hash(anchor, nullifiers, types, notes, Scalar(gas), contract_call)
    return TxDraft(anchor, list(spends), proofs, nullifiers, notes, openings, Scalar(gas),
                   contract_call, tx_hash)


def build_transaction(spends: Sequence[SpendInput], mints: Sequence[MintSpec], gas: int,
                      tree: MerkleTree, backend, rng,
                      contract_call: ContractCall | None = None) -> Transaction:
    return prepare_transaction(spends, mints, gas, tree, rng, contract_call).seal(backend, rng)


__all__ = [
    "ContractCall", "MintSpec", "NftMint", "SpendInput", "SpendWitness", "Transaction",
    "TransactionError", "TxClause", "TxDraft", "TxStatement", "TxWitness", "Unbalanced",
    "MissingKey", "ValueMint", "ValueRangeError", "build_transaction", "check_tx_relation",
    "compute_tx_hash", "prepare_transaction", "tx_hash_of",
]
