"""Deterministic single-node ledger: validation, note tree, nullifiers,
the license contract, scanning, revocation and persistence.

One transaction per block, so ``height`` counts log entries. Faucet mints
and revocations are log entries too; replaying a log reproduces the state.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Optional

from .crypto import PublicKey, Signature, ViewKey, commit, decode_elements, verify_single
from .encoding import EncodingError, digest, encode, envelope, open_envelope, to_json
from .hashing import hash_sponge_bytes
from .jubjub import Point, Scalar
from .merkle import DEFAULT_ARITY, DEFAULT_DEPTH, TOMBSTONE, MerkleTree
from .notes import MAX_VALUE, Note, NoteType, mint_value_note, note_hash
from .proof import ProofBackend, make_backend
from .protocol import (
    LICENSE_CONTRACT,
    LICENSE_RELATION,
    LicenseStatement,
    license_args,
    license_message,
)
from .tx import TX_RELATION, Transaction, tx_hash_of

STATE_KIND = "ledger-state"
STATE_VERSION = 1


class Reject:
    """Ledger-level reject reasons; relation failures use clause identifiers."""

    HASH_MISMATCH = "tx hash mismatch"
    NULLIFIER_SEEN = "nullifier seen"
    UNKNOWN_ROOT = "unknown root"
    GAS = "gas below fee"
    SPEND_TYPE = "tx.type"
    MALFORMED_MINT = "malformed mint"
    MISSING_PROOF = "missing proof"
    DUPLICATE = "duplicate tx"
    TREE_FULL = "tree full"
    UNKNOWN_CONTRACT = "unknown contract"
    BAD_ARGS = "malformed contract args"
    LICENSE_NULLIFIER_SEEN = "license nullifier seen"
    LICENSE_ROOT_REVOKED = "license root predates revocation"


class LedgerError(Exception):
    pass


class LedgerCorrupt(LedgerError):
    pass


class LedgerVersionError(LedgerError):
    pass


class RevocationRejected(LedgerError):
    pass


@dataclass(frozen=True)
class LedgerConfig:
    gas_fee: int = 1
    arity: int = DEFAULT_ARITY
    depth: int = DEFAULT_DEPTH
    backend: str = "transparent"


@dataclass(frozen=True)
class Receipt:
    tx_hash: Scalar
    accepted: bool
    positions: list[int] = field(default_factory=list)
    reject_reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.accepted


class EntryKind(IntEnum):
    TX = 0
    FAUCET = 1
    REVOKE = 2


@dataclass(frozen=True)
class Revocation:
    """Proof of issuance: the SP's signature over the license at ``pos``."""

    pos: int
    sig_lic: Signature
    npk_user: Point
    attr: Scalar
    lic_pk: Point


@dataclass(frozen=True)
class LogEntry:
    height: int
    kind: EntryKind
    tx_hash: Scalar
    positions: list[int]
    tx: Optional[Transaction] = None
    faucet_note: Optional[Note] = None
    faucet_value: int = 0
    revocation: Optional[Revocation] = None


@dataclass(frozen=True)
class NoteRecord:
    note: Note
    tx_hash: Scalar
    height: int


@dataclass(frozen=True)
class ScanHit:
    note: Note
    pos: int
    tx_hash: Scalar
    height: int


@dataclass(frozen=True)
class _Snapshot:
    config: LedgerConfig
    log: list[LogEntry]
    note_leaves: list[Scalar]
    note_roots: list[Scalar]
    license_leaves: list[Scalar]
    license_roots: list[Scalar]
    spent: list[Scalar]
    revocation_floor: int


@dataclass(frozen=True)
class _DigestView:
    notes_root: Scalar
    note_roots: list[Scalar]
    license_root: Scalar
    license_roots: list[Scalar]
    spent: list[Scalar]
    tx_hashes: list[Scalar]
    revoked: list[int]
    revocation_floor: int
    height: int


def faucet_hash(note: Note) -> Scalar:
    return hash_sponge_bytes(b"citadel/faucet" + encode(note))


class Ledger:
    """Single-writer state machine; every mutation holds ``self._lock``."""

    def __init__(self, config: LedgerConfig | None = None, backend: ProofBackend | None = None,
                 event_log: str | os.PathLike | None = None):
        self.config = config or LedgerConfig()
        self.backend = backend or make_backend(self.config.backend)
        self.notes_tree = MerkleTree(self.config.arity, self.config.depth)
        self.license_nullifiers_tree = MerkleTree(self.config.arity, self.config.depth)
        self.license_nullifiers: set[Scalar] = set()
        self.spent_nullifiers: set[Scalar] = set()
        self.notes: list[NoteRecord] = []
        self.tx_log: dict[Scalar, LogEntry] = {}
        self.log: list[LogEntry] = []
        self.revoked: set[int] = set()
        # license calls must anchor at or after the latest revocation root
        self.revocation_floor = 0
        self.faucet_supply = 0
        self.gas_burned = 0
        self.event_log = Path(event_log) if event_log is not None else None
        self._lock = threading.Lock()

    @property
    def height(self) -> int:
        return len(self.log)

    @property
    def root(self) -> Scalar:
        return self.notes_tree.root

    # -- reads --------------------------------------------------------------

    def get_tx(self, tx_hash: int) -> Transaction | None:
        entry = self.tx_log.get(tx_hash)
        return entry.tx if entry is not None else None

    def receipt_of(self, tx_hash: int) -> LogEntry | None:
        return self.tx_log.get(tx_hash)

    def is_spent(self, nullifier: int) -> bool:
        return nullifier in self.spent_nullifiers

    def note_at(self, pos: int) -> Note:
        return self.notes[pos].note

    def scan(self, vk: ViewKey, from_height: int = 0) -> list[ScanHit]:
        """Notes addressed to ``vk`` confirmed at or after ``from_height``."""
        return [
            ScanHit(r.note, r.note.pos, r.tx_hash, r.height)
            for r in self.notes
            if r.height >= from_height and vk.owns(r.note.npk, r.note.R)
        ]

    def digest(self) -> bytes:
        view = _DigestView(
            self.notes_tree.root, self.notes_tree.root_history,
            self.license_nullifiers_tree.root, self.license_nullifiers_tree.root_history,
            sorted(self.spent_nullifiers), [e.tx_hash for e in self.log], sorted(self.revoked),
            self.revocation_floor, self.height,
        )
        return digest(encode(view))

    # -- validation ---------------------------------------------------------

    def _check_mint(self, note: Note) -> bool:
        if note.pos is not None:
            return False
        t = note.note_type
        if t is NoteType.TRANSPARENT_VALUE:
            try:
                items = decode_elements(note.enc)
            except (EncodingError, ValueError):
                return False
            if len(items) != 1 or isinstance(items[0], Point) or not 0 <= items[0] < MAX_VALUE:
                return False
            return note.com == commit(items[0], 0)
        if t is NoteType.OBFUSCATED_VALUE:
            return note.com is not None
        if t is NoteType.TRANSPARENT_NFT:
            try:
                decode_elements(note.enc)
            except (EncodingError, ValueError):
                return False
        return note.com is None

    def _validate(self, tx: Transaction, backend: ProofBackend) -> str | None:
        if tx_hash_of(tx) != tx.tx_hash:
            return Reject.HASH_MISMATCH
        if len(set(tx.spends)) != len(tx.spends) or any(n in self.spent_nullifiers for n in tx.spends):
            return Reject.NULLIFIER_SEEN
        if tx.tx_hash in self.tx_log:
            return Reject.DUPLICATE
        if len(tx.spend_types) != len(tx.spends) or not all(t.is_value for t in tx.spend_types):
            return Reject.SPEND_TYPE
        if tx.gas < self.config.gas_fee:
            return Reject.GAS
        if not self.notes_tree.is_known_root(tx.anchor):
            return Reject.UNKNOWN_ROOT
        if not all(self._check_mint(n) for n in tx.mints):
            return Reject.MALFORMED_MINT
        if len(self.notes_tree) + len(tx.mints) > self.notes_tree.capacity:
            return Reject.TREE_FULL
        if tx.proof is None:
            return Reject.MISSING_PROOF
        verdict = backend.verify(TX_RELATION, tx.statement(), tx.proof)
        if not verdict:
            return verdict.clause
        if tx.contract_call is not None:
            return self._validate_call(tx, backend)
        return None

    def _validate_call(self, tx: Transaction, backend: ProofBackend) -> str | None:
        call = tx.contract_call
        if call.contract != LICENSE_CONTRACT:
            return Reject.UNKNOWN_CONTRACT
        try:
            args = license_args(call)
        except (EncodingError, ValueError):
            return Reject.BAD_ARGS
        idx = self.notes_tree.root_index(args.notes_root)
        if idx is None:
            return Reject.UNKNOWN_ROOT
        if idx < self.revocation_floor:
            return Reject.LICENSE_ROOT_REVOKED
        if args.nullifier_lic in self.license_nullifiers:
            return Reject.LICENSE_NULLIFIER_SEEN
        if len(self.license_nullifiers_tree) >= self.license_nullifiers_tree.capacity:
            return Reject.TREE_FULL
        if call.proof is None:
            return Reject.MISSING_PROOF
        verdict = backend.verify(LICENSE_RELATION, LicenseStatement.from_args(args, tx.tx_hash),
                                 call.proof)
        return None if verdict else verdict.clause

    # -- mutations ----------------------------------------------------------

    def _append_notes(self, notes: Iterable[Note], tx_hash: Scalar, height: int) -> list[int]:
        positions = []
        for note in notes:
            pos = len(self.notes_tree)
            placed = note.at(pos)
            self.notes_tree.append(note_hash(placed))
            self.notes.append(NoteRecord(placed, tx_hash, height))
            positions.append(pos)
        return positions

    def _record(self, entry: LogEntry) -> None:
        self.log.append(entry)
        if entry.kind is EntryKind.TX:
            self.tx_log[entry.tx_hash] = entry
        if self.event_log is not None:
            line = json.dumps({
                "height": entry.height,
                "kind": entry.kind.name.lower(),
                "tx_hash": to_json(entry.tx_hash, Scalar),
                "positions": entry.positions,
                "entry": to_json(entry),
            }, sort_keys=True)
            with open(self.event_log, "a") as fh:
                fh.write(line + "\n")

    def submit_tx(self, tx: Transaction, backend: ProofBackend | None = None) -> Receipt:
        """Validate fully, then apply; a rejection changes nothing."""
        backend = backend or self.backend
        with self._lock:
            reason = self._validate(tx, backend)
            if reason is not None:
                return Receipt(tx.tx_hash, False, [], reason)
            self.spent_nullifiers.update(tx.spends)
            height = self.height
            positions = self._append_notes(tx.mints, tx.tx_hash, height)
            if tx.contract_call is not None:
                nul = license_args(tx.contract_call).nullifier_lic
                self.license_nullifiers.add(nul)
                self.license_nullifiers_tree.append(nul)
            self.gas_burned += tx.gas
            self._record(LogEntry(height, EntryKind.TX, tx.tx_hash, positions, tx=tx))
            return Receipt(tx.tx_hash, True, positions)

    def call_license_contract(self, tx: Transaction, backend: ProofBackend | None = None) -> Receipt:
        if tx.contract_call is None or tx.contract_call.contract != LICENSE_CONTRACT:
            return Receipt(tx.tx_hash, False, [], Reject.UNKNOWN_CONTRACT)
        return self.submit_tx(tx, backend)

    def faucet(self, pk: PublicKey, amount: int, rng) -> tuple[Receipt, Note]:
        """Simulation-only genesis mint of an obfuscated value note."""
        note, _ = mint_value_note(pk, amount, True, rng)
        return self._apply_faucet(note, amount), note

    def _apply_faucet(self, note: Note, amount: int) -> Receipt:
        with self._lock:
            h = faucet_hash(note)
            height = self.height
            positions = self._append_notes([note], h, height)
            self.faucet_supply += amount
            self._record(LogEntry(height, EntryKind.FAUCET, h, positions, faucet_note=note,
                                  faucet_value=amount))
            return Receipt(h, True, positions)

    def revoke_license_note(self, rev: Revocation) -> Scalar:
        """Tombstone the license at ``rev.pos`` given the issuer's signature."""
        with self._lock:
            if not 0 <= rev.pos < len(self.notes):
                raise RevocationRejected("no note at that position")
            if self.notes[rev.pos].note.note_type is not NoteType.OBFUSCATED_NFT:
                raise RevocationRejected("only license notes can be revoked")
            if self.notes[rev.pos].note.npk != rev.npk_user:
                raise RevocationRejected("note does not carry npk_user")
            if not verify_single(rev.lic_pk, license_message(rev.npk_user, rev.attr), rev.sig_lic):
                raise RevocationRejected("signature does not prove issuance")
            if self.notes_tree.leaves[rev.pos] == TOMBSTONE:
                return self.notes_tree.root
            root = self.notes_tree.invalidate(rev.pos)
            self.revoked.add(rev.pos)
            self.revocation_floor = len(self.notes_tree.root_history) - 1
            h = hash_sponge_bytes(b"citadel/revoke" + encode(rev))
            self._record(LogEntry(self.height, EntryKind.REVOKE, h, [rev.pos], revocation=rev))
            return root

    # -- persistence --------------------------------------------------------

    def to_bytes(self) -> bytes:
        snap = _Snapshot(
            self.config, self.log,
            self.notes_tree.leaves, self.notes_tree.root_history,
            self.license_nullifiers_tree.leaves, self.license_nullifiers_tree.root_history,
            sorted(self.spent_nullifiers), self.revocation_floor,
        )
        body = envelope(STATE_KIND, snap)
        return body + hashlib.blake2b(body, digest_size=32).digest()

    def persist(self, path: str | os.PathLike) -> None:
        """Atomic write: a crash leaves either the old or the new file."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(self.to_bytes())
        os.replace(tmp, path)

    @classmethod
    def from_bytes(cls, data: bytes, backend: ProofBackend | None = None,
                   event_log: str | os.PathLike | None = None) -> Ledger:
        if len(data) < 37:
            raise LedgerCorrupt("state file is truncated")
        body, check = data[:-32], data[-32:]
        if hashlib.blake2b(body, digest_size=32).digest() != check:
            raise LedgerCorrupt("state file checksum mismatch")
        if body[:3] == b"PHX" and body[3] != STATE_VERSION:
            raise LedgerVersionError(f"state file version {body[3]} is not {STATE_VERSION}")
        try:
            # checksum already vouches for the content; skip subgroup checks
            snap = open_envelope(STATE_KIND, _Snapshot, body, trusted=True)
        except (EncodingError, ValueError) as exc:
            raise LedgerCorrupt(str(exc)) from exc
        return cls._from_snapshot(snap, backend, event_log)

    @classmethod
    def _from_snapshot(cls, snap: _Snapshot, backend, event_log) -> Ledger:
        led = cls(snap.config, backend, event_log=None)
        cfg = snap.config
        led.notes_tree = MerkleTree.from_leaves(snap.note_leaves, cfg.arity, cfg.depth,
                                                snap.note_roots)
        led.license_nullifiers_tree = MerkleTree.from_leaves(
            snap.license_leaves, cfg.arity, cfg.depth, snap.license_roots)
        led.license_nullifiers = set(snap.license_leaves)
        led.spent_nullifiers = set(snap.spent)
        led.revocation_floor = snap.revocation_floor
        for entry in snap.log:
            if entry.kind is EntryKind.TX:
                notes = entry.tx.mints
                led.gas_burned += entry.tx.gas
                led.tx_log[entry.tx_hash] = entry
            elif entry.kind is EntryKind.FAUCET:
                notes = [entry.faucet_note]
                led.faucet_supply += entry.faucet_value
            else:
                led.revoked.add(entry.revocation.pos)
                notes = []
            for note, pos in zip(notes, entry.positions):
                led.notes.append(NoteRecord(note.at(pos), entry.tx_hash, entry.height))
            led.log.append(entry)
        if len(led.notes) != len(led.notes_tree):
            raise LedgerCorrupt("note records disagree with the note tree")
        led.event_log = Path(event_log) if event_log is not None else None
        return led

    @classmethod
    def restore(cls, path: str | os.PathLike, backend: ProofBackend | None = None,
                event_log: str | os.PathLike | None = None) -> Ledger:
        return cls.from_bytes(Path(path).read_bytes(), backend, event_log)

    @classmethod
    def replay(cls, log: Iterable[LogEntry], config: LedgerConfig | None = None,
               backend: ProofBackend | None = None) -> Ledger:
        """Re-execute a log from genesis, re-verifying every transaction."""
        led = cls(config, backend)
        for entry in log:
            if entry.kind is EntryKind.TX:
                receipt = led.submit_tx(entry.tx)
                if not receipt:
                    raise LedgerError(f"replayed tx rejected: {receipt.reject_reason}")
            elif entry.kind is EntryKind.FAUCET:
                led._apply_faucet(entry.faucet_note, entry.faucet_value)
            else:
                led.revoke_license_note(entry.revocation)
        return led
