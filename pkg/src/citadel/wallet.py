"""Client-side note cache built from view-key scans, plus coin selection.

The cache holds only what a rescan from height 0 can rebuild: owned value
notes with openings, licenses received, and (for service providers)
license requests and session cookies addressed to them. Uses of licenses
are the exception; they carry the session cookie, which only the user
knows, so they are kept separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .crypto import (
    DecryptionError,
    Signature,
    StaticKeys,
    derive_symmetric_key,
    recover_note_secret,
    shared_key,
)
from .encoding import EncodingError
from .jubjub import Point, Scalar
from .merkle import TOMBSTONE
from .notes import Note, NoteType, Opening, compute_nullifier, open_value_note, read_payload
from .protocol import (
    LicenseError,
    LicensePayload,
    LicenseRequest,
    SessionCookie,
    SpKeys,
    open_license,
)
from .tx import SpendInput


class InsufficientFunds(Exception):
    pass


@dataclass(frozen=True)
class OwnedNote:
    note: Note
    opening: Opening
    nullifier: Scalar
    tx_hash: Scalar
    height: int


@dataclass(frozen=True)
class LicenseRecord:
    note: Note
    payload: LicensePayload
    pos: int
    tx_hash: Scalar
    revoked: bool = False


@dataclass(frozen=True)
class RequestRecord:
    pos: int
    tx_hash: Scalar
    request: LicenseRequest
    paid: int


@dataclass(frozen=True)
class CookieRecord:
    pos: int
    tx_hash: Scalar
    cookie: SessionCookie


@dataclass(frozen=True)
class LicenseUse:
    license_pos: int
    tx_hash: Scalar
    lic_pk: Point
    attr: Scalar
    c: Scalar
    cookie: SessionCookie


@dataclass(frozen=True)
class IssuedRecord:
    """SP-side memory of an issued license; needed to prove issuance later."""

    pos: int
    tx_hash: Scalar
    npk_user: Point
    attr: Scalar
    sig_lic: Signature


@dataclass(frozen=True)
class WalletCache:
    height: int
    notes: list[OwnedNote]
    licenses: list[LicenseRecord]
    requests: list[RequestRecord]
    cookies: list[CookieRecord]


@dataclass
class Wallet:
    keys: StaticKeys
    sp: Optional[SpKeys] = None
    height: int = 0
    notes: dict[int, OwnedNote] = field(default_factory=dict)
    licenses: dict[int, LicenseRecord] = field(default_factory=dict)
    requests: dict[int, RequestRecord] = field(default_factory=dict)
    cookies: dict[int, CookieRecord] = field(default_factory=dict)
    uses: list[LicenseUse] = field(default_factory=list)
    issued: list[IssuedRecord] = field(default_factory=list)
    _reserved: set[int] = field(default_factory=set)

    @classmethod
    def for_sp(cls, sp: SpKeys) -> Wallet:
        return cls(sp.note_keys, sp)

    # -- cache --------------------------------------------------------------

    def cache(self) -> WalletCache:
        return WalletCache(
            self.height,
            [self.notes[p] for p in sorted(self.notes)],
            [self.licenses[p] for p in sorted(self.licenses)],
            [self.requests[p] for p in sorted(self.requests)],
            [self.cookies[p] for p in sorted(self.cookies)],
        )

    def load_cache(self, cache: WalletCache) -> None:
        self.height = cache.height
        self.notes = {n.note.pos: n for n in cache.notes}
        self.licenses = {lic.pos: lic for lic in cache.licenses}
        self.requests = {r.pos: r for r in cache.requests}
        self.cookies = {c.pos: c for c in cache.cookies}
        self._reserved.clear()

    def clear_cache(self) -> None:
        self.load_cache(WalletCache(0, [], [], [], []))

    # -- scanning -----------------------------------------------------------

    def _classify_nft(self, hit) -> None:
        note = hit.note
        if note.note_type is not NoteType.OBFUSCATED_NFT:
            return
        try:
            items = read_payload(note, derive_symmetric_key(shared_key(self.keys, note.R)))
        except (DecryptionError, EncodingError, ValueError):
            items = None
        if items is not None and len(items) == 3:
            shape = tuple(isinstance(x, Point) for x in items)
            if shape == (True, True, False):
                req = LicenseRequest.from_elements(items)
                self.requests[hit.pos] = RequestRecord(hit.pos, hit.tx_hash, req, 0)
            elif shape == (False, False, False):
                sc = SessionCookie(*(Scalar(x) for x in items))
                self.cookies[hit.pos] = CookieRecord(hit.pos, hit.tx_hash, sc)
            return
        try:
            payload = open_license(self.keys, note)
        except (LicenseError, ValueError):
            return
        self.licenses[hit.pos] = LicenseRecord(note, payload, hit.pos, hit.tx_hash)

    def sync(self, ledger) -> int:
        """Scan new blocks, drop spent notes, flag revoked licenses.

        Returns the number of new notes found.
        """
        hits = ledger.scan(self.keys.view_key, self.height)
        fresh_requests = []
        for hit in hits:
            note = hit.note
            if note.note_type.is_value:
                nsk = recover_note_secret(self.keys, note.R, note.npk)
                opening = open_value_note(note, self.keys)
                self.notes[hit.pos] = OwnedNote(note, opening, compute_nullifier(nsk, hit.pos),
                                                hit.tx_hash, hit.height)
            else:
                before = set(self.requests)
                self._classify_nft(hit)
                fresh_requests += [p for p in self.requests if p not in before]
        for p in fresh_requests:
            rec = self.requests[p]
            paid = sum(n.opening.value for n in self.notes.values() if n.tx_hash == rec.tx_hash)
            self.requests[p] = RequestRecord(rec.pos, rec.tx_hash, rec.request, paid)
        self.height = ledger.height
        self.notes = {p: n for p, n in self.notes.items() if not ledger.is_spent(n.nullifier)}
        for p, lic in self.licenses.items():
            if ledger.notes_tree.leaves[p] == TOMBSTONE and not lic.revoked:
                self.licenses[p] = LicenseRecord(lic.note, lic.payload, lic.pos, lic.tx_hash, True)
        self._reserved.clear()
        return len(hits)

    def rescan(self, ledger) -> int:
        self.clear_cache()
        return self.sync(ledger)

    # -- spending -----------------------------------------------------------

    @property
    def balance(self) -> int:
        return sum(n.opening.value for n in self.notes.values())

    def spendable(self) -> list[OwnedNote]:
        return [n for p, n in sorted(self.notes.items()) if p not in self._reserved]

    def fund(self, amount: int) -> tuple[list[SpendInput], int]:
        """Pick notes covering ``amount``, largest first; returns (spends, change).

        Picked notes stay reserved until the next ``sync`` so two drafts
        built back to back never share an input.
        """
        picked, total = [], 0
        for n in sorted(self.spendable(), key=lambda n: (-n.opening.value, n.note.pos)):
            if total >= amount and picked:
                break
            picked.append(n)
            total += n.opening.value
        if total < amount or not picked:
            raise InsufficientFunds(f"need {amount}, spendable {total}")
        self._reserved.update(n.note.pos for n in picked)
        spends = [
            SpendInput(n.note, recover_note_secret(self.keys, n.note.R, n.note.npk), n.opening)
            for n in picked
        ]
        return spends, total - amount

    def release(self) -> None:
        self._reserved.clear()
