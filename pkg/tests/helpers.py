"""Small world-building helpers shared by the protocol, ledger and acceptance tests."""

from __future__ import annotations

from citadel.crypto import gen_static_keys
from citadel.ledger import Ledger, LedgerConfig
from citadel.protocol import (
    License,
    gen_sp_keys,
    issue_license,
    send_license_request,
    use_license,
)
from citadel.wallet import Wallet

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: list[str] = []


class World:
    def __init__(self, rng, gas: int = 1, **config):
        self.rng = rng
        self.gas = gas
        self.ledger = Ledger(LedgerConfig(gas_fee=gas, **config))

    @property
    def tree(self):
        return self.ledger.notes_tree

    @property
    def backend(self):
        return self.ledger.backend

    def user(self, funds: int = 100, notes: int = 1) -> Wallet:
        # a fresh key owns nothing older than itself
        w = Wallet(gen_static_keys(self.rng), height=self.ledger.height)
        for _ in range(notes if funds else 0):
            self.ledger.faucet(w.keys.public, funds, self.rng)
        w.sync(self.ledger)
        return w

    def sp(self, funds: int = 50) -> Wallet:
        w = Wallet.for_sp(gen_sp_keys(self.rng))
        w.height = self.ledger.height
        if funds:
            self.ledger.faucet(w.keys.public, funds, self.rng)
        w.sync(self.ledger)
        return w

    def sync(self, *wallets) -> None:
        for w in wallets:
            w.sync(self.ledger)

    def submit(self, tx, *wallets):
        receipt = self.ledger.submit_tx(tx)
        self.sync(*wallets)
        return receipt

    def license_for(self, user: Wallet, sp: Wallet, attr: int = 42, price: int = 10) -> License:
        """Steps 1-4: request, issue, confirm, fetch."""
        tx, _ = send_license_request(user, sp.keys.public, price, self.gas, self.tree,
                                     self.backend, self.rng)
        assert self.submit(tx, user, sp)
        rec = max(sp.requests.values(), key=lambda r: r.pos)
        tx, _ = issue_license(sp.sp, sp, rec.request, attr, self.gas, self.tree, self.backend,
                              self.rng)
        assert self.submit(tx, user, sp)
        lic = max(user.licenses.values(), key=lambda r: r.pos)
        return License(lic.note, lic.payload, lic.pos)

    def use(self, user: Wallet, sp: Wallet, lic: License, c: int = 0):
        return use_license(user, lic, c, sp.sp.public, self.gas, self.tree, self.backend, self.rng)


# -- targeted corruptions ---------------------------------------------------

from dataclasses import replace  # noqa: E402

from citadel.crypto import G, DoubleSignature, Signature, commit, gen_note_keypair, mul_g  # noqa: E402
from citadel.jubjub import T  # noqa: E402
from citadel.notes import NoteType, mint_nft  # noqa: E402
from citadel.protocol import LicenseClause  # noqa: E402
from citadel.tx import TxClause  # noqa: E402


def _delta(rng):
    return rng.randrange(1, T)


def _bump(rng, x):
    return (x + _delta(rng)) % T


def _bump_sibling(rng, proof):
    sibs = [list(s) for s in proof.siblings]
    lvl = rng.randrange(len(sibs))
    j = rng.randrange(len(sibs[lvl]))
    sibs[lvl][j] = _bump(rng, sibs[lvl][j])
    return replace(proof, siblings=tuple(tuple(s) for s in sibs))


def _random_point(rng):
    return mul_g(rng.randrange(1, T))


def corrupt_tx(rng, st, w, clause):
    """Return (statement, witness) violating ``clause`` and nothing checked before it."""
    i = rng.randrange(len(w.spends))
    sp = w.spends[i]

    def with_spend(**kw):
        spends = list(w.spends)
        spends[i] = replace(sp, **kw)
        return replace(w, spends=spends)

    if clause == TxClause.TYPE:
        how = rng.randrange(2)
        if how == 0:
            t = rng.choice([NoteType.TRANSPARENT_NFT, NoteType.OBFUSCATED_NFT])
            nft = mint_nft(sp.note.npk, sp.note.R, [rng.randrange(T)], b"k" * 32,
                           t.is_obfuscated, rng).at(sp.note.pos)
            return st, with_spend(note=nft)
        types = list(st.spend_types)
        types[i] = rng.choice([t for t in NoteType if t != types[i]])
        return replace(st, spend_types=types), w
    if clause == TxClause.MEMBERSHIP:
        how = rng.randrange(3)
        if how == 0:
            return st, with_spend(merkle_proof=_bump_sibling(rng, sp.merkle_proof))
        if how == 1:
            return replace(st, notes_root=_bump(rng, st.notes_root)), w
        return st, with_spend(note=replace(sp.note, nonce=_bump(rng, sp.note.nonce)))
    if clause == TxClause.OWNERSHIP:
        how = rng.randrange(4)
        sig = sp.sig
        if how == 0:
            return st, with_spend(sig=DoubleSignature(sig.R, sig.R_prime, _bump(rng, sig.u)))
        if how == 1:
            return st, with_spend(sig=DoubleSignature(sig.R + G, sig.R_prime, sig.u))
        if how == 2:
            return replace(st, tx_hash=_bump(rng, st.tx_hash)), w
        return st, with_spend(npk_prime=_random_point(rng))
    if clause == TxClause.NULLIFIER:
        nuls = list(st.nullifiers)
        nuls[i] = _bump(rng, nuls[i])
        return replace(st, nullifiers=nuls), w
    if clause == TxClause.COMMITMENT:
        how = rng.randrange(4)
        if how == 0:
            return st, with_spend(opening=replace(sp.opening, blinder=_bump(rng, sp.opening.blinder)))
        if how == 1:
            return st, with_spend(opening=replace(sp.opening, value=sp.opening.value + 1))
        j = rng.randrange(len(w.mints))
        if how == 2:
            mints = list(w.mints)
            mints[j] = replace(mints[j], blinder=_bump(rng, mints[j].blinder))
            return st, replace(w, mints=mints)
        coms = list(st.mint_commitments)
        coms[j] = coms[j] + G
        return replace(st, mint_commitments=coms), w
    if clause == TxClause.BALANCE:
        if rng.randrange(2) == 0:
            gas = st.gas + rng.randrange(1, 5) if st.gas == 0 or rng.randrange(2) else st.gas - 1
            return replace(st, gas=gas), w
        # consistent opening and commitment, but the value no longer balances
        j = rng.randrange(len(w.mints))
        mints, coms = list(w.mints), list(st.mint_commitments)
        mints[j] = replace(mints[j], value=mints[j].value + rng.randrange(1, 1000))
        coms[j] = commit(mints[j].value, mints[j].blinder)
        return replace(st, mint_commitments=coms), replace(w, mints=mints)
    raise ValueError(clause)


def corrupt_license(rng, st, w, clause):
    if clause == LicenseClause.SIGNATURE:
        how = rng.randrange(3)
        if how == 0:
            return st, replace(w, sig_lic=Signature(w.sig_lic.R, _bump(rng, w.sig_lic.u)))
        if how == 1:
            return st, replace(w, attr=_bump(rng, w.attr))
        return st, replace(w, lic_pk=_random_point(rng))
    if clause == LicenseClause.OWNERSHIP:
        how = rng.randrange(3)
        if how == 0:
            sig = w.sig_tx
            return st, replace(w, sig_tx=DoubleSignature(sig.R, sig.R_prime, _bump(rng, sig.u)))
        if how == 1:
            return st, replace(w, npk_prime_user=_random_point(rng))
        return replace(st, tx_hash=_bump(rng, st.tx_hash)), w
    if clause == LicenseClause.MEMBERSHIP:
        how = rng.randrange(3)
        if how == 0:
            return st, replace(w, merkle_proof=_bump_sibling(rng, w.merkle_proof))
        if how == 1:
            return replace(st, notes_root=_bump(rng, st.notes_root)), w
        note = w.license_note
        return st, replace(w, license_note=replace(note, nonce=_bump(rng, note.nonce)))
    if clause == LicenseClause.NULLIFIER:
        if rng.randrange(2):
            return replace(st, nullifier_lic=_bump(rng, st.nullifier_lic)), w
        return st, replace(w, c=_bump(rng, w.c))
    if clause == LicenseClause.COM0:
        if rng.randrange(2):
            return replace(st, com0=_bump(rng, st.com0)), w
        return st, replace(w, s0=_bump(rng, w.s0))
    if clause == LicenseClause.COM1:
        if rng.randrange(2):
            return replace(st, com1=st.com1 + _random_point(rng)), w
        return st, replace(w, s1=_bump(rng, w.s1))
    if clause == LicenseClause.COM2:
        if rng.randrange(2):
            return replace(st, com2=st.com2 + _random_point(rng)), w
        return st, replace(w, s2=_bump(rng, w.s2))
    raise ValueError(clause)


def forge_nft_spend(rng, st, w, note_type):
    """Witness that spends an NFT of ``note_type`` in place of the first value note."""
    sp = w.spends[0]
    keys_npk, keys_R = sp.note.npk, sp.note.R
    nft = mint_nft(keys_npk, keys_R, [rng.randrange(T)], b"k" * 32, note_type.is_obfuscated,
                   rng).at(sp.note.pos)
    return replace(w, spends=[replace(sp, note=nft)] + list(w.spends[1:]))


__all__ = ["ACCEPTANCE", "World", "corrupt_tx", "corrupt_license", "forge_nft_spend", "gen_note_keypair"]
