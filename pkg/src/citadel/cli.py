"""Command-line driver over a persisted ledger file and encrypted wallet files.

Every command prints exactly one JSON document on stdout. Exit codes:
0 success, 2 validation failure, 3 rejection (ledger or service provider),
4 I/O failure (missing or corrupt files, lock contention).
"""

from __future__ import annotations

import argparse
import configparser
import contextlib
import fcntl
import getpass
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from nacl.exceptions import CryptoError
from nacl.secret import SecretBox
from nacl.utils import random as random_bytes

from .crypto import PublicKey, default_rng, gen_static_keys, mul_g, static_keys_from_secret
from .encoding import EncodingError, decode, encode, from_json, to_json
from .jubjub import Point, Scalar, decode_point, encode_point, encode_scalar
from .ledger import (
    Ledger,
    LedgerConfig,
    LedgerCorrupt,
    LedgerVersionError,
    Revocation,
    RevocationRejected,
)
from .notes import ValueRangeError
from .protocol import (
    License,
    LicenseError,
    ServiceRequest,
    SpKeys,
    SpPublic,
    gen_sp_keys,
    grant_service,
    issue_license,
    request_service,
    send_license_request,
    use_license,
)
from .tx import TransactionError, ValueMint, build_transaction
from .wallet import InsufficientFunds, IssuedRecord, LicenseUse, Wallet, WalletCache

SCHEMA = "citadel.cli/1"
REQUEST_SCHEMA = "citadel.service-request/1"
WALLET_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_REJECTED = 3
EXIT_IO = 4

CONFIG_KEYS = {"ledger", "wallet", "event_log", "gas", "arity", "depth", "backend"}
ENV_OVERRIDES = {
    "ledger": "CITADEL_LEDGER",
    "wallet": "CITADEL_WALLET",
    "event_log": "CITADEL_EVENT_LOG",
}
PASSPHRASE_ENV = "CITADEL_PASSPHRASE"


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


def validation(message: str, kind: str = "invalid") -> CliError:
    return CliError(EXIT_VALIDATION, kind, message)


def io_error(message: str, kind: str = "io") -> CliError:
    return CliError(EXIT_IO, kind, message)


# -- config -----------------------------------------------------------------

@dataclass(frozen=True)
class Config:
    ledger: Path
    wallet: Path
    event_log: Optional[Path]
    gas: int = 1
    arity: int = 4
    depth: int = 17
    backend: str = "transparent"

    @property
    def ledger_config(self) -> LedgerConfig:
        return LedgerConfig(self.gas, self.arity, self.depth, self.backend)


def load_config(path: Optional[str], overrides: dict) -> Config:
    """Defaults, then the ``[citadel]`` section of the INI file, then env, then flags."""
    values: dict = {"ledger": "ledger.bin", "wallet": "wallet.json", "event_log": None,
                    "gas": "1", "arity": "4", "depth": "17", "backend": "transparent"}
    path = path or os.environ.get("CITADEL_CONFIG")
    if path:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise io_error(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise validation(f"config {path}: {exc}", "config") from exc
        for section in parser.sections():
            if section != "citadel":
                raise validation(f"unknown config section [{section}]", "config")
        if parser.has_section("citadel"):
            unknown = set(parser["citadel"]) - CONFIG_KEYS
            if unknown:
                raise validation(f"unknown config keys {sorted(unknown)}", "config")
            values.update(parser["citadel"])
    for key, var in ENV_OVERRIDES.items():
        if os.environ.get(var):
            values[key] = os.environ[var]
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        gas, arity, depth = int(values["gas"]), int(values["arity"]), int(values["depth"])
    except ValueError as exc:
        raise validation(f"config: {exc}", "config") from exc
    if gas < 0 or arity < 2 or depth < 1:
        raise validation("config: need gas >= 0, arity >= 2, depth >= 1", "config")
    return Config(Path(values["ledger"]), Path(values["wallet"]),
                  Path(values["event_log"]) if values["event_log"] else None,
                  gas, arity, depth, values["backend"])


# -- ledger file ------------------------------------------------------------

@contextlib.contextmanager
def ledger_lock(cfg: Config, exclusive: bool):
    lock_path = cfg.ledger.with_name(cfg.ledger.name + ".lock")
    try:
        fh = open(lock_path, "a+")
    except OSError as exc:
        raise io_error(f"cannot open lock file: {exc}") from exc
    try:
        try:
            fcntl.flock(fh, (fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH) | fcntl.LOCK_NB)
        except BlockingIOError as exc:
            raise io_error("ledger is locked by another process", "locked") from exc
        yield
    finally:
        fh.close()


def open_ledger(cfg: Config, create: bool = False) -> Ledger:
    if not cfg.ledger.exists():
        if not create:
            raise io_error(f"no ledger at {cfg.ledger}", "missing")
        return Ledger(cfg.ledger_config, event_log=cfg.event_log)
    try:
        led = Ledger.restore(cfg.ledger, event_log=cfg.event_log)
    except LedgerVersionError as exc:
        raise io_error(str(exc), "version") from exc
    except LedgerCorrupt as exc:
        raise io_error(str(exc), "corrupt") from exc
    except OSError as exc:
        raise io_error(str(exc)) from exc
    stored = led.config
    if (stored.gas_fee, stored.arity, stored.depth) != (cfg.gas, cfg.arity, cfg.depth):
        raise validation("config disagrees with the ledger's gas/arity/depth", "config")
    return led


# -- wallet file ------------------------------------------------------------

@dataclass(frozen=True)
class WalletSecrets:
    a: Scalar
    b: Scalar
    lic_sk: Optional[Scalar]


def _passphrase(confirm: bool = False) -> bytes:
    env = os.environ.get(PASSPHRASE_ENV)
    if env is not None:
        return env.encode()
    if not sys.stdin.isatty():
        raise validation(f"no passphrase: set {PASSPHRASE_ENV} or run interactively", "passphrase")
    first = getpass.getpass("wallet passphrase: ")
    if confirm and getpass.getpass("repeat passphrase: ") != first:
        raise validation("passphrases differ", "passphrase")
    return first.encode()


def _derive_key(passphrase: bytes, salt: bytes, n: int, r: int, p: int) -> bytes:
    return hashlib.scrypt(passphrase, salt=salt, n=n, r=r, p=p, dklen=SecretBox.KEY_SIZE)


KDF_PARAMS = {"n": 1 << 14, "r": 8, "p": 1}


def save_wallet(path: Path, wallet: Wallet, passphrase: bytes, doc: dict | None = None) -> None:
    """Write the wallet; keys are re-encrypted only when ``doc`` is absent."""
    if doc is None:
        salt = random_bytes(16)
        key = _derive_key(passphrase, salt, **KDF_PARAMS)
        sp = wallet.sp
        secrets_blob = encode(WalletSecrets(wallet.keys.a, wallet.keys.b,
                                            sp.lic_sk if sp else None))
        doc = {
            "kdf": {"name": "scrypt", "salt": salt.hex(), **KDF_PARAMS},
            "box": SecretBox(key).encrypt(secrets_blob).hex(),
        }
    out = {
        "version": WALLET_VERSION,
        "kdf": doc["kdf"],
        "box": doc["box"],
        "address": address_of(wallet),
        "cache": to_json(wallet.cache()),
        "uses": [to_json(u) for u in wallet.uses],
        "issued": [to_json(i) for i in wallet.issued],
    }
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(out, indent=1, sort_keys=True))
    os.replace(tmp, path)


def load_wallet(path: Path, passphrase: bytes | None = None) -> tuple[Wallet, dict]:
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise io_error(f"no wallet at {path}; run keygen", "missing") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise io_error(f"unreadable wallet {path}: {exc}", "corrupt") from exc
    if doc.get("version") != WALLET_VERSION:
        raise io_error("unsupported wallet version", "version")
    kdf = doc["kdf"]
    key = _derive_key(passphrase if passphrase is not None else _passphrase(),
                      bytes.fromhex(kdf["salt"]), kdf["n"], kdf["r"], kdf["p"])
    try:
        blob = SecretBox(key).decrypt(bytes.fromhex(doc["box"]))
    except CryptoError as exc:
        raise validation("wrong passphrase", "passphrase") from exc
    secrets_ = decode(WalletSecrets, blob)
    keys = static_keys_from_secret(secrets_.a, secrets_.b)
    sp = SpKeys(keys, secrets_.lic_sk, mul_g(secrets_.lic_sk)) if secrets_.lic_sk is not None else None
    wallet = Wallet(keys, sp)
    try:
        wallet.load_cache(from_json(WalletCache, doc["cache"], trusted=True))
        wallet.uses = [from_json(LicenseUse, u, trusted=True) for u in doc.get("uses", [])]
        wallet.issued = [from_json(IssuedRecord, i, trusted=True) for i in doc.get("issued", [])]
    except (EncodingError, KeyError, ValueError, TypeError) as exc:
        raise io_error(f"corrupt wallet cache: {exc}", "corrupt") from exc
    return wallet, doc


# -- addresses --------------------------------------------------------------

def address_of(wallet: Wallet) -> str:
    """64-byte note address, or 96 bytes with the license key for an SP."""
    raw = wallet.keys.public.to_bytes()
    if wallet.sp is not None:
        raw += encode_point(wallet.sp.lic_pk)
    return raw.hex()


def parse_address(text: str) -> tuple[PublicKey, Optional[Point]]:
    try:
        raw = bytes.fromhex(text)
        if len(raw) == 64:
            return PublicKey.from_bytes(raw), None
        if len(raw) == 96:
            return PublicKey.from_bytes(raw[:64]), decode_point(raw[64:])
    except (ValueError, EncodingError) as exc:
        raise validation(f"bad address: {exc}", "address") from exc
    raise validation("address must be 64 or 96 bytes of hex", "address")


def parse_sp(text: str) -> SpPublic:
    pk, lic_pk = parse_address(text)
    if lic_pk is None:
        raise validation("service provider address must include the license key", "address")
    return SpPublic(pk, lic_pk)


def hx(x: int) -> str:
    return encode_scalar(x).hex()


def parse_hash(text: str) -> Scalar:
    try:
        raw = bytes.fromhex(text)
        if len(raw) != 32:
            raise ValueError("hash must be 32 bytes")
        return from_json(Scalar, text)
    except (ValueError, EncodingError) as exc:
        raise validation(f"bad hash: {exc}", "hash") from exc


def parse_amount(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise validation(f"not an integer: {text!r}") from exc
    if v < 0:
        raise validation("amounts are non-negative")
    return v


# -- commands ---------------------------------------------------------------

class Session:
    """Holds config plus lazily opened ledger/wallet; writes back on success."""

    def __init__(self, cfg: Config):
        self.cfg = cfg
        self.rng = default_rng()
        self.ledger: Optional[Ledger] = None
        self.wallet: Optional[Wallet] = None
        self._wallet_doc: Optional[dict] = None
        self._dirty_ledger = False

    def open_ledger(self, create: bool = False) -> Ledger:
        if self.ledger is None:
            self.ledger = open_ledger(self.cfg, create)
        return self.ledger

    def open_wallet(self) -> Wallet:
        if self.wallet is None:
            self.wallet, self._wallet_doc = load_wallet(self.cfg.wallet)
        return self.wallet

    def synced_wallet(self) -> Wallet:
        wallet = self.open_wallet()
        if self.cfg.ledger.exists() or self.ledger is not None:
            wallet.sync(self.open_ledger())
        return wallet

    def submit(self, tx) -> dict:
        receipt = self.ledger.submit_tx(tx)
        if not receipt:
            raise CliError(EXIT_REJECTED, "rejected", f"ledger rejected: {receipt.reject_reason}",
                           reject_reason=receipt.reject_reason, tx_hash=hx(tx.tx_hash))
        self._dirty_ledger = True
        self.wallet.sync(self.ledger)
        return {"tx_hash": hx(receipt.tx_hash), "positions": receipt.positions,
                "height": self.ledger.height}

    def commit(self) -> None:
        if self._dirty_ledger:
            self.ledger.persist(self.cfg.ledger)
        if self.wallet is not None:
            save_wallet(self.cfg.wallet, self.wallet, b"", self._wallet_doc)


def cmd_keygen(s: Session, args) -> dict:
    if s.cfg.wallet.exists() and not args.force:
        raise validation(f"wallet {s.cfg.wallet} exists; pass --force to overwrite", "exists")
    if args.sp:
        sp = gen_sp_keys(s.rng)
        wallet = Wallet.for_sp(sp)
    else:
        wallet = Wallet(gen_static_keys(s.rng))
    save_wallet(s.cfg.wallet, wallet, _passphrase(confirm=True))
    return {"address": address_of(wallet), "service_provider": args.sp}


def cmd_address(s: Session, args) -> dict:
    wallet = s.open_wallet()
    out = {"address": address_of(wallet), "service_provider": wallet.sp is not None}
    if wallet.sp is not None:
        out["lic_pk"] = encode_point(wallet.sp.lic_pk).hex()
    return out


def cmd_faucet(s: Session, args) -> dict:
    amount = parse_amount(args.amount)
    wallet = s.open_wallet()
    led = s.open_ledger(create=True)
    try:
        receipt, _ = led.faucet(wallet.keys.public, amount, s.rng)
    except ValueRangeError as exc:
        raise validation(str(exc), "amount") from exc
    s._dirty_ledger = True
    wallet.sync(led)
    return {"tx_hash": hx(receipt.tx_hash), "positions": receipt.positions,
            "height": led.height, "balance": wallet.balance}


def cmd_send(s: Session, args) -> dict:
    pk, _ = parse_address(args.addr)
    amount = parse_amount(args.amount)
    wallet = s.synced_wallet()
    led = s.open_ledger()
    gas = s.cfg.gas
    try:
        spends, change = wallet.fund(amount + gas)
        mints = [ValueMint(pk, amount)] + ([ValueMint(wallet.keys.public, change)] if change else [])
        tx = build_transaction(spends, mints, gas, led.notes_tree, led.backend, s.rng)
    except InsufficientFunds as exc:
        raise validation(str(exc), "funds") from exc
    except (TransactionError, ValueRangeError) as exc:
        raise validation(str(exc)) from exc
    out = s.submit(tx)
    out["balance"] = wallet.balance
    return out


def cmd_request_license(s: Session, args) -> dict:
    sp = parse_sp(args.sp)
    price = parse_amount(args.price)
    wallet = s.synced_wallet()
    led = s.open_ledger()
    try:
        tx, _ = send_license_request(wallet, sp.note_pk, price, s.cfg.gas, led.notes_tree,
                                     led.backend, s.rng)
    except InsufficientFunds as exc:
        raise validation(str(exc), "funds") from exc
    out = s.submit(tx)
    out["balance"] = wallet.balance
    return out


def cmd_requests(s: Session, args) -> dict:
    wallet = s.synced_wallet()
    issued = {i.npk_user for i in wallet.issued}
    return {"requests": [
        {"id": r.pos, "tx_hash": hx(r.tx_hash), "paid": r.paid,
         "issued": r.request.npk_user in issued}
        for r in sorted(wallet.requests.values(), key=lambda r: r.pos)
    ]}


def _require_sp(wallet: Wallet) -> SpKeys:
    if wallet.sp is None:
        raise validation("this wallet is not a service provider wallet (keygen --sp)", "role")
    return wallet.sp


def cmd_issue_license(s: Session, args) -> dict:
    wallet = s.synced_wallet()
    sp = _require_sp(wallet)
    led = s.open_ledger()
    rec = wallet.requests.get(args.request_id)
    if rec is None:
        raise validation(f"no license request with id {args.request_id}", "unknown_request")
    if rec.paid < args.min_price:
        raise CliError(EXIT_REJECTED, "policy", f"request paid {rec.paid} < {args.min_price}")
    try:
        tx, payload = issue_license(sp, wallet, rec.request, args.attr, s.cfg.gas, led.notes_tree,
                                    led.backend, s.rng)
    except InsufficientFunds as exc:
        raise validation(str(exc), "funds") from exc
    except LicenseError as exc:
        raise validation(str(exc), "malformed_request") from exc
    out = s.submit(tx)
    lic_pos = next(p for p, n in zip(out["positions"], tx.mints) if n.npk == rec.request.npk_user)
    wallet.issued.append(IssuedRecord(lic_pos, tx.tx_hash, rec.request.npk_user,
                                      payload.attr, payload.sig_lic))
    out["license_id"] = lic_pos
    return out


def _license_view(wallet: Wallet) -> list[dict]:
    return [
        {"id": lic.pos, "attr": lic.payload.attr, "tx_hash": hx(lic.tx_hash), "revoked": lic.revoked,
         "uses": [u.c for u in wallet.uses if u.license_pos == lic.pos]}
        for lic in sorted(wallet.licenses.values(), key=lambda x: x.pos)
    ]


def cmd_licenses(s: Session, args) -> dict:
    return {"licenses": _license_view(s.synced_wallet())}


def cmd_use_license(s: Session, args) -> dict:
    sp = parse_sp(args.sp)
    wallet = s.synced_wallet()
    led = s.open_ledger()
    rec = wallet.licenses.get(args.id)
    if rec is None:
        raise validation(f"no license with id {args.id}", "unknown_license")
    c = args.challenge
    if not 0 <= c < 1 << 250:
        raise validation("challenge out of range", "challenge")
    lic = License(rec.note, rec.payload, rec.pos)
    try:
        tx, sc = use_license(wallet, lic, c, sp, s.cfg.gas, led.notes_tree, led.backend, s.rng)
    except InsufficientFunds as exc:
        raise validation(str(exc), "funds") from exc
    except LicenseError as exc:
        raise CliError(EXIT_REJECTED, "license_unavailable", str(exc))
    out = s.submit(tx)
    req = request_service(tx.tx_hash, sp.lic_pk, rec.payload.attr, c, sc)
    wallet.uses.append(LicenseUse(rec.pos, tx.tx_hash, sp.lic_pk, rec.payload.attr, Scalar(c), sc))
    path = Path(args.out or f"service-request-{hx(tx.tx_hash)[:16]}.json")
    write_service_request(path, req)
    out["service_request"] = str(path)
    return out


def write_service_request(path: Path, req: ServiceRequest) -> None:
    doc = {"schema": REQUEST_SCHEMA, "request": to_json(req)}
    try:
        path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    except OSError as exc:
        raise io_error(f"cannot write {path}: {exc}") from exc


def read_service_request(path: Path) -> ServiceRequest:
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise io_error(f"no such file {path}", "missing") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise io_error(f"unreadable service request: {exc}", "corrupt") from exc
    if not isinstance(doc, dict) or doc.get("schema") != REQUEST_SCHEMA:
        raise validation("not a service request document", "schema")
    try:
        return from_json(ServiceRequest, doc["request"])
    except (EncodingError, KeyError, ValueError, TypeError) as exc:
        raise validation(f"malformed service request: {exc}", "schema") from exc


def cmd_grant_service(s: Session, args) -> dict:
    wallet = s.open_wallet()
    sp = _require_sp(wallet)
    req = read_service_request(Path(args.request))
    led = s.open_ledger()

    def policy(attr: int, c: int) -> bool:
        if args.attr_min is not None and attr < args.attr_min:
            return False
        if args.attr_max is not None and attr > args.attr_max:
            return False
        return args.challenge is None or c == args.challenge

    grant = grant_service(sp, req, led, policy)
    if not grant:
        raise CliError(EXIT_REJECTED, "denied", f"service denied: {grant.code}",
                       deny_code=grant.code)
    return {"granted": True, "code": grant.code, "tx_hash": hx(req.tx_hash)}


def cmd_revoke(s: Session, args) -> dict:
    wallet = s.open_wallet()
    sp = _require_sp(wallet)
    led = s.open_ledger()
    rec = next((i for i in wallet.issued if i.pos == args.license_id), None)
    if rec is None:
        raise validation(f"no issued license with id {args.license_id}", "unknown_license")
    try:
        root = led.revoke_license_note(Revocation(rec.pos, rec.sig_lic, rec.npk_user, rec.attr,
                                                  sp.lic_pk))
    except RevocationRejected as exc:
        raise CliError(EXIT_REJECTED, "rejected", str(exc)) from exc
    s._dirty_ledger = True
    return {"root": hx(root), "height": led.height}


def cmd_ledger(s: Session, args) -> dict:
    led = s.open_ledger()
    if args.what == "root":
        return {"root": hx(led.root), "license_root": hx(led.license_nullifiers_tree.root),
                "height": led.height, "notes": len(led.notes_tree)}
    if args.what == "nullifiers":
        return {"spent": [hx(n) for n in sorted(led.spent_nullifiers)],
                "license": [hx(n) for n in led.license_nullifiers_tree.leaves]}
    entry = led.receipt_of(parse_hash(args.hash))
    if entry is None:
        raise validation("unknown transaction", "unknown_tx")
    tx = entry.tx
    return {
        "tx_hash": hx(tx.tx_hash), "height": entry.height, "positions": entry.positions,
        "anchor": hx(tx.anchor), "nullifiers": [hx(n) for n in tx.spends],
        "spend_types": [int(t) for t in tx.spend_types], "gas": tx.gas,
        "mint_types": [int(n.note_type) for n in tx.mints],
        "contract": tx.contract_call.contract if tx.contract_call else None,
    }


def cmd_rescan(s: Session, args) -> dict:
    wallet = s.open_wallet()
    found = wallet.rescan(s.open_ledger())
    return {"scanned": found, "height": wallet.height, "balance": wallet.balance,
            "licenses": len(wallet.licenses)}


def cmd_balance(s: Session, args) -> dict:
    wallet = s.synced_wallet()
    return {"balance": wallet.balance, "notes": len(wallet.notes), "height": wallet.height}


MUTATING = {"faucet", "send", "request-license", "issue-license", "use-license", "revoke"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="citadel", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="INI file with a [citadel] section")
    p.add_argument("--ledger", help="ledger state file")
    p.add_argument("--wallet", help="wallet file")
    p.add_argument("--event-log", help="append accepted entries as JSON lines here")
    p.add_argument("--gas", help="flat fee every transaction pays")
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("keygen", help="create a wallet")
    k.add_argument("--sp", action="store_true", help="service provider wallet with a license key")
    k.add_argument("--force", action="store_true")
    sub.add_parser("address", help="print this wallet's address")
    sub.add_parser("balance", help="spendable value")
    f = sub.add_parser("faucet", help="mint simulation funds to this wallet")
    f.add_argument("amount")
    sd = sub.add_parser("send", help="pay an address")
    sd.add_argument("addr")
    sd.add_argument("amount")
    rl = sub.add_parser("request-license", help="pay an SP and send it a license request")
    rl.add_argument("sp", help="SP address (96-byte hex)")
    rl.add_argument("price")
    sub.add_parser("requests", help="license requests received (SP)")
    il = sub.add_parser("issue-license", help="answer a license request (SP)")
    il.add_argument("request_id", type=int)
    il.add_argument("attr", type=int)
    il.add_argument("--min-price", type=int, default=0)
    sub.add_parser("licenses", help="licenses held by this wallet")
    ul = sub.add_parser("use-license", help="nullify a license on-chain and write a service request")
    ul.add_argument("id", type=int)
    ul.add_argument("--sp", required=True, help="SP address (96-byte hex)")
    ul.add_argument("--challenge", type=int, default=0)
    ul.add_argument("--out", help="service request file (default: derived from tx hash)")
    gs = sub.add_parser("grant-service", help="check a service request (SP)")
    gs.add_argument("request")
    gs.add_argument("--attr-min", type=int)
    gs.add_argument("--attr-max", type=int)
    gs.add_argument("--challenge", type=int, help="required challenge value")
    rv = sub.add_parser("revoke", help="revoke a license this SP issued")
    rv.add_argument("license_id", type=int)
    lg = sub.add_parser("ledger", help="inspect the ledger")
    lsub = lg.add_subparsers(dest="what", required=True)
    lsub.add_parser("root")
    lt = lsub.add_parser("tx")
    lt.add_argument("hash")
    lsub.add_parser("nullifiers")
    sub.add_parser("rescan", help="rebuild the wallet cache from the ledger")
    return p


COMMANDS = {
    "keygen": cmd_keygen, "address": cmd_address, "balance": cmd_balance, "faucet": cmd_faucet,
    "send": cmd_send, "request-license": cmd_request_license, "requests": cmd_requests,
    "issue-license": cmd_issue_license, "licenses": cmd_licenses, "use-license": cmd_use_license,
    "grant-service": cmd_grant_service, "revoke": cmd_revoke, "ledger": cmd_ledger,
    "rescan": cmd_rescan,
}


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    command = args.command if args.command != "ledger" else f"ledger {args.what}"
    try:
        cfg = load_config(args.config, {"ledger": args.ledger, "wallet": args.wallet,
                                        "event_log": args.event_log, "gas": args.gas})
        session = Session(cfg)
        needs_wallet_write = args.command not in ("keygen", "ledger", "grant-service", "address")
        with ledger_lock(cfg, exclusive=args.command in MUTATING or needs_wallet_write):
            result = COMMANDS[args.command](session, args)
            if needs_wallet_write:
                session.commit()
    except CliError as exc:
        print(f"citadel: {exc}", file=sys.stderr)
        _emit({"schema": SCHEMA, "command": command, "ok": False,
               "error": {"kind": exc.kind, "message": str(exc), **exc.extra}})
        return exc.code
    except OSError as exc:
        print(f"citadel: {exc}", file=sys.stderr)
        _emit({"schema": SCHEMA, "command": command, "ok": False,
               "error": {"kind": "io", "message": str(exc)}})
        return EXIT_IO
    _emit({"schema": SCHEMA, "command": command, "ok": True, **result})
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
