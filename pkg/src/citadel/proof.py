"""Proving-backend contract and the default transparent witness-check backend.

A relation is a pure ``check(statement, witness) -> Verdict`` function
registered under a name. The transparent backend does not hide anything:
its proof object carries the encoded witness together with a digest of it,
and verification re-runs the relation. It exists to exercise completeness
and soundness end to end; a succinct zero-knowledge backend can implement
the same two methods.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

from .encoding import decode, digest, encode


@dataclass(frozen=True)
class Verdict:
    ok: bool
    clause: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def accept(cls) -> Verdict:
        return cls(True)

    @classmethod
    def reject(cls, clause: str) -> Verdict:
        return cls(False, clause)


@dataclass(frozen=True)
class ProofObject:
    relation: str
    backend: str
    witness_digest: bytes
    witness: bytes


@dataclass(frozen=True)
class Relation:
    name: str
    check: Callable[[object, object], Verdict]
    witness_type: type


RELATIONS: dict[str, Relation] = {}


def register_relation(name: str, check, witness_type: type) -> None:
    RELATIONS[name] = Relation(name, check, witness_type)


class ProvingError(Exception):
    """The witness does not satisfy the relation, so no proof exists."""

    def __init__(self, clause: str):
        super().__init__(f"relation not satisfied: {clause}")
        self.clause = clause


class ProofBackend(Protocol):
    name: str

    def prove(self, relation: str, statement, witness) -> ProofObject: ...

    def verify(self, relation: str, statement, proof: ProofObject) -> Verdict: ...


class TransparentBackend:
    """Relation re-check backend. Sound and complete, not zero-knowledge."""

    name = "transparent-v1"

    def __init__(self, cache_size: int = 4096):
        # decoded witnesses keyed by digest; saves point decompression on verify
        self._cache: OrderedDict[bytes, object] = OrderedDict()
        self._cache_size = cache_size

    def _remember(self, key: bytes, witness) -> None:
        self._cache[key] = witness
        self._cache.move_to_end(key)
        while len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)

    def prove(self, relation: str, statement, witness, strict: bool = True) -> ProofObject:
        """Encode ``witness``; with ``strict`` refuse unsatisfying pairs.

        ``strict=False`` lets tests build proofs for false statements to
        check that verifiers reject them.
        """
        rel = RELATIONS[relation]
        if strict:
            verdict = rel.check(statement, witness)
            if not verdict:
                raise ProvingError(verdict.clause)
        blob = encode(witness, rel.witness_type)
        key = digest(blob)
        self._remember(key, witness)
        return ProofObject(relation, self.name, key, blob)

    def verify(self, relation: str, statement, proof: ProofObject) -> Verdict:
        if proof.relation != relation or relation not in RELATIONS:
            return Verdict.reject("proof.relation")
        if proof.backend != self.name:
            return Verdict.reject("proof.backend")
        key = digest(proof.witness)
        if key != proof.witness_digest:
            return Verdict.reject("proof.digest")
        rel = RELATIONS[relation]
        witness = self._cache.get(key)
        if witness is None:
            try:
                witness = decode(rel.witness_type, proof.witness)
            except Exception:
                return Verdict.reject("proof.encoding")
            self._remember(key, witness)
        try:
            return rel.check(statement, witness)
        except (ValueError, TypeError, AttributeError, IndexError):
            return Verdict.reject("proof.malformed")


BACKENDS: dict[str, Callable[[], ProofBackend]] = {"transparent": TransparentBackend}


def make_backend(name: str = "transparent") -> ProofBackend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown proof backend {name!r}") from None
