"""Provenance manifest and attestation statement verification.

Wire formats are small deterministic binary layouts (documented below),
signed with Ed25519 over raw 32-byte keys.  Chains are ordered raw-key
links, leaf first; no X.509, no extension parsing.  Verification returns
a binary score plus a status string naming the first failed check, in
check order, so a failure is never ambiguous.

Manifest layout (big-endian):

    offset 0   magic           4 bytes  b"PBM1"
    offset 4   digest_alg      1 byte   (1 = SHA-256)
    offset 5   digest_len      1 byte
    offset 6   digest          digest_len bytes
               n_assertions    2 bytes
               per assertion:  key_len 2B, key utf-8,
                               value_len 2B, value utf-8
               n_links         1 byte   (>= 1, leaf first)
               per link:       pubkey 32 bytes,
                               then for every link except the last a
                               64-byte signature over that pubkey by the
                               NEXT key in the chain
               claim_sig       64 bytes (leaf key over claim bytes)

Claim bytes are the manifest body from digest_alg through the last
assertion, exactly as they appear on the wire; the wire encoding is the
canonical form, so there is no separate canonicalization step.

Attestation layout (big-endian):

    offset 0   magic           4 bytes  b"PBA1"
    offset 4   digest_alg      1 byte
    offset 5   digest_len      1 byte
    offset 6   digest          digest_len bytes
               model_len       2 bytes, model id utf-8
               signer_key_id   32 bytes (SHA-256 of the signer public key)
               signature       64 bytes over offsets 4..signature

The attestation check is a stand-in with the interface of a real
model-identity verifier: anything callable as
(statement_bytes, payload, trust, now) -> (score, status) can replace it.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Mapping

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

from .core import FORMAT_VERSION

MANIFEST_MAGIC = b"PBM1"
ATTESTATION_MAGIC = b"PBA1"
DIGEST_ALG_SHA256 = 1
KEY_LEN = 32
SIG_LEN = 64
DEFAULT_FRESHNESS_WINDOW = 24 * 3600

STATUS_OK = "OK"
STATUS_MANIFEST_ABSENT = "MANIFEST_ABSENT"
STATUS_HASH_MISMATCH = "HASH_MISMATCH"
STATUS_BAD_SIGNATURE = "BAD_SIGNATURE"
STATUS_CHAIN_BROKEN = "CHAIN_BROKEN"
STATUS_UNTRUSTED_ROOT = "UNTRUSTED_ROOT"
STATUS_REVOKED = "REVOKED"
STATUS_STALE_TRUST = "STALE_TRUST"
STATUS_ATTESTATION_ABSENT = "ATTESTATION_ABSENT"
STATUS_DIGEST_MISMATCH = "DIGEST_MISMATCH"
STATUS_UNKNOWN_SIGNER = "UNKNOWN_SIGNER"


class ManifestParseError(ValueError):
    """Malformed wire bytes.  offset is where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def key_id(public_key: bytes) -> str:
    """Revocation lookups go through this id, never raw key bytes."""
    return hashlib.sha256(public_key).hexdigest()


def payload_digest(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()


@dataclass(frozen=True)
class Manifest:
    """Parsed provenance manifest: payload binding, claim assertions, and
    the signing chain (leaf first)."""

    digest_alg: int
    digest: bytes
    assertions: tuple[tuple[str, str], ...]
    chain: tuple[bytes, ...]
    link_signatures: tuple[bytes, ...]
    claim_signature: bytes
    claim_bytes: bytes

    @property
    def leaf_key(self) -> bytes:
        return self.chain[0]

    @property
    def root_key(self) -> bytes:
        return self.chain[-1]


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ManifestParseError(f"truncated input while reading {what}",
                                     self.pos)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack(">H", self.take(2, what))[0]


def _read_digest_header(r: _Reader) -> tuple[int, bytes]:
    alg_offset = r.pos
    alg = r.u8("digest algorithm")
    if alg != DIGEST_ALG_SHA256:
        raise ManifestParseError(f"unknown digest algorithm {alg}", alg_offset)
    length = r.u8("digest length")
    if length != hashlib.sha256().digest_size:
        raise ManifestParseError(f"bad digest length {length} for SHA-256",
                                 r.pos - 1)
    return alg, r.take(length, "digest")


def parse_manifest(data: bytes) -> Manifest:
    """Parse manifest wire bytes; raises ManifestParseError with the byte
    offset on malformed input, including trailing garbage."""
    r = _Reader(data)
    magic = r.take(4, "magic")
    if magic != MANIFEST_MAGIC:
        raise ManifestParseError(f"bad magic {magic!r}", 0)
    claim_start = r.pos
    alg, digest = _read_digest_header(r)
    n_assert = r.u16("assertion count")
    assertions = []
    for i in range(n_assert):
        key_len = r.u16(f"assertion {i} key length")
        key = r.take(key_len, f"assertion {i} key")
        val_len = r.u16(f"assertion {i} value length")
        val = r.take(val_len, f"assertion {i} value")
        try:
            assertions.append((key.decode("utf-8"), val.decode("utf-8")))
        except UnicodeDecodeError as exc:
            raise ManifestParseError(f"assertion {i} is not valid UTF-8",
                                     r.pos) from exc
    claim_bytes = data[claim_start:r.pos]
    n_links = r.u8("chain length")
    if n_links < 1:
        raise ManifestParseError("chain must contain at least one key",
                                 r.pos - 1)
    chain = []
    link_sigs = []
    for i in range(n_links):
        chain.append(r.take(KEY_LEN, f"chain key {i}"))
        if i < n_links - 1:
            link_sigs.append(r.take(SIG_LEN, f"chain link signature {i}"))
    claim_sig = r.take(SIG_LEN, "claim signature")
    if r.pos != len(data):
        raise ManifestParseError(
            f"{len(data) - r.pos} trailing bytes after manifest", r.pos)
    return Manifest(digest_alg=alg, digest=digest,
                    assertions=tuple(assertions), chain=tuple(chain),
                    link_signatures=tuple(link_sigs),
                    claim_signature=claim_sig, claim_bytes=claim_bytes)


def build_manifest(payload: bytes, assertions: Mapping[str, str] | None,
                   signers: list[ed25519.Ed25519PrivateKey]) -> bytes:
    """Assemble and sign manifest bytes.

    signers is the chain leaf first; each key in the chain is signed by
    its successor, and the leaf signs the claim.  Assertions keep the
    order given (the wire format is an ordered record list).
    """
    if not signers:
        raise ValueError("at least one signing key is required")
    body = bytearray()
    body.append(DIGEST_ALG_SHA256)
    digest = payload_digest(payload)
    body.append(len(digest))
    body.extend(digest)
    items = list(assertions.items()) if assertions else []
    body.extend(struct.pack(">H", len(items)))
    for key, val in items:
        kb, vb = key.encode("utf-8"), val.encode("utf-8")
        body.extend(struct.pack(">H", len(kb)))
        body.extend(kb)
        body.extend(struct.pack(">H", len(vb)))
        body.extend(vb)
    claim_bytes = bytes(body)

    out = bytearray(MANIFEST_MAGIC)
    out.extend(claim_bytes)
    out.append(len(signers))
    public_raw = [s.public_key().public_bytes_raw() for s in signers]
    for i, raw in enumerate(public_raw):
        out.extend(raw)
        if i < len(signers) - 1:
            out.extend(signers[i + 1].sign(raw))
    out.extend(signers[0].sign(claim_bytes))
    return bytes(out)


@dataclass(frozen=True)
class AttestationStatement:
    """Parsed model-identity statement bound to a payload digest."""

    digest_alg: int
    digest: bytes
    model_id: str
    signer_key_id: str
    signature: bytes
    body: bytes


def parse_attestation(data: bytes) -> AttestationStatement:
    r = _Reader(data)
    magic = r.take(4, "magic")
    if magic != ATTESTATION_MAGIC:
        raise ManifestParseError(f"bad magic {magic!r}", 0)
    body_start = r.pos
    alg, digest = _read_digest_header(r)
    model_len = r.u16("model id length")
    model_raw = r.take(model_len, "model id")
    try:
        model_id = model_raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ManifestParseError("model id is not valid UTF-8", r.pos) from exc
    signer = r.take(KEY_LEN, "signer key id")
    body = data[body_start:r.pos]
    signature = r.take(SIG_LEN, "signature")
    if r.pos != len(data):
        raise ManifestParseError(
            f"{len(data) - r.pos} trailing bytes after statement", r.pos)
    return AttestationStatement(digest_alg=alg, digest=digest,
                                model_id=model_id,
                                signer_key_id=signer.hex(),
                                signature=signature, body=body)


def build_attestation(payload: bytes, model_id: str,
                      signer: ed25519.Ed25519PrivateKey) -> bytes:
    body = bytearray()
    body.append(DIGEST_ALG_SHA256)
    digest = payload_digest(payload)
    body.append(len(digest))
    body.extend(digest)
    mb = model_id.encode("utf-8")
    body.extend(struct.pack(">H", len(mb)))
    body.extend(mb)
    body.extend(bytes.fromhex(key_id(signer.public_key().public_bytes_raw())))
    out = bytearray(ATTESTATION_MAGIC)
    out.extend(body)
    out.extend(signer.sign(bytes(body)))
    return bytes(out)


@dataclass(frozen=True)
class TrustStore:
    """Trusted roots plus revocation data and its retrieval time.

    Revocation data older than freshness_window at verification time is a
    hard failure: a verifier that cannot prove its revocation view is
    current must not vouch for a signer.
    """

    roots: tuple[bytes, ...]
    revocations: Mapping[str, int] = field(default_factory=dict)
    freshness_window: int = DEFAULT_FRESHNESS_WINDOW
    retrieved_at: int = 0

    def __post_init__(self):
        for root in self.roots:
            if len(root) != KEY_LEN:
                raise ValueError(f"root keys must be {KEY_LEN} raw bytes")
        if self.freshness_window <= 0:
            raise ValueError("freshness window must be positive")

    def is_root(self, public_key: bytes) -> bool:
        return public_key in self.roots

    def root_by_key_id(self, kid: str) -> bytes | None:
        for root in self.roots:
            if key_id(root) == kid:
                return root
        return None

    def revoked_at(self, public_key: bytes, now: int) -> bool:
        ts = self.revocations.get(key_id(public_key))
        return ts is not None and ts <= now

    def stale_at(self, now: int) -> bool:
        return now - self.retrieved_at > self.freshness_window

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "roots": [r.hex() for r in self.roots],
            "revocations": dict(sorted(self.revocations.items())),
            "freshness_window": self.freshness_window,
            "retrieved_at": self.retrieved_at,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrustStore":
        if d.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
            raise ValueError(f"unsupported trust store format_version "
                             f"{d.get('format_version')!r}")
        return cls(
            roots=tuple(bytes.fromhex(r) for r in d["roots"]),
            revocations={k: int(v) for k, v in d.get("revocations", {}).items()},
            freshness_window=int(d.get("freshness_window",
                                       DEFAULT_FRESHNESS_WINDOW)),
            retrieved_at=int(d.get("retrieved_at", 0)),
        )


def load_trust_store(path) -> TrustStore:
    with open(path, "r", encoding="utf-8") as fh:
        return TrustStore.from_dict(json.load(fh))


def _signature_valid(public_key: bytes, signature: bytes, data: bytes) -> bool:
    try:
        ed25519.Ed25519PublicKey.from_public_bytes(public_key).verify(
            signature, data)
        return True
    except (InvalidSignature, ValueError):
        return False


def verify_provenance(manifest_bytes: bytes | None, payload: bytes,
                      trust: TrustStore, now: int) -> tuple[int, str]:
    """Binary provenance check: (1, OK) only if every check passes.

    Check order: presence, payload hash binding, claim signature, chain
    link signatures, root trust, revocation, revocation freshness.  The
    status names the first failure.  Malformed bytes raise instead of
    scoring; a parse failure is an input error, not evidence.
    """
    if manifest_bytes is None:
        return 0, STATUS_MANIFEST_ABSENT
    manifest = parse_manifest(manifest_bytes)
    if manifest.digest != payload_digest(payload):
        return 0, STATUS_HASH_MISMATCH
    if not _signature_valid(manifest.leaf_key, manifest.claim_signature,
                            manifest.claim_bytes):
        return 0, STATUS_BAD_SIGNATURE
    for i, sig in enumerate(manifest.link_signatures):
        if not _signature_valid(manifest.chain[i + 1], sig, manifest.chain[i]):
            return 0, STATUS_CHAIN_BROKEN
    if not trust.is_root(manifest.root_key):
        return 0, STATUS_UNTRUSTED_ROOT
    for key in manifest.chain:
        if trust.revoked_at(key, now):
            return 0, STATUS_REVOKED
    if trust.stale_at(now):
        return 0, STATUS_STALE_TRUST
    return 1, STATUS_OK


def verify_attestation(statement_bytes: bytes | None, payload: bytes,
                       trust: TrustStore, now: int) -> tuple[int, str]:
    """Binary attestation check against a registered signer.

    Signers are looked up among the trust roots by key id.  Check order:
    presence, digest binding, signer registration, signature, revocation,
    freshness.
    """
    if statement_bytes is None:
        return 0, STATUS_ATTESTATION_ABSENT
    statement = parse_attestation(statement_bytes)
    if statement.digest != payload_digest(payload):
        return 0, STATUS_DIGEST_MISMATCH
    signer = trust.root_by_key_id(statement.signer_key_id)
    if signer is None:
        return 0, STATUS_UNKNOWN_SIGNER
    if not _signature_valid(signer, statement.signature, statement.body):
        return 0, STATUS_BAD_SIGNATURE
    if trust.revoked_at(signer, now):
        return 0, STATUS_REVOKED
    if trust.stale_at(now):
        return 0, STATUS_STALE_TRUST
    return 1, STATUS_OK


# Replaceable verifier slot: a production deployment would plug a real
# model-identity proof system in here.
AttestationVerifier = Callable[[bytes | None, bytes, TrustStore, int],
                               tuple[int, str]]
DEFAULT_ATTESTATION_VERIFIER: AttestationVerifier = verify_attestation
