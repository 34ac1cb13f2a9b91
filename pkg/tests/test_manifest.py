"""Wire-format parsing and the fail-closed verification chain."""

import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from proofbench.manifest import (
    DEFAULT_FRESHNESS_WINDOW,
    ManifestParseError,
    STATUS_ATTESTATION_ABSENT,
    STATUS_BAD_SIGNATURE,
    STATUS_CHAIN_BROKEN,
    STATUS_DIGEST_MISMATCH,
    STATUS_HASH_MISMATCH,
    STATUS_MANIFEST_ABSENT,
    STATUS_OK,
    STATUS_REVOKED,
    STATUS_STALE_TRUST,
    STATUS_UNKNOWN_SIGNER,
    STATUS_UNTRUSTED_ROOT,
    TrustStore,
    build_attestation,
    build_manifest,
    key_id,
    parse_attestation,
    parse_manifest,
    payload_digest,
    verify_attestation,
    verify_provenance,
)

from conftest import NOW, signing_key

CHAIN_KEYS = [signing_key(f"chain-{i}") for i in range(4)]


def flip_bit(data: bytes, byte_index: int, bit: int = 0) -> bytes:
    out = bytearray(data)
    out[byte_index] ^= 1 << bit
    return bytes(out)


class TestManifestRoundTrip:
    def test_fields_survive(self, crypto_fixture):
        m = parse_manifest(crypto_fixture["manifest"])
        assert m.digest == payload_digest(crypto_fixture["payload"])
        assert m.assertions == (("generator", "gen-a"), ("run", "1"))
        assert len(m.chain) == 2
        assert m.leaf_key == crypto_fixture["leaf"].public_key().public_bytes_raw()
        assert m.root_key == crypto_fixture["root"].public_key().public_bytes_raw()
        assert len(m.link_signatures) == 1

    def test_verifies_ok(self, crypto_fixture):
        score, status = verify_provenance(
            crypto_fixture["manifest"], crypto_fixture["payload"],
            crypto_fixture["trust"], crypto_fixture["now"])
        assert (score, status) == (1, STATUS_OK)

    def test_no_assertions(self):
        data = build_manifest(b"p", None, [CHAIN_KEYS[0]])
        assert parse_manifest(data).assertions == ()

    def test_empty_signer_list_rejected(self):
        with pytest.raises(ValueError):
            build_manifest(b"p", {}, [])

    @settings(max_examples=60, deadline=None)
    @given(
        payload=st.binary(min_size=0, max_size=200),
        assertions=st.dictionaries(st.text(max_size=12), st.text(max_size=12),
                                   max_size=4),
        n_links=st.integers(min_value=1, max_value=4),
    )
    def test_any_build_parses_and_verifies(self, payload, assertions, n_links):
        signers = CHAIN_KEYS[:n_links]
        data = build_manifest(payload, assertions, signers)
        m = parse_manifest(data)
        assert m.assertions == tuple(assertions.items())
        assert m.chain == tuple(s.public_key().public_bytes_raw()
                                for s in signers)
        trust = TrustStore(roots=(m.root_key,), retrieved_at=NOW)
        assert verify_provenance(data, payload, trust, NOW) == (1, STATUS_OK)


class TestManifestParseErrors:
    def test_bad_magic(self, crypto_fixture):
        with pytest.raises(ManifestParseError) as exc:
            parse_manifest(b"XXXX" + crypto_fixture["manifest"][4:])
        assert exc.value.offset == 0

    def test_every_truncation_raises(self, crypto_fixture):
        data = crypto_fixture["manifest"]
        for k in range(len(data)):
            with pytest.raises(ManifestParseError):
                parse_manifest(data[:k])

    def test_trailing_garbage_rejected(self, crypto_fixture):
        with pytest.raises(ManifestParseError, match="trailing"):
            parse_manifest(crypto_fixture["manifest"] + b"\x00")

    def test_empty_chain_rejected(self, crypto_fixture):
        # Patch the chain-length byte to zero: offset is 4 (magic) plus
        # the claim section.
        data = crypto_fixture["manifest"]
        m = parse_manifest(data)
        pos = 4 + len(m.claim_bytes)
        assert data[pos] == 2
        with pytest.raises(ManifestParseError):
            parse_manifest(data[:pos] + b"\x00" + data[pos + 1:])


class TestProvenanceFailures:
    """Each check in the chain fails closed with its own status."""

    def test_absent(self, crypto_fixture):
        score, status = verify_provenance(None, crypto_fixture["payload"],
                                          crypto_fixture["trust"], NOW)
        assert (score, status) == (0, STATUS_MANIFEST_ABSENT)

    def test_hash_mismatch(self, crypto_fixture):
        score, status = verify_provenance(
            crypto_fixture["manifest"], b"another payload",
            crypto_fixture["trust"], NOW)
        assert (score, status) == (0, STATUS_HASH_MISMATCH)

    def test_bad_claim_signature(self, crypto_fixture):
        data = crypto_fixture["manifest"]
        tampered = flip_bit(data, len(data) - 1)  # inside the claim sig
        score, status = verify_provenance(tampered, crypto_fixture["payload"],
                                          crypto_fixture["trust"], NOW)
        assert (score, status) == (0, STATUS_BAD_SIGNATURE)

    def test_broken_chain_link(self, crypto_fixture):
        # Link signature sits right after the first 32-byte chain key.
        data = crypto_fixture["manifest"]
        m = parse_manifest(data)
        pos = 4 + len(m.claim_bytes) + 1 + 32
        tampered = flip_bit(data, pos + 10)
        score, status = verify_provenance(tampered, crypto_fixture["payload"],
                                          crypto_fixture["trust"], NOW)
        assert (score, status) == (0, STATUS_CHAIN_BROKEN)

    def test_untrusted_root(self, crypto_fixture):
        stranger = TrustStore(
            roots=(signing_key("other-root").public_key().public_bytes_raw(),),
            retrieved_at=NOW)
        score, status = verify_provenance(
            crypto_fixture["manifest"], crypto_fixture["payload"],
            stranger, NOW)
        assert (score, status) == (0, STATUS_UNTRUSTED_ROOT)

    def test_revoked_leaf(self, crypto_fixture):
        leaf_pub = crypto_fixture["leaf"].public_key().public_bytes_raw()
        trust = dataclasses.replace(
            crypto_fixture["trust"],
            revocations={key_id(leaf_pub): NOW - 3600})
        score, status = verify_provenance(
            crypto_fixture["manifest"], crypto_fixture["payload"], trust, NOW)
        assert (score, status) == (0, STATUS_REVOKED)

    def test_future_revocation_not_yet_effective(self, crypto_fixture):
        leaf_pub = crypto_fixture["leaf"].public_key().public_bytes_raw()
        trust = dataclasses.replace(
            crypto_fixture["trust"],
            revocations={key_id(leaf_pub): NOW + 3600})
        score, status = verify_provenance(
            crypto_fixture["manifest"], crypto_fixture["payload"], trust, NOW)
        assert (score, status) == (1, STATUS_OK)

    def test_stale_trust(self, crypto_fixture):
        trust = dataclasses.replace(
            crypto_fixture["trust"],
            retrieved_at=NOW - DEFAULT_FRESHNESS_WINDOW - 1)
        score, status = verify_provenance(
            crypto_fixture["manifest"], crypto_fixture["payload"], trust, NOW)
        assert (score, status) == (0, STATUS_STALE_TRUST)

    def test_freshness_boundary_is_inclusive(self, crypto_fixture):
        trust = dataclasses.replace(
            crypto_fixture["trust"],
            retrieved_at=NOW - DEFAULT_FRESHNESS_WINDOW)
        score, status = verify_provenance(
            crypto_fixture["manifest"], crypto_fixture["payload"], trust, NOW)
        assert (score, status) == (1, STATUS_OK)

    def test_hash_check_precedes_signature_check(self, crypto_fixture):
        tampered = flip_bit(crypto_fixture["manifest"],
                            len(crypto_fixture["manifest"]) - 1)
        score, status = verify_provenance(tampered, b"another payload",
                                          crypto_fixture["trust"], NOW)
        assert status == STATUS_HASH_MISMATCH

    def test_revocation_precedes_staleness(self, crypto_fixture):
        leaf_pub = crypto_fixture["leaf"].public_key().public_bytes_raw()
        trust = dataclasses.replace(
            crypto_fixture["trust"],
            revocations={key_id(leaf_pub): NOW - 10},
            retrieved_at=NOW - DEFAULT_FRESHNESS_WINDOW - 10)
        score, status = verify_provenance(
            crypto_fixture["manifest"], crypto_fixture["payload"], trust, NOW)
        assert status == STATUS_REVOKED


class TestSingleBitTamper:
    def test_every_byte_flip_fails_closed(self, crypto_fixture):
        """One flipped bit anywhere must never verify: either the parse
        rejects the bytes or the score is 0."""
        data = crypto_fixture["manifest"]
        payload = crypto_fixture["payload"]
        trust = crypto_fixture["trust"]
        for i in range(len(data)):
            tampered = flip_bit(data, i, bit=i % 8)
            try:
                score, status = verify_provenance(tampered, payload, trust,
                                                  NOW)
            except ManifestParseError:
                continue
            assert score == 0, f"flip at byte {i} still verified ({status})"


class TestAttestation:
    def test_round_trip_ok(self, crypto_fixture):
        score, status = verify_attestation(
            crypto_fixture["attestation"], crypto_fixture["payload"],
            crypto_fixture["trust"], NOW)
        assert (score, status) == (1, STATUS_OK)
        stmt = parse_attestation(crypto_fixture["attestation"])
        assert stmt.model_id == "model-x"
        attestor_pub = crypto_fixture["attestor"].public_key().public_bytes_raw()
        assert stmt.signer_key_id == key_id(attestor_pub)

    def test_absent(self, crypto_fixture):
        score, status = verify_attestation(None, crypto_fixture["payload"],
                                           crypto_fixture["trust"], NOW)
        assert (score, status) == (0, STATUS_ATTESTATION_ABSENT)

    def test_digest_mismatch(self, crypto_fixture):
        score, status = verify_attestation(
            crypto_fixture["attestation"], b"another payload",
            crypto_fixture["trust"], NOW)
        assert (score, status) == (0, STATUS_DIGEST_MISMATCH)

    def test_unknown_signer(self, crypto_fixture):
        trust = TrustStore(
            roots=(crypto_fixture["root"].public_key().public_bytes_raw(),),
            retrieved_at=NOW)
        score, status = verify_attestation(
            crypto_fixture["attestation"], crypto_fixture["payload"],
            trust, NOW)
        assert (score, status) == (0, STATUS_UNKNOWN_SIGNER)

    def test_bad_signature(self, crypto_fixture):
        data = crypto_fixture["attestation"]
        tampered = flip_bit(data, len(data) - 1)
        score, status = verify_attestation(
            tampered, crypto_fixture["payload"], crypto_fixture["trust"], NOW)
        assert (score, status) == (0, STATUS_BAD_SIGNATURE)

    def test_revoked_signer(self, crypto_fixture):
        attestor_pub = crypto_fixture["attestor"].public_key().public_bytes_raw()
        trust = dataclasses.replace(
            crypto_fixture["trust"],
            revocations={key_id(attestor_pub): NOW - 5})
        score, status = verify_attestation(
            crypto_fixture["attestation"], crypto_fixture["payload"],
            trust, NOW)
        assert (score, status) == (0, STATUS_REVOKED)

    def test_stale_trust(self, crypto_fixture):
        trust = dataclasses.replace(
            crypto_fixture["trust"],
            retrieved_at=NOW - DEFAULT_FRESHNESS_WINDOW - 1)
        score, status = verify_attestation(
            crypto_fixture["attestation"], crypto_fixture["payload"],
            trust, NOW)
        assert (score, status) == (0, STATUS_STALE_TRUST)

    def test_trailing_garbage_rejected(self, crypto_fixture):
        with pytest.raises(ManifestParseError, match="trailing"):
            parse_attestation(crypto_fixture["attestation"] + b"!")

    def test_truncations_raise(self, crypto_fixture):
        data = crypto_fixture["attestation"]
        for k in range(0, len(data), 7):
            with pytest.raises(ManifestParseError):
                parse_attestation(data[:k])


class TestTrustStore:
    def test_round_trip(self, crypto_fixture):
        trust = dataclasses.replace(crypto_fixture["trust"],
                                    revocations={"ab" * 32: 123})
        again = TrustStore.from_dict(trust.to_dict())
        assert again == trust

    def test_format_version_checked(self, crypto_fixture):
        d = crypto_fixture["trust"].to_dict()
        d["format_version"] = 99
        with pytest.raises(ValueError, match="format_version"):
            TrustStore.from_dict(d)

    def test_root_length_validated(self):
        with pytest.raises(ValueError):
            TrustStore(roots=(b"short",))

    def test_stale_boundary(self):
        trust = TrustStore(roots=(), retrieved_at=1000, freshness_window=100)
        assert not trust.stale_at(1100)
        assert trust.stale_at(1101)

    def test_revocation_boundary(self):
        pub = signing_key("rv").public_key().public_bytes_raw()
        trust = TrustStore(roots=(pub,), revocations={key_id(pub): 500})
        assert trust.revoked_at(pub, 500)
        assert not trust.revoked_at(pub, 499)
