#!/usr/bin/env python3
"""Build a deterministic fixture set for the verify subcommand.

Writes a payload, a two-link signed manifest, an attestation statement,
watermark detector scores, and three trust stores (fresh, stale, and one
with the leaf key revoked), plus a bit-flipped manifest.  Keys are
derived from fixed byte strings, so reruns produce identical files.

Usage: python3 scripts/make_verify_fixtures.py [--out DIR]
"""

import argparse
import hashlib
import json
import os
import sys

from cryptography.hazmat.primitives.asymmetric import ed25519

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from proofbench.core import FORMAT_VERSION
from proofbench.manifest import (
    TrustStore,
    build_attestation,
    build_manifest,
    key_id,
)

# Any fixed epoch works; verify is called with --now anchored to it.
FIXTURE_NOW = 1_750_000_000


def fixture_key(label: str) -> ed25519.Ed25519PrivateKey:
    seed = hashlib.sha256(f"proofbench-fixture-{label}".encode()).digest()
    return ed25519.Ed25519PrivateKey.from_private_bytes(seed)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures")
    args = parser.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)

    payload = b"proofbench demo artifact payload v1\n" * 64
    leaf = fixture_key("leaf")
    root = fixture_key("root")
    attestor = fixture_key("attestor")

    manifest = build_manifest(payload, {"generator": "demo-gen-a"},
                              [leaf, root])
    attestation = build_attestation(payload, "demo-model-1", attestor)

    tampered = bytearray(manifest)
    tampered[len(tampered) // 2] ^= 0x01

    root_pub = root.public_key().public_bytes_raw()
    att_pub = attestor.public_key().public_bytes_raw()
    fresh = TrustStore(roots=(root_pub, att_pub),
                       retrieved_at=FIXTURE_NOW - 600)
    stale = TrustStore(roots=(root_pub, att_pub),
                       retrieved_at=FIXTURE_NOW - 48 * 3600)
    leaf_kid = key_id(leaf.public_key().public_bytes_raw())
    revoked = TrustStore(roots=(root_pub, att_pub),
                         revocations={leaf_kid: FIXTURE_NOW - 3600},
                         retrieved_at=FIXTURE_NOW - 600)

    scores_strong = {
        "format_version": FORMAT_VERSION,
        "watermark_scores": [
            {"scheme": "gaussian-shading", "raw": 4.8, "unit": 0.999},
            {"scheme": "tree-ring", "raw": 3.9, "unit": 0.995},
        ],
    }
    scores_zero = {"format_version": FORMAT_VERSION, "watermark_scores": [
        {"scheme": "gaussian-shading", "raw": -0.2, "unit": 0.0},
    ]}

    out = {
        "payload.bin": payload,
        "manifest.bin": bytes(manifest),
        "manifest-tampered.bin": bytes(tampered),
        "attestation.bin": bytes(attestation),
    }
    for name, blob in out.items():
        with open(os.path.join(args.out, name), "wb") as fh:
            fh.write(blob)
    texts = {
        "trust-fresh.json": fresh.to_dict(),
        "trust-stale.json": stale.to_dict(),
        "trust-revoked.json": revoked.to_dict(),
        "scores-strong.json": scores_strong,
        "scores-zero.json": scores_zero,
        "now.json": {"format_version": FORMAT_VERSION, "now": FIXTURE_NOW},
    }
    for name, doc in texts.items():
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"wrote {len(out) + len(texts)} fixture files to {args.out}")
    print(f"verify them with --now {FIXTURE_NOW}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
