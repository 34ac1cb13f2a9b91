"""Shared fixtures: the published-scale synthetic run and its derived
partition and calibration, built once per session."""

import hashlib

import pytest
from cryptography.hazmat.primitives.asymmetric import ed25519

from proofbench.benchmark import generate_benchmark, packaged_detector_suite
from proofbench.calibration import calibrate_all, partition
from proofbench.manifest import TrustStore, build_attestation, build_manifest


def signing_key(label: str) -> ed25519.Ed25519PrivateKey:
    seed = hashlib.sha256(f"proofbench-test-{label}".encode()).digest()
    return ed25519.Ed25519PrivateKey.from_private_bytes(seed)


@pytest.fixture(scope="session")
def detector_suite():
    return packaged_detector_suite()


@pytest.fixture(scope="session")
def published_run():
    """Full benchmark at shipped defaults: 2000 per tier, 2000 natural."""
    return generate_benchmark()


@pytest.fixture(scope="session")
def published_partition(published_run):
    return partition(published_run.records)


@pytest.fixture(scope="session")
def published_calibration(published_partition):
    cal, _ = published_partition
    return calibrate_all(cal)


def pytest_terminal_summary(terminalreporter):
    """Echo the release-gate verdict lines past output capture."""
    import sys
    gate = sys.modules.get("test_acceptance")
    if gate is not None and getattr(gate, "GATE_LINES", None):
        terminalreporter.section("release gate")
        for line in gate.GATE_LINES:
            terminalreporter.line(line)


NOW = 1_750_000_000


@pytest.fixture(scope="session")
def crypto_fixture():
    """Payload, signed two-link manifest, attestation, and a fresh trust
    store that also registers the attestor."""
    payload = b"artifact payload bytes for verification tests\n" * 32
    leaf = signing_key("leaf")
    root = signing_key("root")
    attestor = signing_key("attestor")
    manifest = build_manifest(payload, {"generator": "gen-a", "run": "1"},
                              [leaf, root])
    attestation = build_attestation(payload, "model-x", attestor)
    trust = TrustStore(
        roots=(root.public_key().public_bytes_raw(),
               attestor.public_key().public_bytes_raw()),
        retrieved_at=NOW - 600,
    )
    return {
        "payload": payload,
        "leaf": leaf,
        "root": root,
        "attestor": attestor,
        "manifest": manifest,
        "attestation": attestation,
        "trust": trust,
        "now": NOW,
    }
