"""Append-only audit log with per-line hash chaining, plus the run
manifest every command writes.

Each audit line is a canonical JSON object carrying the SHA-256 of the
previous line's exact bytes; the first line chains from a fixed genesis
value.  Any byte edit to a committed line breaks every hash after it,
so tampering is evident from the file alone, without external state.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Mapping

from .core import FORMAT_VERSION, canonical_json

GENESIS = "0" * 64


def _line_hash(line: str) -> str:
    return hashlib.sha256(line.encode("utf-8")).hexdigest()


def _last_line(path) -> str | None:
    if not os.path.exists(path):
        return None
    last = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                last = line
    return last


def append_audit(path, body: Mapping) -> dict:
    """Append one chained record; returns the full line object.

    The previous-line hash is recomputed from the file at append time, so
    concurrent writers cannot silently fork the chain: the loser of a
    race produces a verifiably broken file instead of a plausible one.
    """
    last = _last_line(path)
    prev = GENESIS if last is None else _line_hash(last)
    seq = 0
    if last is not None:
        seq = json.loads(last)["seq"] + 1
    record = {
        "format_version": FORMAT_VERSION,
        "seq": seq,
        "prev": prev,
        "body": dict(body),
    }
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(canonical_json(record))
        fh.write("\n")
    return record


@dataclass(frozen=True)
class AuditCheck:
    ok: bool
    lines: int
    first_bad_line: int | None = None
    reason: str | None = None


def verify_audit_log(path) -> AuditCheck:
    """Walk the chain; reports the first line whose prev-hash, sequence
    number, or JSON shape is wrong."""
    if not os.path.exists(path):
        return AuditCheck(ok=True, lines=0)
    expected_prev = GENESIS
    count = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                return AuditCheck(ok=False, lines=count, first_bad_line=lineno,
                                  reason="not valid JSON")
            if record.get("format_version") != FORMAT_VERSION:
                return AuditCheck(ok=False, lines=count, first_bad_line=lineno,
                                  reason="unsupported format_version")
            if record.get("seq") != count:
                return AuditCheck(ok=False, lines=count, first_bad_line=lineno,
                                  reason=f"sequence gap: expected {count}")
            if record.get("prev") != expected_prev:
                return AuditCheck(ok=False, lines=count, first_bad_line=lineno,
                                  reason="previous-line hash mismatch")
            expected_prev = _line_hash(line)
            count += 1
    return AuditCheck(ok=True, lines=count)


@dataclass(frozen=True)
class RunManifest:
    """What a command ran with: enough to reproduce its outputs exactly."""

    command: str
    config_hash: str
    seed: int
    tool_version: str
    timestamp: int
    inputs: tuple[str, ...] = field(default=())
    outputs: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunManifest":
        if d.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
            raise ValueError(f"unsupported run manifest format_version "
                             f"{d.get('format_version')!r}")
        return cls(
            command=d["command"], config_hash=d["config_hash"],
            seed=int(d["seed"]), tool_version=d["tool_version"],
            timestamp=int(d["timestamp"]),
            inputs=tuple(d.get("inputs", ())),
            outputs=tuple(d.get("outputs", ())),
        )


def config_digest(path) -> str:
    """Hash of the canonical re-encoding of a JSON config, so formatting
    churn does not change the recorded identity."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return hashlib.sha256(canonical_json(payload).encode("ascii")).hexdigest()


def write_run_manifest(path, manifest: RunManifest) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(manifest.to_dict()))
        fh.write("\n")


def load_run_manifest(path) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fh:
        return RunManifest.from_dict(json.load(fh))
