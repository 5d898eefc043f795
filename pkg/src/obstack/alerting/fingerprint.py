"""Stable 64-bit alert fingerprints.

FNV-1a over the byte string ``rule_id\\0k=v\\0k2=v2\\0...`` with labels
sorted by key: trivially specifiable bit-exactly across languages, so a
receiver can recompute and deduplicate on its side.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Tuple

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: bytes) -> int:
    value = FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * FNV_PRIME) & MASK
    return value


def fingerprint(rule_id: str, labels: Iterable[Tuple[str, str]] | Mapping[str, str]) -> int:
    """64-bit dedup key for one (rule, matched label set) pair."""
    pairs = sorted(labels.items()) if isinstance(labels, Mapping) else sorted(labels)
    parts = [rule_id.encode("utf-8"), b"\x00"]
    for key, value in pairs:
        parts.append(f"{key}={value}".encode("utf-8"))
        parts.append(b"\x00")
    return _fnv1a(b"".join(parts))


def fingerprint_hex(rule_id: str, labels) -> str:
    return format(fingerprint(rule_id, labels), "016x")
