"""Deterministic seed derivation.

A single master seed fans out to independent substreams by hashing the
master seed together with string/integer labels (stage names, frame
indices). SHA-256 keeps substreams decorrelated and the rule stable
across platforms and processes.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *labels: int | str) -> int:
    """Derive a 64-bit seed from `root` and a label path.

    The same (root, labels) always yields the same seed; any change to
    either yields an unrelated one.
    """
    h = hashlib.sha256()
    h.update(int(root).to_bytes(16, "little", signed=True))
    for label in labels:
        if isinstance(label, bool):
            raise TypeError("bool labels are ambiguous; use int or str")
        if isinstance(label, int):
            h.update(b"i")
            h.update(label.to_bytes(16, "little", signed=True))
        elif isinstance(label, str):
            encoded = label.encode("utf-8")
            h.update(b"s")
            h.update(len(encoded).to_bytes(4, "little"))
            h.update(encoded)
        else:
            raise TypeError(f"unsupported label type {type(label).__name__}")
    return int.from_bytes(h.digest()[:8], "little")
