#!/usr/bin/env python3
"""Stable digests for fingerprints and seed fan-out"""

import hashlib
import json
from typing import Any


def stable_digest(payload: Any) -> str:
    """Hex sha256 of a canonical JSON encoding of payload"""
    encoded = json.dumps(
        payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def derive_seed(seed: int, component: str) -> int:
    """Fan a top-level seed out to a named component"""
    digest = stable_digest({"seed": int(seed), "component": component})
    return int(digest[:16], 16)


def unit_interval(*parts: Any) -> float:
    """Map parts to a deterministic float in [0, 1)"""
    digest = stable_digest(list(parts))
    return int(digest[:13], 16) / float(1 << 52)
