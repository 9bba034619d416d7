"""Deterministic seed derivation.

A derived seed is the first 8 bytes (little endian) of the BLAKE2b digest of
the ``repr`` of its parts, e.g. ``derive_seed(7, "recon", {"l": 30}, 2)``.
Mappings are hashed with sorted keys so ordering never matters.
"""

from __future__ import annotations

import hashlib
import numbers
from collections.abc import Mapping

__all__ = ["derive_seed"]


def _canonical(part) -> str:
    if isinstance(part, Mapping):
        return "{" + ",".join(f"{k}={_canonical(part[k])}" for k in sorted(part)) + "}"
    if isinstance(part, bool) or part is None or isinstance(part, str):
        return repr(part)
    if isinstance(part, numbers.Integral):
        return str(int(part))
    if isinstance(part, numbers.Real):
        return repr(float(part))
    return repr(part)


def derive_seed(*parts) -> int:
    text = "|".join(_canonical(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
