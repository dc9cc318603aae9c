"""Small shared helpers: stable seeding, normalization, float formatting."""

from __future__ import annotations

import hashlib

import numpy as np


class DataFormatError(ValueError):
    """Raised when an input file violates one of the interchange formats."""


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from arbitrary parts, stable across processes.

    Python's builtin hash() is salted per process, so seeds that must
    reproduce across runs (per-sentence subsampling, per-iteration
    training) go through this instead.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stable_bucket(*parts, dim: int) -> int:
    """Hash parts into a bucket index in [0, dim)."""
    return stable_seed(*parts) % dim


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Return vec scaled to unit l2 norm; the zero vector is returned as-is."""
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec.copy()
    return vec / norm


def fmt9(x: float) -> str:
    """Fixed 9-significant-digit float formatting for reproducible CSVs."""
    return f"{float(x):.9g}"
