"""Deterministic named sub-streams derived from one root seed.

Every stage of the pipeline draws randomness from `substream(root, name)`
so that stages can be rerun independently while staying reproducible.
The derivation hashes the (root, name) pair; it does not depend on
process state, platform, or numpy version quirks.
"""

import hashlib

import numpy as np


def derive_seed(root: int, name: str) -> int:
    """64-bit seed for the named sub-stream of `root`."""
    digest = hashlib.sha256(f"{root}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(root: int, name: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, name))
