"""Deterministic sentence embeddings for the similarity gate.

A hashed bag-of-words is a crude stand-in for a learned sentence encoder,
but it is dependency-free, fast, and identical on every platform, which is
what the reproducibility contract needs at desk scale.  Real encoders plug
in through the same one-method interface.
"""

from __future__ import annotations

import hashlib
import math


class HashedBowEmbedding:
    """Bag-of-words folded into a fixed-width vector by token hashing."""

    def __init__(self, dim: int = 512):
        assert dim >= 1
        self.dim = dim

    def _slot(self, token: str) -> int:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "big") % self.dim

    def embed(self, text: str) -> list[float]:
        vector = [0.0] * self.dim
        for token in text.lower().split():
            vector[self._slot(token)] += 1.0
        norm = math.sqrt(sum(v * v for v in vector))
        if norm > 0.0:
            vector = [v / norm for v in vector]
        return vector
