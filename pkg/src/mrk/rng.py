"""Deterministic random streams with hash-derived, order-independent substreams.

A stream is identified by a master seed plus a path of domain-separation
tokens (subject id, transform name, severity...). Derivation is a pure
function of (seed, path), so per-subject work can run in any order, on any
worker, and still draw identical numbers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np

Token = Union[str, int]


def _encode_token(token: Token) -> bytes:
    if isinstance(token, bool):
        raise TypeError("bool tokens are ambiguous; use int or str")
    if isinstance(token, int):
        payload = b"i" + str(token).encode("ascii")
    elif isinstance(token, str):
        payload = b"s" + token.encode("utf-8")
    else:
        raise TypeError(f"unsupported path token type: {type(token).__name__}")
    return len(payload).to_bytes(4, "big") + payload


@dataclass(frozen=True)
class RngStream:
    """A derivation key for a reproducible random stream.

    The key itself is stateless: :meth:`generator` always returns a fresh
    generator at the stream's origin. Use :meth:`child` to derive
    statistically independent substreams.
    """

    master_seed: int
    path: tuple[Token, ...] = ()

    def child(self, *tokens: Token) -> "RngStream":
        """Derive a substream by extending the path."""
        return RngStream(self.master_seed, self.path + tuple(tokens))

    def _key(self) -> int:
        h = hashlib.sha256()
        h.update((self.master_seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big"))
        for token in self.path:
            h.update(_encode_token(token))
        return int.from_bytes(h.digest()[:16], "big")

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator seeded from the 128-bit stream key."""
        return np.random.Generator(np.random.PCG64(self._key()))


def as_generator(rng: Union[RngStream, np.random.Generator]) -> np.random.Generator:
    """Accept either a stream key or an already-running generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
