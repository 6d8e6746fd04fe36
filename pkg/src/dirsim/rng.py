"""Seeded, splittable random streams.

A stream is identified by ``(seed, stream_id)``.  Both are folded into a
``SeedSequence`` that keys a Philox4x64 counter-based generator, so a
stream's output depends only on those two integers, never on how much any
other stream has consumed.
"""
from __future__ import annotations

import hashlib

import numpy as np

GENERATOR_NAME = "philox4x64"
NORMAL_METHOD = "ziggurat"
_MASK64 = (1 << 64) - 1


def _child_id(stream_id: int, index: int) -> int:
    digest = hashlib.blake2b(
        f"{stream_id}:{index}".encode(), digest_size=8, person=b"dirsim-split"
    ).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """Reproducible stream of uniform and standard normal variates.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed.
    stream_id : int, default 0
        64-bit unsigned stream identifier.  Distinct ids under the same
        seed give independent streams.

    A stream is meant to have a single owner.  Use :meth:`split` to hand
    independent streams to workers.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = seed
        self.stream_id = stream_id
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._n_split = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, size=None):
        """Uniform variates on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None):
        """Standard normal variates (ziggurat method, exact)."""
        return self._gen.standard_normal(size)

    def next_uniform(self) -> float:
        return float(self._gen.random())

    def next_normal(self) -> float:
        return float(self._gen.standard_normal())

    def split(self, k: int) -> list[RngStream]:
        """Return ``k`` new independent streams.

        Child ids are a hash of the parent id and a running split counter,
        so repeated calls keep producing fresh streams.  The parent's own
        output sequence is untouched.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        start = self._n_split
        self._n_split += k
        return [RngStream(self.seed, _child_id(self.stream_id, start + i)) for i in range(k)]

    def shard(self, index: int) -> RngStream:
        """Stream for shard ``index``, independent of any call history."""
        return RngStream(self.seed, _child_id(self.stream_id, -1 - int(index)))


def as_stream(s) -> RngStream:
    """Coerce an int seed or an existing stream to an :class:`RngStream`."""
    if isinstance(s, RngStream):
        return s
    if s is None:
        raise ValueError("a seed or RngStream is required")
    return RngStream(int(s))
