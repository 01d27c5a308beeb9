"""Deterministic random substreams.

A run is identified by one 64-bit master seed.  Every consumer asks for a
generator by ``(purpose tag, block index)``; the pair is folded into a
:class:`numpy.random.SeedSequence` spawn key, so the draws of a block never
depend on which worker produced them or in which order.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass
from typing import ClassVar

import numpy as np


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


@dataclass(frozen=True)
class RunSeed:
    DEFAULT: ClassVar[int] = 20240601

    master_seed: int = DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) % 2**64)

    def generator(self, tag: str, block: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(_tag_key(tag), int(block)))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, tag: str) -> "RunSeed":
        """A derived master seed, for handing a whole sub-run its own namespace."""
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(_tag_key(tag),))
        return RunSeed(int(ss.generate_state(1, dtype=np.uint64)[0]))

    @classmethod
    def from_env(cls, default: int = DEFAULT) -> "RunSeed":
        return cls(int(os.environ.get("GOF_SEED", default)))


def as_seed(seed) -> RunSeed:
    if isinstance(seed, RunSeed):
        return seed
    if seed is None:
        return RunSeed.from_env()
    return RunSeed(int(seed))
