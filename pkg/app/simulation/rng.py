# Directory: fedgw-sim/app/simulation/rng.py

"""
Random Streams - Seeded Substreams by Stable Label.

Every random decision in a run draws from a substream derived from the master
seed and a label such as "link:<station>:<gateway>" or "wake:<gateway>".
Adding a gateway or a station therefore leaves the draws of unrelated
entities unchanged.
"""

import zlib
from typing import Dict

import numpy as np


def substream_seed(seed: int, label: str) -> list:
    """Entropy for a labelled substream."""
    return [seed, zlib.crc32(label.encode("utf-8"))]


class RngStreams:
    """Lazily created numpy Generators, one per label."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: Dict[str, np.random.Generator] = {}

    def stream(self, label: str) -> np.random.Generator:
        generator = self._streams.get(label)
        if generator is None:
            generator = np.random.default_rng(substream_seed(self.seed, label))
            self._streams[label] = generator
        return generator
