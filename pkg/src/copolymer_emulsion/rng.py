"""Counter-based random streams.

Every random draw in the package goes through :func:`substream`, which maps a
``(seed, index, ...)`` key to an independent Philox generator.  Sample ``i`` of
any Monte-Carlo loop therefore does not depend on evaluation order or on how
the samples are split across workers.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derived_seed(seed: int, *key: int) -> int:
    """Integer seed for an API that takes a plain seed, keyed like :func:`substream`."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


# stream tags keep the different consumers of one seed apart
TAG_MONOMERS = 1
TAG_FIELD = 2
TAG_MEASURES = 3
TAG_OPTIMIZER = 4


def sample_word(seed: int, index: int, length: int, tag: int = TAG_MONOMERS) -> str:
    """Monomer word of ``length`` i.i.d. fair letters for sample ``index``."""
    bits = substream(seed, tag, index).integers(0, 2, size=length)
    return "".join("B" if b else "A" for b in bits)
