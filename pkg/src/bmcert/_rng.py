"""Seeded random streams.

Every stream is a Philox counter-based generator keyed by a
``numpy.random.SeedSequence``. A seed may be an int, a tuple of ints
(e.g. ``(base_seed, grid_index, trial_index)``) or an existing Generator,
which is passed through untouched. An int ``s`` is the same seed as ``(s,)``.
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int], np.random.Generator, None]


def seed_words(seed) -> list[int]:
    """Entropy words for ``seed``.

    ``SeedSequence`` ignores trailing zero words, so ``(s, 0)`` and ``(s,)``
    would otherwise share a stream; appending the tuple length keeps distinct
    tuples distinct.
    """
    if seed is None:
        seed = 0
    words = [int(seed)] if isinstance(seed, (int, np.integer)) else [int(s) for s in seed]
    if any(w < 0 for w in words):
        raise ValueError("seeds must be non-negative integers")
    return words + [len(words)]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_words(seed))))
