from typing import List

import numpy as np

_U64 = 0xFFFFFFFFFFFFFFFF


def _entropy(parts) -> List[int]:
    return [int(p) & _U64 for p in parts]


def derive_seed(*parts: int) -> int:
    """Mix integer parts into one 64-bit seed (order-sensitive, platform-independent)."""
    seq = np.random.SeedSequence(_entropy(parts))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(*parts: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_entropy(parts)))
