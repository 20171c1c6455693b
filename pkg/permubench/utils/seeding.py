"""
Seeded random number generation shared by every stochastic step.

All randomness in permubench flows through NumPy's PCG64 bit generator so that
a (seed, parameters) pair reproduces bit-identical permutations, subsets,
initial weights and batch orders. Derived seeds are produced with
SeedSequence so that e.g. layer 3 and epoch 7 draw from independent streams.
"""

import numpy as np

MAX_SEED = 2**64 - 1


def validate_seed(seed: int) -> int:
    """
    Check that a seed fits the unsigned 64-bit range.

    Raises:
        ValueError: If the seed is negative or wider than 64 bits
    """
    if isinstance(seed, bool) or not isinstance(seed, int | np.integer):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return int(seed)


def make_generator(seed: int) -> np.random.Generator:
    """Create the PCG64-backed generator for a validated seed."""
    return np.random.Generator(np.random.PCG64(validate_seed(seed)))


def derive_seed(base: int, *keys: int) -> int:
    """
    Derive an independent 64-bit seed from a base seed and integer keys.

    The same (base, keys) always yields the same value.
    """
    sequence = np.random.SeedSequence([validate_seed(base), *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
