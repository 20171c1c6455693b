# Utilities module initialization

from .seeding import MAX_SEED, derive_seed, make_generator, validate_seed

__all__ = ["MAX_SEED", "derive_seed", "make_generator", "validate_seed"]
