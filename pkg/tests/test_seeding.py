"""
Tests for the shared seeding helpers.
"""

import numpy as np
import pytest

from permubench.utils import MAX_SEED, derive_seed, make_generator, validate_seed


class TestSeeding:
    """Test cases for validate_seed, make_generator and derive_seed."""

    def test_generator_is_pcg64(self):
        rng = make_generator(123)

        assert isinstance(rng.bit_generator, np.random.PCG64)
        assert rng.integers(0, 2**32) == np.random.Generator(np.random.PCG64(123)).integers(0, 2**32)

    def test_seed_range(self):
        assert validate_seed(MAX_SEED) == 2**64 - 1
        with pytest.raises(ValueError):
            validate_seed(2**64)
        with pytest.raises(ValueError):
            validate_seed(-1)

    def test_rejects_non_integers(self):
        with pytest.raises(ValueError):
            validate_seed(1.5)  # type: ignore[arg-type]
        with pytest.raises(ValueError):
            validate_seed(True)

    def test_derive_seed_is_stable_and_key_sensitive(self):
        assert derive_seed(7, 1) == derive_seed(7, 1)
        assert derive_seed(7, 1) != derive_seed(7, 2)
        assert derive_seed(7, 1) != derive_seed(8, 1)
        assert 0 <= derive_seed(MAX_SEED, 3) <= MAX_SEED
