"""
Permutation model for pixel-index randomization.

A Permutation is a destination map over the row-major pixel indices of an
image plane: source pixel i is moved to position dest[i]. It records the
scheme and seed it was built from so that a permuted dataset can be rebuilt
exactly from its JSON document.
"""

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PermutationScheme(str, Enum):
    """Construction scheme of a permutation."""

    IDENTITY = "identity"
    FULL = "full"
    PATCH = "patch"
    LOCAL = "local"
    COMPOSITE = "composite"


class Permutation(BaseModel):
    """
    Bijection on pixel indices with its construction record.

    dest[i] is the destination index of source pixel i.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    scheme: PermutationScheme = Field(description="Construction scheme")
    parameters: dict[str, Any] = Field(
        default_factory=dict, description="Scheme parameters, e.g. patch_side or distance"
    )
    seed: int = Field(default=0, ge=0, lt=2**64, description="Construction seed")
    size: int = Field(ge=1, description="Number of pixel positions")
    dest: tuple[int, ...] = Field(description="Destination index of every source pixel")

    @field_validator("dest", mode="before")
    @classmethod
    def coerce_dest(cls, v: Any) -> Any:
        """Accept NumPy arrays as destination maps."""
        if isinstance(v, np.ndarray):
            return tuple(int(i) for i in v.tolist())
        return v

    @model_validator(mode="after")
    def validate_bijection(self) -> "Permutation":
        """Validate dest is a bijection on [0, size)."""
        if len(self.dest) != self.size:
            raise ValueError(f"dest has {len(self.dest)} entries, expected size {self.size}")
        seen = np.zeros(self.size, dtype=bool)
        index = np.asarray(self.dest, dtype=np.int64)
        if index.min() < 0 or index.max() >= self.size:
            raise ValueError("dest entries must lie in [0, size)")
        seen[index] = True
        if not seen.all():
            raise ValueError("dest is not a bijection: some positions are never targeted")
        if self.scheme == PermutationScheme.IDENTITY and not self.is_identity():
            raise ValueError("identity scheme requires dest[i] == i")
        return self

    def as_array(self) -> np.ndarray:
        """Return dest as an int64 NumPy array."""
        return np.asarray(self.dest, dtype=np.int64)

    def is_identity(self) -> bool:
        """Check whether every pixel stays in place."""
        return bool(np.array_equal(self.as_array(), np.arange(self.size)))

    def describe(self) -> str:
        """Short human readable tag such as 'patch(4)' or 'local(16)'."""
        if self.scheme == PermutationScheme.PATCH:
            return f"patch({self.parameters.get('patch_side')})"
        if self.scheme == PermutationScheme.LOCAL:
            return f"local({self.parameters.get('distance')})"
        return self.scheme.value
