"""
Randomization service: deterministic pixel-index permutations.

Builds the three randomization schemes (full pixel shuffle, square patch
shuffle, row-major local swaps), composes and inverts them, and applies them
to image grids. Permutations act on the spatial plane only and are broadcast
across channels and over any leading batch dimensions.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from permubench.models.permutation import Permutation, PermutationScheme
from permubench.utils import make_generator

logger = structlog.get_logger("permubench.randomize")


class PermutationError(ValueError):
    """Raised for invalid permutation arguments or size mismatches."""

    pass


class PatchSpec(BaseModel):
    """Square patch layout of a square image."""

    model_config = ConfigDict(frozen=True)

    side: int = Field(ge=1, description="Image side length in pixels")
    patch_side: int = Field(ge=1, description="Patch edge length in pixels")

    @model_validator(mode="after")
    def validate_divides(self) -> "PatchSpec":
        """Validate patch_side divides side exactly."""
        if self.side % self.patch_side != 0:
            raise ValueError(
                f"patch_side {self.patch_side} does not divide image side {self.side}"
            )
        return self


class LocalSwapSpec(BaseModel):
    """Neighbourhood of the row-major local swap scan."""

    model_config = ConfigDict(frozen=True)

    height: int = Field(ge=1, description="Image height in pixels")
    width: int = Field(ge=1, description="Image width in pixels")
    distance: int = Field(ge=0, description="Chebyshev neighbourhood radius D")

    @model_validator(mode="after")
    def validate_distance(self) -> "LocalSwapSpec":
        """Validate 0 <= distance <= max(height, width)."""
        if self.distance > max(self.height, self.width):
            raise ValueError(
                f"distance {self.distance} exceeds max image dimension "
                f"{max(self.height, self.width)}"
            )
        return self


@dataclass(frozen=True)
class DisplacementStats:
    """Chebyshev displacement summary of a permutation."""

    max_distance: int
    mean_distance: float
    moved_fraction: float
    beyond_radius_fraction: float


def identity_permutation(size: int) -> Permutation:
    """Permutation that leaves every pixel in place."""
    if size < 1:
        raise PermutationError(f"permutation size must be >= 1, got {size}")
    return Permutation(
        scheme=PermutationScheme.IDENTITY, size=size, dest=np.arange(size, dtype=np.int64)
    )


def make_full_permutation(size: int, seed: int) -> Permutation:
    """
    Uniformly random bijection on `size` pixel positions.

    dest is Generator(PCG64(seed)).permutation(size), an unbiased
    Fisher-Yates shuffle.

    Raises:
        PermutationError: If size is zero or the seed is out of range
    """
    if size < 1:
        raise PermutationError(f"permutation size must be >= 1, got {size}")
    try:
        rng = make_generator(seed)
    except ValueError as e:
        raise PermutationError(str(e)) from e
    dest = rng.permutation(size)
    return Permutation(scheme=PermutationScheme.FULL, seed=seed, size=size, dest=dest)


def patches_per_side(side: int, patch_side: int) -> int:
    """Number of slices along one axis, the alternative patch parameter."""
    return PatchSpec(side=side, patch_side=patch_side).side // patch_side


def make_patch_permutation(spec: PatchSpec, seed: int) -> Permutation:
    """
    Shuffle square patches; pixels keep their offset inside the patch.

    The (side/patch_side)^2 patch indices are shuffled with
    make_full_permutation using the same seed.
    """
    per_side = spec.side // spec.patch_side
    patch_perm = make_full_permutation(per_side * per_side, seed).as_array()

    rows, cols = np.divmod(np.arange(spec.side * spec.side), spec.side)
    patch_row, offset_row = np.divmod(rows, spec.patch_side)
    patch_col, offset_col = np.divmod(cols, spec.patch_side)

    target_patch = patch_perm[patch_row * per_side + patch_col]
    target_row = (target_patch // per_side) * spec.patch_side + offset_row
    target_col = (target_patch % per_side) * spec.patch_side + offset_col
    dest = target_row * spec.side + target_col

    return Permutation(
        scheme=PermutationScheme.PATCH,
        parameters={"patch_side": spec.patch_side},
        seed=seed,
        size=spec.side * spec.side,
        dest=dest,
    )


def local_swap_transpositions(spec: LocalSwapSpec, seed: int) -> list[tuple[int, int]]:
    """
    Replay the row-major local swap scan and return its transpositions.

    For every position p, a row and then a column are drawn uniformly from
    the Chebyshev window of radius D around p, clipped to the image; q = p is
    allowed.
    """
    try:
        rng = make_generator(seed)
    except ValueError as e:
        raise PermutationError(str(e)) from e

    d = spec.distance
    transpositions: list[tuple[int, int]] = []
    for p in range(spec.height * spec.width):
        r, c = divmod(p, spec.width)
        qr = int(rng.integers(max(0, r - d), min(spec.height - 1, r + d) + 1))
        qc = int(rng.integers(max(0, c - d), min(spec.width - 1, c + d) + 1))
        transpositions.append((p, qr * spec.width + qc))
    return transpositions


def make_local_swap_permutation(spec: LocalSwapSpec, seed: int) -> Permutation:
    """
    Compose the local swap scan into a single permutation.

    The occupants of p and q are transposed, so a pixel can be moved several
    times and travel further than D in total.
    """
    size = spec.height * spec.width
    occupant = np.arange(size, dtype=np.int64)
    for p, q in local_swap_transpositions(spec, seed):
        occupant[p], occupant[q] = occupant[q], occupant[p]

    dest = np.empty(size, dtype=np.int64)
    dest[occupant] = np.arange(size, dtype=np.int64)
    return Permutation(
        scheme=PermutationScheme.LOCAL,
        parameters={"distance": spec.distance},
        seed=seed,
        size=size,
        dest=dest,
    )


def _derived(dest: np.ndarray, parameters: dict[str, object]) -> Permutation:
    if np.array_equal(dest, np.arange(dest.size)):
        return identity_permutation(int(dest.size))
    return Permutation(
        scheme=PermutationScheme.COMPOSITE, parameters=parameters, size=int(dest.size), dest=dest
    )


def invert(p: Permutation) -> Permutation:
    """Inverse permutation: invert(p) applied after p restores the image."""
    dest = p.as_array()
    inverse = np.empty_like(dest)
    inverse[dest] = np.arange(p.size, dtype=np.int64)
    return _derived(inverse, {"inverse_of": p.describe(), "seed": p.seed})


def compose(p: Permutation, q: Permutation) -> Permutation:
    """
    Permutation equivalent to applying p and then q.

    Raises:
        PermutationError: If the sizes differ
    """
    if p.size != q.size:
        raise PermutationError(f"cannot compose permutations of sizes {p.size} and {q.size}")
    dest = q.as_array()[p.as_array()]
    return _derived(dest, {"first": p.describe(), "then": q.describe()})


def apply_permutation(image: np.ndarray, p: Permutation) -> np.ndarray:
    """
    Move every pixel i of an (..., H, W, C) grid to position dest[i].

    Leading dimensions are treated as a batch, so a whole dataset is permuted
    in one call. Every channel receives the same permutation.

    Raises:
        PermutationError: If p.size differs from H*W
    """
    if image.ndim < 3:
        raise PermutationError(f"expected an (..., H, W, C) grid, got shape {image.shape}")
    *lead, height, width, channels = image.shape
    if p.size != height * width:
        raise PermutationError(
            f"permutation size {p.size} does not match image plane {height}x{width}"
        )
    flat = image.reshape(*lead, height * width, channels)
    out = np.empty_like(flat)
    out[..., p.as_array(), :] = flat
    return out.reshape(image.shape)


def select_channel(image: np.ndarray, channel: int) -> np.ndarray:
    """
    Copy a single channel out of an (..., H, W, C) grid, keeping a C=1 axis.

    Raises:
        PermutationError: If the channel index is out of range
    """
    channels = image.shape[-1]
    if not 0 <= channel < channels:
        raise PermutationError(f"channel {channel} out of range for {channels} channel(s)")
    return image[..., channel : channel + 1].copy()


def displacement_stats(p: Permutation, width: int, radius: int = 0) -> DisplacementStats:
    """
    Summarise how far pixels travel under p on a grid of the given width.

    beyond_radius_fraction is the share of pixels displaced by more than
    `radius` in Chebyshev distance.
    """
    if p.size % width != 0:
        raise PermutationError(f"size {p.size} is not a multiple of width {width}")
    src = np.arange(p.size)
    src_r, src_c = np.divmod(src, width)
    dst_r, dst_c = np.divmod(p.as_array(), width)
    distance = np.maximum(np.abs(src_r - dst_r), np.abs(src_c - dst_c))
    return DisplacementStats(
        max_distance=int(distance.max()),
        mean_distance=float(distance.mean()),
        moved_fraction=float((distance > 0).mean()),
        beyond_radius_fraction=float((distance > radius).mean()),
    )


def permutation_document(p: Permutation) -> dict[str, object]:
    """Canonical JSON document {scheme, parameters, seed, size, dest}."""
    return p.model_dump(mode="json")


def permutation_hash(p: Permutation) -> str:
    """SHA-256 of the canonical JSON document."""
    payload = json.dumps(permutation_document(p), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_permutation(p: Permutation, path: Path) -> Path:
    """Write the permutation JSON document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(permutation_document(p)), encoding="utf-8")
    logger.debug("Permutation written", path=str(path), scheme=p.describe(), size=p.size)
    return path


def load_permutation(path: Path) -> Permutation:
    """
    Read a permutation JSON document.

    Raises:
        PermutationError: If the document is not a valid permutation
    """
    try:
        return Permutation.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValueError as e:
        raise PermutationError(f"invalid permutation document {path}: {e}") from e


def build_permutation(
    scheme: str,
    height: int,
    width: int,
    seed: int,
    patch_side: int | None = None,
    distance: int | None = None,
) -> Permutation:
    """
    Build a permutation from a randomization tag as used in run configs.

    Args:
        scheme: One of none, pixel, patch, local
        height: Image height in pixels
        width: Image width in pixels
        seed: Construction seed
        patch_side: Patch edge for the patch scheme
        distance: Radius for the local scheme

    Raises:
        PermutationError: For unknown schemes or missing/invalid parameters
    """
    size = height * width
    try:
        if scheme == "none":
            return identity_permutation(size)
        if scheme == "pixel":
            return make_full_permutation(size, seed)
        if scheme == "patch":
            if patch_side is None:
                raise PermutationError("patch randomization requires patch_side")
            if height != width:
                raise PermutationError(f"patch randomization needs square images, got {height}x{width}")
            return make_patch_permutation(PatchSpec(side=height, patch_side=patch_side), seed)
        if scheme == "local":
            if distance is None:
                raise PermutationError("local randomization requires distance")
            return make_local_swap_permutation(
                LocalSwapSpec(height=height, width=width, distance=distance), seed
            )
    except PermutationError:
        raise
    except ValueError as e:
        raise PermutationError(str(e)) from e
    raise PermutationError(f"unknown randomization scheme '{scheme}'")
