"""
Run and sweep configuration models.

A TrainConfig is the JSON document behind `permubench train`; a SweepConfig
wraps one as the base of `permubench sweep` and names the axis that varies.
Unknown keys are rejected so that a misspelled field never silently falls
back to a default.
"""

import json
from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from permubench.config import settings

from .architecture import ArchitectureName
from .dataset import DatasetKind
from .layers import Precision

MAX_SEED = 2**64 - 1


class RandomizationKind(str, Enum):
    """Randomization applied to every train and test image."""

    NONE = "none"
    PIXEL = "pixel"
    PATCH = "patch"
    LOCAL = "local"


class ChannelSelection(str, Enum):
    """Input channels fed to the model."""

    ALL = "all"
    R = "r"
    G = "g"
    B = "b"

    @property
    def index(self) -> int | None:
        """Channel index, or None when every channel is kept."""
        return {"r": 0, "g": 1, "b": 2}.get(self.value)


class DatasetSource(BaseModel):
    """Collection tag plus the files of each split."""

    model_config = ConfigDict(extra="forbid")

    kind: DatasetKind
    train: list[Path] = Field(min_length=1, description="IDX pair, CIFAR batches or one container manifest")
    test: list[Path] = Field(min_length=1)


class RandomizationSpec(BaseModel):
    """Randomization tag with its parameter."""

    model_config = ConfigDict(extra="forbid")

    kind: RandomizationKind = RandomizationKind.NONE
    patch_side: int | None = Field(default=None, ge=1)
    distance: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def validate_parameter(self) -> "RandomizationSpec":
        """Validate that patch and local randomization carry their parameter."""
        if self.kind == RandomizationKind.PATCH and self.patch_side is None:
            raise ValueError("patch randomization requires patch_side")
        if self.kind == RandomizationKind.LOCAL and self.distance is None:
            raise ValueError("local randomization requires distance")
        return self

    def describe(self) -> str:
        if self.kind == RandomizationKind.PATCH:
            return f"patch({self.patch_side})"
        if self.kind == RandomizationKind.LOCAL:
            return f"local({self.distance})"
        return self.kind.value


class TrainConfig(BaseModel):
    """
    Everything that determines a training run.

    Identical configs reproduce identical accuracy curves: the permutation is
    built from perm_seed, weights from init_seed, batch orders from
    shuffle_seed and subsets from subset_seed.
    """

    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="run", min_length=1, pattern=r"^[A-Za-z0-9_.\-]+$")
    dataset: DatasetSource
    randomization: RandomizationSpec = Field(default_factory=RandomizationSpec)
    perm_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    permutation_file: Path | None = Field(
        default=None, description="Stored permutation JSON used instead of building one"
    )
    channels: ChannelSelection = ChannelSelection.ALL
    model: ArchitectureName = ArchitectureName.CNN_VGG
    model_options: dict[str, int] = Field(default_factory=dict)
    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default_factory=lambda: settings.default_batch_size, ge=1)
    base_lr: float = Field(default=1e-4, gt=0)
    decay: float = Field(default=1e-6, ge=0)
    init_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    shuffle_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    shuffle: bool = True
    n_per_class: int | None = Field(default=None, ge=1)
    test_n_per_class: int | None = Field(default=None, ge=1)
    subset_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    precision: Precision = Precision.SINGLE

    @model_validator(mode="after")
    def validate_combination(self) -> "TrainConfig":
        """Validate channel selection against the dataset and the permutation source."""
        if self.channels != ChannelSelection.ALL and self.dataset.kind != DatasetKind.CIFAR10:
            raise ValueError(
                f"channel selection '{self.channels.value}' requires cifar10, "
                f"dataset is {self.dataset.kind.value}"
            )
        if self.permutation_file is not None and self.randomization.kind == RandomizationKind.NONE:
            raise ValueError("permutation_file given but randomization is 'none'")
        return self

    @classmethod
    def from_file(cls, path: Path | str) -> "TrainConfig":
        """Load and validate a run config JSON file."""
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def with_overrides(self, **overrides: Any) -> "TrainConfig":
        """Validated copy with some fields replaced."""
        return TrainConfig.model_validate({**self.model_dump(), **overrides})


class SweepAxis(str, Enum):
    """Config field varied by a sweep."""

    PATCH_SIDE = "patch_side"
    DISTANCE = "distance"
    CHANNEL = "channel"
    MODEL = "model"
    SEED = "seed"


class SweepConfig(BaseModel):
    """A base run config and the values of one axis to sweep."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="sweep", min_length=1, pattern=r"^[A-Za-z0-9_.\-]+$")
    base: TrainConfig
    axis: SweepAxis
    values: list[int | str] = Field(min_length=1)

    @field_validator("values")
    @classmethod
    def validate_unique(cls, v: list[int | str]) -> list[int | str]:
        if len({json.dumps(item) for item in v}) != len(v):
            raise ValueError("sweep values must be distinct")
        return v

    @model_validator(mode="after")
    def validate_value_types(self) -> "SweepConfig":
        """Validate every value has the type its axis expects."""
        for value in self.values:
            if self.axis in (SweepAxis.PATCH_SIDE, SweepAxis.DISTANCE, SweepAxis.SEED):
                if not isinstance(value, int) or value < 0:
                    raise ValueError(f"{self.axis.value} values must be non-negative integers, got {value!r}")
            elif self.axis == SweepAxis.CHANNEL:
                ChannelSelection(value)
            else:
                ArchitectureName(value)
        return self

    @classmethod
    def from_file(cls, path: Path | str) -> "SweepConfig":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def config_for(self, value: int | str) -> TrainConfig:
        """
        The run config of one axis value.

        Raises:
            pydantic.ValidationError: If the value is illegal for the base
                config (e.g. a colour channel on a grey-scale dataset)
        """
        suffix = f"{self.axis.value}{value}"
        name = f"{self.base.name}-{suffix}"
        if self.axis == SweepAxis.PATCH_SIDE:
            return self.base.with_overrides(
                name=name, randomization={"kind": RandomizationKind.PATCH, "patch_side": value}
            )
        if self.axis == SweepAxis.DISTANCE:
            return self.base.with_overrides(
                name=name, randomization={"kind": RandomizationKind.LOCAL, "distance": value}
            )
        if self.axis == SweepAxis.CHANNEL:
            return self.base.with_overrides(name=name, channels=value)
        if self.axis == SweepAxis.MODEL:
            return self.base.with_overrides(name=name, model=value)
        return self.base.with_overrides(name=name, init_seed=value, shuffle_seed=value)
