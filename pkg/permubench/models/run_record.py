"""
Run record model.

One RunRecord is written per training run (record.json). It echoes the
config, holds the per-epoch curve and the final test confusion matrix, and
references the permutation by file and by hash for each split.
"""

from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .confusion import ConfusionMatrix
from .train_config import TrainConfig


class RunStatus(str, Enum):
    COMPLETED = "completed"
    FAILED = "failed"


class EpochMetrics(BaseModel):
    """Metrics of one training epoch."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epoch: int = Field(ge=1)
    train_accuracy: float = Field(ge=0.0, le=1.0)
    test_accuracy: float = Field(ge=0.0, le=1.0)
    loss: float = Field(description="Mean training loss over the epoch")
    seconds: float = Field(ge=0.0, description="Wall-clock time of the epoch")


class RunRecord(BaseModel):
    """Outcome of one training run."""

    model_config = ConfigDict(extra="forbid")

    name: str
    config: TrainConfig
    status: RunStatus = RunStatus.COMPLETED
    sweep_axis: str | None = None
    sweep_value: int | str | None = None
    epochs: list[EpochMetrics] = Field(default_factory=list)
    confusion: ConfusionMatrix | None = None
    permutation: str | None = Field(default=None, description="Scheme tag, e.g. patch(4)")
    permutation_file: str | None = None
    train_permutation_hash: str | None = None
    test_permutation_hash: str | None = None
    error: str | None = None
    error_field: str | None = None
    metadata: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_curve(self) -> "RunRecord":
        """Validate a completed run has one curve entry per configured epoch."""
        if self.status == RunStatus.COMPLETED:
            if len(self.epochs) != self.config.epochs:
                raise ValueError(
                    f"completed run has {len(self.epochs)} epochs, config asks for {self.config.epochs}"
                )
            if [m.epoch for m in self.epochs] != list(range(1, self.config.epochs + 1)):
                raise ValueError("epoch numbers must run 1..epochs")
        return self

    @classmethod
    def failed(
        cls,
        config: TrainConfig,
        error: str,
        error_field: str | None = None,
        sweep_axis: str | None = None,
        sweep_value: int | str | None = None,
    ) -> "RunRecord":
        return cls(
            name=config.name,
            config=config,
            status=RunStatus.FAILED,
            sweep_axis=sweep_axis,
            sweep_value=sweep_value,
            error=error,
            error_field=error_field,
        )

    @classmethod
    def from_file(cls, path: Path | str) -> "RunRecord":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))

    @property
    def completed(self) -> bool:
        return self.status == RunStatus.COMPLETED

    @property
    def test_curve(self) -> list[float]:
        return [m.test_accuracy for m in self.epochs]

    @property
    def train_curve(self) -> list[float]:
        return [m.train_accuracy for m in self.epochs]

    @property
    def peak_test_accuracy(self) -> float | None:
        """Maximum test accuracy over all epochs."""
        return max(self.test_curve) if self.epochs else None

    @property
    def final_test_accuracy(self) -> float | None:
        return self.epochs[-1].test_accuracy if self.epochs else None
