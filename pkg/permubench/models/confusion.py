"""Confusion matrix model."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class ConfusionMatrix(BaseModel):
    """
    K x K prediction counts; entry (i, j) counts examples of true class i
    predicted as class j.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    counts: tuple[tuple[int, ...], ...] = Field(description="Row = true class, column = prediction")
    class_names: tuple[str, ...]

    @model_validator(mode="after")
    def validate_counts(self) -> "ConfusionMatrix":
        """Validate the matrix is K x K with non-negative counts."""
        k = len(self.class_names)
        if k == 0:
            raise ValueError("class_names must not be empty")
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValueError(f"counts must be a {k}x{k} matrix")
        if any(value < 0 for row in self.counts for value in row):
            raise ValueError("counts must be non-negative")
        return self

    @classmethod
    def from_array(cls, counts: np.ndarray, class_names: tuple[str, ...]) -> "ConfusionMatrix":
        return cls(counts=tuple(tuple(int(v) for v in row) for row in counts), class_names=class_names)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def as_array(self) -> np.ndarray:
        """Counts as an int64 (K, K) array."""
        return np.asarray(self.counts, dtype=np.int64).reshape(self.num_classes, self.num_classes)

    def total(self) -> int:
        return int(self.as_array().sum())

    def row_sums(self) -> np.ndarray:
        """Number of examples of every true class."""
        return self.as_array().sum(axis=1)

    def accuracy(self) -> float:
        """Fraction of examples on the diagonal; 0.0 for an empty matrix."""
        total = self.total()
        return float(np.trace(self.as_array()) / total) if total else 0.0

    def normalized(self) -> np.ndarray:
        """
        Row-normalized matrix: prediction fractions per true class.

        Rows of classes without examples stay all zero.
        """
        counts = self.as_array().astype(np.float64)
        sums = counts.sum(axis=1, keepdims=True)
        return np.divide(counts, sums, out=np.zeros_like(counts), where=sums > 0)

    def per_class_accuracy(self) -> np.ndarray:
        """Diagonal of the normalized matrix; NaN for classes without examples."""
        counts = self.as_array()
        sums = counts.sum(axis=1)
        result = np.full(self.num_classes, np.nan)
        np.divide(np.diag(counts), sums, out=result, where=sums > 0)
        return result

    def top_confusions(self, k: int = 5) -> list[tuple[str, str, int]]:
        """
        The k largest off-diagonal counts as (true name, predicted name, count).

        Ties are ordered by true class, then predicted class.
        """
        counts = self.as_array()
        cells = [
            (int(counts[i, j]), i, j)
            for i in range(self.num_classes)
            for j in range(self.num_classes)
            if i != j and counts[i, j] > 0
        ]
        cells.sort(key=lambda cell: (-cell[0], cell[1], cell[2]))
        return [(self.class_names[i], self.class_names[j], count) for count, i, j in cells[:k]]
