"""
Post-hoc analysis of finished runs.

Confusion matrices, Pearson correlation of per-class prediction profiles
between two runs (natural vs permuted training), per-class accuracy
deviations and Spearman rank trends over sweeps. Reference values of the
full-scale study are carried as constants for the report.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
import structlog

from permubench.models.confusion import ConfusionMatrix
from permubench.models.dataset import CIFAR10_CLASS_NAMES, DatasetKind

logger = structlog.get_logger("permubench.analysis")

# Peak test accuracy (percent) of the full-scale study, per dataset:
# (CNN natural, CNN permuted, MLP natural, MLP permuted).
REFERENCE_ACCURACY: dict[DatasetKind, tuple[float, float, float, float]] = {
    DatasetKind.MNIST: (99.5, 98.2, 98.7, 98.6),
    DatasetKind.FASHION: (94.3, 89.6, 91.0, 90.9),
    DatasetKind.CIFAR10: (88.9, 57.3, 59.3, 59.3),
}

# Per-class correlation of CIFAR-10 predictions between natural and permuted
# training at full scale, (CNN, MLP).
REFERENCE_PREDICTION_CORRELATION: dict[str, tuple[float, float]] = dict(
    zip(
        CIFAR10_CLASS_NAMES,
        [
            (0.951, 0.862),
            (0.974, 0.995),
            (0.745, 0.974),
            (0.963, 0.960),
            (0.645, 0.902),
            (0.982, 0.983),
            (0.753, 0.916),
            (0.907, 0.926),
            (0.857, 0.967),
            (0.925, 0.992),
        ],
        strict=True,
    )
)
REFERENCE_MEAN_CORRELATION: tuple[float, float] = (0.870, 0.947)


class AnalysisError(ValueError):
    """Raised when an analysis input is invalid."""

    pass


class UndefinedCorrelationError(AnalysisError):
    """Raised when a correlation is undefined because a series has zero variance."""

    pass


@dataclass(frozen=True)
class PredictionCorrelation:
    """
    Per-class prediction correlation between two runs.

    coefficients[j] is None where the coefficient is undefined; those
    classes are listed in `undefined` and left out of `mean`.
    """

    class_names: tuple[str, ...]
    coefficients: tuple[float | None, ...]
    mean: float | None
    undefined: tuple[int, ...]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"class": list(self.class_names), "correlation": list(self.coefficients)})


def confusion(
    preds: Sequence[int] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    num_classes: int,
    class_names: tuple[str, ...] | None = None,
) -> ConfusionMatrix:
    """
    Count (true class, predicted class) pairs.

    Raises:
        AnalysisError: If lengths differ or a class index is outside [0, K)
    """
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise AnalysisError(f"preds {preds.shape} and labels {labels.shape} must be equal-length vectors")
    for name, values in (("prediction", preds), ("label", labels)):
        if values.size and (values.min() < 0 or values.max() >= num_classes):
            raise AnalysisError(f"{name} class index outside [0, {num_classes})")
    names = class_names or tuple(str(k) for k in range(num_classes))
    if len(names) != num_classes:
        raise AnalysisError(f"{len(names)} class names for {num_classes} classes")
    counts = np.bincount(labels * num_classes + preds, minlength=num_classes * num_classes)
    return ConfusionMatrix.from_array(counts.reshape(num_classes, num_classes), names)


def pearson(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """
    Centered product-moment correlation coefficient.

    Raises:
        AnalysisError: If lengths differ or fewer than two values are given
        UndefinedCorrelationError: If either series has zero variance
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise AnalysisError(f"series must be equal-length vectors, got {xs.shape} and {ys.shape}")
    if len(xs) < 2:
        raise AnalysisError("pearson needs at least two values")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined: a series has zero variance")
    r = float(np.dot(dx, dy)) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def prediction_correlation(cm_natural: ConfusionMatrix, cm_permuted: ConfusionMatrix) -> PredictionCorrelation:
    """
    Pearson coefficient of every column of the two row-normalized matrices.

    Column j holds the fraction of each true class predicted as j, so the
    coefficient measures whether both networks send the same classes to j.

    Raises:
        AnalysisError: If the matrices differ in size or class order
    """
    if cm_natural.class_names != cm_permuted.class_names:
        raise AnalysisError("confusion matrices must share class names and order")
    a = cm_natural.normalized()
    b = cm_permuted.normalized()
    coefficients: list[float | None] = []
    undefined: list[int] = []
    for j in range(cm_natural.num_classes):
        try:
            coefficients.append(pearson(a[:, j], b[:, j]))
        except UndefinedCorrelationError:
            coefficients.append(None)
            undefined.append(j)
            logger.warning(
                "Prediction correlation undefined",
                class_index=j,
                class_name=cm_natural.class_names[j],
            )
    defined = [c for c in coefficients if c is not None]
    mean = float(np.mean(defined)) if defined else None
    return PredictionCorrelation(
        class_names=cm_natural.class_names,
        coefficients=tuple(coefficients),
        mean=mean,
        undefined=tuple(undefined),
    )


def per_class_accuracy_delta(cm_a: ConfusionMatrix, cm_b: ConfusionMatrix) -> np.ndarray:
    """Per-class accuracy of b minus that of a (NaN where a class has no examples)."""
    if cm_a.class_names != cm_b.class_names:
        raise AnalysisError("confusion matrices must share class names and order")
    return cm_b.per_class_accuracy() - cm_a.per_class_accuracy()


def spearman(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """
    Spearman rank correlation: Pearson of average ranks (ties share a rank).

    Raises:
        UndefinedCorrelationError: If either series is constant
    """
    xr = pd.Series(np.asarray(x, dtype=np.float64)).rank(method="average")
    yr = pd.Series(np.asarray(y, dtype=np.float64)).rank(method="average")
    return pearson(xr.to_numpy(), yr.to_numpy())
