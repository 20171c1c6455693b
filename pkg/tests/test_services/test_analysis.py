"""
Tests for confusion counting, correlation and trend analysis.
"""

import numpy as np
import pytest

from permubench.models.confusion import ConfusionMatrix
from permubench.models.dataset import CIFAR10_CLASS_NAMES, DatasetKind
from permubench.services.analysis import (
    REFERENCE_ACCURACY,
    REFERENCE_MEAN_CORRELATION,
    REFERENCE_PREDICTION_CORRELATION,
    AnalysisError,
    UndefinedCorrelationError,
    confusion,
    pearson,
    per_class_accuracy_delta,
    prediction_correlation,
    spearman,
)


class TestConfusion:
    """Test cases for confusion()."""

    def test_counts(self):
        cm = confusion([0, 1, 1, 2], [0, 1, 2, 2], 3)

        assert cm.counts == ((1, 0, 0), (0, 1, 0), (0, 1, 1))
        assert cm.class_names == ("0", "1", "2")
        assert cm.total() == 4

    def test_class_names(self):
        cm = confusion([1], [0], 2, ("cat", "dog"))

        assert cm.top_confusions() == [("cat", "dog", 1)]

    def test_empty_input(self):
        assert confusion([], [], 4).total() == 0

    def test_rejects_length_mismatch(self):
        with pytest.raises(AnalysisError, match="equal-length"):
            confusion([0, 1], [0], 2)

    def test_rejects_out_of_range(self):
        with pytest.raises(AnalysisError, match="prediction"):
            confusion([3], [0], 3)
        with pytest.raises(AnalysisError, match="label"):
            confusion([0], [-1], 3)


class TestPearson:
    """Test cases for pearson()."""

    def test_matches_numpy(self):
        rng = np.random.default_rng(0)
        x, y = rng.normal(size=20), rng.normal(size=20)

        assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1])

    def test_perfect_correlations(self):
        assert pearson([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_result_is_clipped(self):
        x = np.array([1e-8, 2e-8, 3e-8]) + 1.0

        assert -1.0 <= pearson(x, x) <= 1.0

    def test_constant_series_is_undefined(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1, 1, 1], [1, 2, 3])

    def test_needs_two_values(self):
        with pytest.raises(AnalysisError):
            pearson([1], [2])

    def test_rejects_length_mismatch(self):
        with pytest.raises(AnalysisError):
            pearson([1, 2], [1, 2, 3])


class TestSpearman:
    """Test cases for spearman()."""

    def test_monotone_relation(self):
        assert spearman([1, 2, 3, 4], [1, 8, 27, 64]) == pytest.approx(1.0)
        assert spearman([1, 2, 3, 4], [0.9, 0.7, 0.5, 0.1]) == pytest.approx(-1.0)

    def test_ties_share_average_rank(self):
        x = [1, 2, 2, 3]
        y = [1, 3, 2, 4]

        expected = np.corrcoef([1, 2.5, 2.5, 4], [1, 3, 2, 4])[0, 1]
        assert spearman(x, y) == pytest.approx(expected)

    def test_constant_series(self):
        with pytest.raises(UndefinedCorrelationError):
            spearman([1, 2, 3], [5, 5, 5])


class TestPredictionCorrelation:
    """Test cases for prediction_correlation()."""

    def test_identical_matrices(self):
        cm = ConfusionMatrix.from_array(np.array([[5, 1, 1], [1, 4, 2], [0, 2, 3]]), ("a", "b", "c"))

        result = prediction_correlation(cm, cm)

        assert result.coefficients == pytest.approx((1.0, 1.0, 1.0))
        assert result.mean == pytest.approx(1.0)
        assert result.undefined == ()

    def test_never_predicted_class_is_undefined(self):
        """Test a zero column yields None and is excluded from the mean."""
        natural = ConfusionMatrix.from_array(np.array([[5, 1, 0], [1, 5, 0], [2, 3, 0]]), ("a", "b", "c"))
        permuted = ConfusionMatrix.from_array(np.array([[4, 2, 0], [2, 4, 0], [1, 4, 0]]), ("a", "b", "c"))

        result = prediction_correlation(natural, permuted)

        assert result.coefficients[2] is None
        assert result.undefined == (2,)
        defined = [c for c in result.coefficients if c is not None]
        assert result.mean == pytest.approx(np.mean(defined))

    def test_uses_row_normalized_columns(self):
        """Test scaling a row of counts does not change the coefficients."""
        counts = np.array([[5, 1, 1], [1, 4, 2], [0, 2, 3]])
        scaled = counts * np.array([[10], [1], [3]])
        names = ("a", "b", "c")

        result = prediction_correlation(
            ConfusionMatrix.from_array(counts, names), ConfusionMatrix.from_array(scaled, names)
        )

        assert result.mean == pytest.approx(1.0)

    def test_to_frame(self):
        cm = ConfusionMatrix.from_array(np.array([[2, 1], [1, 2]]), ("x", "y"))

        frame = prediction_correlation(cm, cm).to_frame()

        assert list(frame.columns) == ["class", "correlation"]
        assert frame["class"].tolist() == ["x", "y"]

    def test_rejects_class_mismatch(self):
        a = ConfusionMatrix.from_array(np.eye(2, dtype=int), ("x", "y"))
        b = ConfusionMatrix.from_array(np.eye(2, dtype=int), ("y", "x"))

        with pytest.raises(AnalysisError):
            prediction_correlation(a, b)


class TestAccuracyDelta:
    """Test cases for per_class_accuracy_delta()."""

    def test_delta(self):
        a = ConfusionMatrix.from_array(np.array([[4, 0], [2, 2]]), ("x", "y"))
        b = ConfusionMatrix.from_array(np.array([[2, 2], [0, 4]]), ("x", "y"))

        np.testing.assert_allclose(per_class_accuracy_delta(a, b), [-0.5, 0.5])


class TestReferenceValues:
    """Test cases for the bundled reference tables."""

    def test_accuracy_table_covers_every_dataset(self):
        assert set(REFERENCE_ACCURACY) == set(DatasetKind)
        assert REFERENCE_ACCURACY[DatasetKind.CIFAR10][0] == pytest.approx(88.9)

    def test_correlation_means(self):
        """Test the per-class reference values average to the reference means."""
        cnn = np.mean([REFERENCE_PREDICTION_CORRELATION[name][0] for name in CIFAR10_CLASS_NAMES])
        mlp = np.mean([REFERENCE_PREDICTION_CORRELATION[name][1] for name in CIFAR10_CLASS_NAMES])

        assert cnn == pytest.approx(REFERENCE_MEAN_CORRELATION[0], abs=1e-3)
        assert mlp == pytest.approx(REFERENCE_MEAN_CORRELATION[1], abs=1e-3)
