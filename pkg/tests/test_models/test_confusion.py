"""
Unit tests for the ConfusionMatrix model.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from permubench.models.confusion import ConfusionMatrix


@pytest.fixture
def matrix() -> ConfusionMatrix:
    return ConfusionMatrix.from_array(
        np.array([[5, 1, 0], [2, 2, 2], [0, 0, 0]]),
        ("cat", "dog", "bird"),
    )


class TestConfusionMatrix:
    """Test cases for ConfusionMatrix."""

    def test_totals(self, matrix):
        assert matrix.num_classes == 3
        assert matrix.total() == 12
        np.testing.assert_array_equal(matrix.row_sums(), [6, 6, 0])

    def test_accuracy(self, matrix):
        assert matrix.accuracy() == pytest.approx(7 / 12)

    def test_accuracy_of_empty_matrix_is_zero(self):
        empty = ConfusionMatrix.from_array(np.zeros((2, 2)), ("a", "b"))

        assert empty.accuracy() == 0.0

    def test_normalized_rows_sum_to_one(self, matrix):
        """Test rows with examples sum to 1 and empty rows stay zero."""
        norm = matrix.normalized()

        np.testing.assert_allclose(norm.sum(axis=1), [1.0, 1.0, 0.0])
        assert norm[0, 0] == pytest.approx(5 / 6)

    def test_per_class_accuracy_is_nan_for_empty_class(self, matrix):
        acc = matrix.per_class_accuracy()

        assert acc[0] == pytest.approx(5 / 6)
        assert acc[1] == pytest.approx(1 / 3)
        assert np.isnan(acc[2])

    def test_top_confusions_order(self, matrix):
        """Test off-diagonal cells are sorted by count, then true and predicted class."""
        assert matrix.top_confusions(k=3) == [("dog", "cat", 2), ("dog", "bird", 2), ("cat", "dog", 1)]

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError, match="2x2"):
            ConfusionMatrix(counts=((1, 0),), class_names=("a", "b"))

    def test_rejects_negative_counts(self):
        with pytest.raises(ValidationError, match="non-negative"):
            ConfusionMatrix(counts=((1, -1), (0, 0)), class_names=("a", "b"))

    def test_json_round_trip(self, matrix):
        assert ConfusionMatrix.model_validate_json(matrix.model_dump_json()) == matrix
