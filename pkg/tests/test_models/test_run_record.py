"""
Unit tests for the RunRecord model.
"""

import pytest
from pydantic import ValidationError

from permubench.models.run_record import EpochMetrics, RunRecord, RunStatus
from permubench.models.train_config import TrainConfig

DATASET = {"kind": "fashion", "train": ["a", "b"], "test": ["c", "d"]}


def _epochs(*accuracies: float) -> list[EpochMetrics]:
    return [
        EpochMetrics(epoch=i + 1, train_accuracy=acc, test_accuracy=acc, loss=1.0, seconds=0.1)
        for i, acc in enumerate(accuracies)
    ]


class TestRunRecord:
    """Test cases for RunRecord."""

    def test_completed_record_curves(self):
        cfg = TrainConfig(dataset=DATASET, epochs=3)

        record = RunRecord(name="r", config=cfg, epochs=_epochs(0.5, 0.8, 0.7))

        assert record.completed
        assert record.test_curve == [0.5, 0.8, 0.7]
        assert record.peak_test_accuracy == pytest.approx(0.8)
        assert record.final_test_accuracy == pytest.approx(0.7)

    def test_completed_record_needs_every_epoch(self):
        cfg = TrainConfig(dataset=DATASET, epochs=3)

        with pytest.raises(ValidationError, match="3"):
            RunRecord(name="r", config=cfg, epochs=_epochs(0.5, 0.8))

    def test_epoch_numbers_must_be_consecutive(self):
        cfg = TrainConfig(dataset=DATASET, epochs=2)
        epochs = [
            EpochMetrics(epoch=2, train_accuracy=0.1, test_accuracy=0.1, loss=1.0, seconds=0.0),
            EpochMetrics(epoch=1, train_accuracy=0.1, test_accuracy=0.1, loss=1.0, seconds=0.0),
        ]

        with pytest.raises(ValidationError, match="1..epochs"):
            RunRecord(name="r", config=cfg, epochs=epochs)

    def test_accuracy_bounds(self):
        with pytest.raises(ValidationError):
            EpochMetrics(epoch=1, train_accuracy=1.2, test_accuracy=0.1, loss=1.0, seconds=0.0)

    def test_failed_record(self):
        """Test failed records carry the error and the offending field without a curve."""
        cfg = TrainConfig(name="bad", dataset=DATASET, epochs=5)

        record = RunRecord.failed(cfg, "boom", error_field="randomization", sweep_axis="patch_side", sweep_value=5)

        assert record.status == RunStatus.FAILED
        assert not record.completed
        assert record.name == "bad"
        assert record.error_field == "randomization"
        assert record.peak_test_accuracy is None
        assert record.final_test_accuracy is None

    def test_from_file(self, tmp_path):
        cfg = TrainConfig(dataset=DATASET, epochs=1)
        record = RunRecord(name="r", config=cfg, epochs=_epochs(0.25), permutation="full")
        path = tmp_path / "record.json"
        path.write_text(record.model_dump_json())

        loaded = RunRecord.from_file(path)

        assert loaded == record
