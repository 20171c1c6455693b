"""
Tests for checkpoint save/load.
"""

import json

import numpy as np
import pytest

from permubench.models.architecture import build_cnn_wide, build_mlp_deep
from permubench.models.layers import Precision
from permubench.nn import CheckpointError, Network, load_checkpoint, save_checkpoint
from permubench.nn.checkpoint import BLOB_NAME, MANIFEST_NAME


class TestCheckpoint:
    """Test cases for checkpoint directories."""

    def test_round_trip_reproduces_logits(self, tmp_path):
        net = Network(build_cnn_wide((12, 12, 1), 10), init_seed=4)
        x = np.random.default_rng(0).random((3, 12, 12, 1)).astype(np.float32)

        save_checkpoint(net, tmp_path / "ckpt", metadata={"run": "a"})
        loaded, manifest = load_checkpoint(tmp_path / "ckpt")

        np.testing.assert_array_equal(loaded.forward(x), net.forward(x))
        assert manifest.metadata == {"run": "a"}
        assert manifest.model_spec == net.spec
        assert manifest.init_seed == 4

    def test_blob_layout(self, tmp_path):
        """Test parameters are stored as consecutive little-endian float32 values."""
        net = Network(build_mlp_deep((2, 2, 1), 2, depth=1, width=3))

        save_checkpoint(net, tmp_path)
        manifest = json.loads((tmp_path / MANIFEST_NAME).read_text())
        blob = (tmp_path / BLOB_NAME).read_bytes()

        assert manifest["blob_dtype"] == "<f4"
        assert len(blob) == net.parameter_count() * 4
        first = manifest["parameters"][0]
        assert first["name"] == "layer1.weight"
        assert first["offset"] == 0
        np.testing.assert_array_equal(
            np.frombuffer(blob, dtype="<f4")[: first["count"]].reshape(first["shape"]), net.params["layer1.weight"]
        )

    def test_double_precision_blob(self, tmp_path):
        net = Network(build_mlp_deep((2, 2, 1), 2, depth=1, width=3), precision=Precision.DOUBLE)

        save_checkpoint(net, tmp_path)
        loaded, manifest = load_checkpoint(tmp_path)

        assert manifest.blob_dtype == "<f8"
        assert loaded.params["layer1.weight"].dtype == np.float64

    def test_truncated_blob(self, tmp_path):
        net = Network(build_mlp_deep((2, 2, 1), 2, depth=1, width=3))
        save_checkpoint(net, tmp_path)
        blob = tmp_path / BLOB_NAME
        blob.write_bytes(blob.read_bytes()[:-4])

        with pytest.raises(CheckpointError, match="manifest lists"):
            load_checkpoint(tmp_path)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(CheckpointError, match="cannot read"):
            load_checkpoint(tmp_path / "absent")
