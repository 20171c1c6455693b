"""
Unit tests for layer descriptors and architecture builders.

Tests shape arithmetic of every layer kind and the geometry rules of the
compared architectures.
"""

import pytest
from pydantic import ValidationError

from permubench.models.architecture import (
    ArchitectureError,
    ArchitectureName,
    ModelSpec,
    build_cnn_dilated,
    build_cnn_vgg,
    build_cnn_wide,
    build_mlp_deep,
    build_mlp_head,
    build_model,
)
from permubench.models.layers import (
    ConvSpec,
    DenseSpec,
    FlattenSpec,
    MaxPoolSpec,
    Padding,
    ReluSpec,
    ShapeError,
)


class TestConvSpec:
    """Test cases for convolution geometry."""

    def test_same_padding_keeps_size(self):
        spec = ConvSpec(in_channels=1, out_channels=4, kernel=(3, 3))

        assert spec.output_shape((28, 28, 1)) == (28, 28, 4)
        assert spec.pad_amounts() == ((1, 1), (1, 1))

    def test_same_padding_even_kernel_extra_pixel_bottom_right(self):
        """Test the odd padding pixel goes to the bottom/right."""
        spec = ConvSpec(in_channels=1, out_channels=1, kernel=(4, 4))

        assert spec.pad_amounts() == ((1, 2), (1, 2))
        assert spec.output_shape((6, 6, 1)) == (6, 6, 1)

    def test_valid_dilated_extent(self):
        """Test a 4x4 kernel with dilation 4 covers 13 pixels."""
        spec = ConvSpec(in_channels=3, out_channels=64, kernel=(4, 4), dilation=4, padding=Padding.VALID)

        assert spec.effective_kernel == (13, 13)
        assert spec.output_shape((32, 32, 3)) == (20, 20, 64)

    def test_valid_strided(self):
        spec = ConvSpec(in_channels=1, out_channels=64, kernel=(8, 8), stride=4, padding=Padding.VALID)

        assert spec.output_shape((28, 28, 1)) == (6, 6, 64)
        assert spec.weight_shape == (8, 8, 1, 64)

    def test_same_padding_requires_stride_one(self):
        with pytest.raises(ValidationError, match="stride 1"):
            ConvSpec(in_channels=1, out_channels=1, kernel=(3, 3), stride=2)

    def test_kernel_must_fit(self):
        """Test a kernel larger than the input raises ShapeError with both shapes."""
        spec = ConvSpec(in_channels=1, out_channels=1, kernel=(4, 4), dilation=4, padding=Padding.VALID)

        with pytest.raises(ShapeError, match=r"got shape \(8, 8, 1\)"):
            spec.output_shape((8, 8, 1))

    def test_channel_mismatch(self):
        spec = ConvSpec(in_channels=3, out_channels=1, kernel=(3, 3))

        with pytest.raises(ShapeError, match="channels mismatch"):
            spec.output_shape((8, 8, 1))


class TestOtherLayers:
    """Test cases for pooling, activation, flatten and dense descriptors."""

    def test_maxpool_floors_odd_sizes(self):
        assert MaxPoolSpec().output_shape((7, 7, 128)) == (3, 3, 128)

    def test_maxpool_needs_two_pixels(self):
        with pytest.raises(ShapeError):
            MaxPoolSpec().output_shape((1, 4, 1))

    def test_relu_and_flatten(self):
        assert ReluSpec().output_shape((3, 3, 2)) == (3, 3, 2)
        assert FlattenSpec().output_shape((3, 3, 2)) == (18,)

    def test_dense_needs_flat_input(self):
        assert DenseSpec(units=5).output_shape((18,)) == (5,)
        with pytest.raises(ShapeError):
            DenseSpec(units=5).output_shape((3, 3, 2))


class TestBuilders:
    """Test cases for architecture builders."""

    def test_cnn_vgg_28(self):
        """Test the VGG-style stack on 28-pixel grey images."""
        spec = build_cnn_vgg((28, 28, 1), 10)
        convs = [layer for layer in spec.layers if isinstance(layer, ConvSpec)]

        assert spec.name == ArchitectureName.CNN_VGG
        assert [c.out_channels for c in convs] == [32, 32, 64, 64, 128, 128]
        assert all(c.kernel == (3, 3) and c.padding == Padding.SAME for c in convs)
        assert spec.output_shapes()[spec.head_index()] == (3 * 3 * 128,)
        assert spec.output_shapes()[-1] == (10,)

    def test_cnn_vgg_32(self):
        spec = build_cnn_vgg((32, 32, 3), 10)

        assert spec.output_shapes()[spec.head_index()] == (4 * 4 * 128,)

    def test_cnn_vgg_rejects_other_sizes(self):
        with pytest.raises(ArchitectureError, match="28"):
            build_cnn_vgg((16, 16, 1), 10)

    def test_mlp_head_matches_cnn_head(self):
        """Test the MLP is the CNN's dense head applied to the flattened image."""
        cnn = build_cnn_vgg((28, 28, 1), 10)
        mlp = build_mlp_head((28, 28, 1), 10)

        assert mlp.layers == cnn.layers[cnn.head_index() :]
        assert mlp.parameter_count() == 784 * 512 + 512 + 512 * 512 + 512 + 512 * 10 + 10

    def test_cnn_dilated_two_layers(self):
        """Test two dilated layers shrink the side by 12 pixels each."""
        spec = build_cnn_dilated((32, 32, 3), 10)
        convs = [layer for layer in spec.layers if isinstance(layer, ConvSpec)]

        assert len(convs) == 2
        assert all(c.dilation == 4 and c.kernel == (4, 4) and c.out_channels == 64 for c in convs)
        assert spec.output_shapes()[spec.head_index()] == (8 * 8 * 64,)

    def test_cnn_dilated_rejects_layer_that_no_longer_fits(self):
        """Test a third dilated layer is rejected on 28-pixel images (4 pixels remain)."""
        build_cnn_dilated((28, 28, 1), 10, num_layers=2)

        with pytest.raises(ArchitectureError, match="dilated layer 3"):
            build_cnn_dilated((28, 28, 1), 10, num_layers=3)

    def test_cnn_wide(self):
        spec = build_cnn_wide((32, 32, 3), 10)

        assert spec.output_shapes()[0] == (7, 7, 64)

    def test_cnn_wide_rejects_small_images(self):
        with pytest.raises(ArchitectureError):
            build_cnn_wide((4, 4, 1), 10)

    def test_mlp_deep(self):
        spec = build_mlp_deep((8, 8, 1), 10, depth=3, width=32)
        dense = [layer for layer in spec.layers if isinstance(layer, DenseSpec)]

        assert [d.units for d in dense] == [32, 32, 32, 10]

    def test_mlp_deep_rejects_zero_depth(self):
        with pytest.raises(ArchitectureError):
            build_mlp_deep((8, 8, 1), 10, depth=0)

    def test_build_model_dispatch(self):
        """Test every tag dispatches to its builder and forwards options."""
        assert build_model("cnn_vgg", (28, 28, 1), 10).name == ArchitectureName.CNN_VGG
        assert build_model("mlp_head", (28, 28, 1), 10).name == ArchitectureName.MLP_HEAD
        assert build_model("cnn_wide", (28, 28, 1), 10).name == ArchitectureName.CNN_WIDE
        assert build_model("cnn_dilated", (28, 28, 1), 10, num_layers=1).name == ArchitectureName.CNN_DILATED
        deep = build_model("mlp_deep", (4, 4, 1), 3, depth=1, width=8)
        assert deep.parameter_count() == 16 * 8 + 8 + 8 * 3 + 3

    @pytest.mark.parametrize(
        ("name", "options"),
        [
            ("cnn_vgg", {"width": 8}),
            ("mlp_head", {"depth": 2}),
            ("cnn_wide", {"num_layers": 1}),
            ("cnn_dilated", {"depth": 1}),
            ("mlp_deep", {"num_layers": 1}),
        ],
    )
    def test_build_model_rejects_unknown_options(self, name, options):
        with pytest.raises(ArchitectureError, match="does not accept options"):
            build_model(name, (28, 28, 1), 10, **options)

    def test_model_spec_rejects_wrong_logit_width(self):
        """Test the final layer width must equal num_classes."""
        with pytest.raises(ValidationError, match="final layer"):
            ModelSpec(
                name=ArchitectureName.MLP_HEAD,
                layers=(FlattenSpec(), DenseSpec(units=5)),
                input_shape=(2, 2, 1),
                num_classes=10,
            )

    def test_model_spec_json_round_trip(self):
        spec = build_cnn_dilated((28, 28, 1), 10)

        assert ModelSpec.model_validate_json(spec.model_dump_json()) == spec
