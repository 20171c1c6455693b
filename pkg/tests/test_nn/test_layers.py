"""
Tests for the layer forward/backward passes.

Convolutions are checked against a direct loop implementation and every
backward pass against central finite differences in double precision.
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hyp_settings
from hypothesis import strategies as st

from permubench.models.layers import ConvSpec, Padding, ShapeError
from permubench.nn.layers import (
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    flatten,
    maxpool2x2_backward,
    maxpool2x2_forward,
    relu_backward,
    relu_forward,
)

EPS = 1e-6


def reference_conv(x, spec, weights, bias):
    """Direct loop cross-correlation."""
    (top, bottom), (left, right) = spec.pad_amounts()
    padded = np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0)))
    out_h, out_w, cout = spec.output_shape(x.shape[1:])
    kh, kw = spec.kernel
    out = np.zeros((x.shape[0], out_h, out_w, cout))
    for n in range(x.shape[0]):
        for y in range(out_h):
            for xx in range(out_w):
                for i in range(kh):
                    for j in range(kw):
                        pixel = padded[n, y * spec.stride + i * spec.dilation, xx * spec.stride + j * spec.dilation]
                        out[n, y, xx] += pixel @ weights[i, j]
    return out + bias


def numeric_gradient(f, value):
    """Central differences of the scalar f() w.r.t. every entry of value (modified in place)."""
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        original = value[index]
        value[index] = original + EPS
        plus = f()
        value[index] = original - EPS
        minus = f()
        value[index] = original
        grad[index] = (plus - minus) / (2 * EPS)
    return grad


def relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


CONV_CASES = [
    ConvSpec(in_channels=2, out_channels=3, kernel=(3, 3)),
    ConvSpec(in_channels=2, out_channels=3, kernel=(2, 2)),
    ConvSpec(in_channels=2, out_channels=2, kernel=(2, 2), dilation=2, padding=Padding.SAME),
    ConvSpec(in_channels=2, out_channels=2, kernel=(2, 2), dilation=2, padding=Padding.VALID),
    ConvSpec(in_channels=2, out_channels=2, kernel=(3, 3), stride=2, padding=Padding.VALID),
]


class TestConv2d:
    """Test cases for the im2col convolution."""

    @pytest.mark.parametrize("spec", CONV_CASES)
    def test_matches_direct_loops(self, spec):
        rng = np.random.default_rng(0)
        x = rng.uniform(-0.5, 0.5, size=(2, 6, 6, spec.in_channels))
        weights = rng.normal(size=spec.weight_shape)
        bias = rng.normal(size=spec.out_channels)

        out, _ = conv2d_forward(x, spec, weights, bias)

        np.testing.assert_allclose(out, reference_conv(x, spec, weights, bias), atol=1e-10)

    def test_dilated_same_padding_oracle(self):
        """Test a dilated 2x2 kernel with same padding against hand-computed taps."""
        spec = ConvSpec(in_channels=1, out_channels=1, kernel=(2, 2), dilation=2)
        x = np.arange(36, dtype=np.float64).reshape(1, 6, 6, 1) / 36.0 - 0.5
        weights = np.zeros(spec.weight_shape)
        weights[1, 1, 0, 0] = 1.0

        out, _ = conv2d_forward(x, spec, weights, np.zeros(1))

        # extent 3 pads one pixel on every side; tap (1, 1) reads (y + 1, x + 1)
        assert out.shape == (1, 6, 6, 1)
        np.testing.assert_allclose(out[0, :5, :5, 0], x[0, 1:, 1:, 0])
        np.testing.assert_allclose(out[0, 5, :, 0], 0.0)

    @pytest.mark.parametrize("case", range(100))
    def test_dilation_equals_zero_stuffed_kernel(self, case):
        """Test dilation d equals a plain convolution whose kernel has d - 1 zeros between taps."""
        rng = np.random.default_rng(case)
        k = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        padding = Padding.SAME if case % 2 else Padding.VALID
        side = (k - 1) * d + 1 + int(rng.integers(0, 4))
        cin, cout = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        dilated = ConvSpec(in_channels=cin, out_channels=cout, kernel=(k, k), dilation=d, padding=padding)
        extent = (k - 1) * d + 1
        plain = ConvSpec(in_channels=cin, out_channels=cout, kernel=(extent, extent), padding=padding)
        x = rng.uniform(-0.5, 0.5, size=(1, side, side, cin))
        weights = rng.normal(size=dilated.weight_shape)
        stuffed = np.zeros(plain.weight_shape)
        stuffed[::d, ::d] = weights
        bias = rng.normal(size=cout)

        out_dilated, _ = conv2d_forward(x, dilated, weights, bias)
        out_plain, _ = conv2d_forward(x, plain, stuffed, bias)

        np.testing.assert_allclose(out_dilated, out_plain, atol=1e-10)
        single, _ = conv2d_forward(
            x.astype(np.float32), dilated, weights.astype(np.float32), bias.astype(np.float32)
        )
        np.testing.assert_allclose(single, out_plain, atol=1e-5)

    def test_single_pixel_kernel_is_pointwise(self):
        spec = ConvSpec(in_channels=3, out_channels=2, kernel=(1, 1))
        rng = np.random.default_rng(1)
        x = rng.normal(size=(1, 4, 4, 3))
        weights = rng.normal(size=(1, 1, 3, 2))

        out, _ = conv2d_forward(x, spec, weights, np.zeros(2))

        np.testing.assert_allclose(out, x @ weights[0, 0])

    @pytest.mark.parametrize("spec", CONV_CASES)
    def test_gradients(self, spec):
        rng = np.random.default_rng(2)
        x = rng.uniform(-0.5, 0.5, size=(2, 6, 6, spec.in_channels))
        weights = rng.normal(size=spec.weight_shape)
        bias = rng.normal(size=spec.out_channels)
        out, cache = conv2d_forward(x, spec, weights, bias)
        upstream = rng.normal(size=out.shape)

        def loss():
            return float((conv2d_forward(x, spec, weights, bias)[0] * upstream).sum())

        grad_x, grad_w, grad_b = conv2d_backward(upstream, cache)

        assert relative_error(grad_x, numeric_gradient(loss, x)) < 1e-6
        assert relative_error(grad_w, numeric_gradient(loss, weights)) < 1e-6
        assert relative_error(grad_b, numeric_gradient(loss, bias)) < 1e-6

    def test_rejects_wrong_weights(self):
        spec = ConvSpec(in_channels=1, out_channels=2, kernel=(3, 3))

        with pytest.raises(ShapeError, match="conv weights"):
            conv2d_forward(np.zeros((1, 4, 4, 1)), spec, np.zeros((3, 3, 1, 3)), np.zeros(2))

    def test_rejects_wrong_upstream(self):
        spec = ConvSpec(in_channels=1, out_channels=1, kernel=(3, 3))
        _, cache = conv2d_forward(np.zeros((1, 4, 4, 1)), spec, np.zeros((3, 3, 1, 1)), np.zeros(1))

        with pytest.raises(ShapeError):
            conv2d_backward(np.zeros((1, 3, 3, 1)), cache)


class TestDense:
    """Test cases for the dense layer."""

    def test_forward(self):
        out, _ = dense_forward(np.array([[1.0, 2.0]]), np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]), np.ones(3))

        np.testing.assert_allclose(out, [[2.0, 3.0, 4.0]])

    def test_gradients(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(4, 5))
        weights = rng.normal(size=(5, 3))
        bias = rng.normal(size=3)
        _, cache = dense_forward(x, weights, bias)
        upstream = rng.normal(size=(4, 3))

        def loss():
            return float((dense_forward(x, weights, bias)[0] * upstream).sum())

        grad_x, grad_w, grad_b = dense_backward(upstream, cache)

        assert relative_error(grad_x, numeric_gradient(loss, x)) < 1e-7
        assert relative_error(grad_w, numeric_gradient(loss, weights)) < 1e-7
        assert relative_error(grad_b, numeric_gradient(loss, bias)) < 1e-7

    def test_rejects_width_mismatch(self):
        with pytest.raises(ShapeError):
            dense_forward(np.zeros((2, 4)), np.zeros((5, 3)), np.zeros(3))


class TestReluAndFlatten:
    """Test cases for ReLU and flattening."""

    def test_relu_gradient_is_zero_at_zero(self):
        x = np.array([[-1.0, 0.0, 2.0]])
        out, mask = relu_forward(x)

        np.testing.assert_array_equal(out, [[0.0, 0.0, 2.0]])
        np.testing.assert_array_equal(relu_backward(np.ones_like(x), mask), [[0.0, 0.0, 1.0]])

    def test_flatten_is_row_major_hwc(self):
        x = np.arange(2 * 2 * 2 * 3).reshape(2, 2, 2, 3)

        flat = flatten(x)

        assert flat.shape == (2, 12)
        assert flat[0, 3] == x[0, 0, 1, 0]


class TestMaxPool:
    """Test cases for 2x2 max pooling."""

    def test_forward_drops_odd_border(self):
        x = np.arange(25, dtype=np.float64).reshape(1, 5, 5, 1)

        out, _ = maxpool2x2_forward(x)

        np.testing.assert_array_equal(out[0, :, :, 0], [[6.0, 8.0], [16.0, 18.0]])

    def test_tie_routes_gradient_to_first_maximum(self):
        """Test equal values send the whole gradient to the top-left position."""
        x = np.ones((1, 2, 2, 1))
        _, cache = maxpool2x2_forward(x)

        grad = maxpool2x2_backward(np.full((1, 1, 1, 1), 3.0), cache)

        np.testing.assert_array_equal(grad[0, :, :, 0], [[3.0, 0.0], [0.0, 0.0]])

    def test_gradients(self):
        rng = np.random.default_rng(4)
        x = rng.permutation(2 * 5 * 4 * 3).astype(np.float64).reshape(2, 5, 4, 3)
        _, cache = maxpool2x2_forward(x)
        upstream = rng.normal(size=(2, 2, 2, 3))

        def loss():
            return float((maxpool2x2_forward(x)[0] * upstream).sum())

        grad = maxpool2x2_backward(upstream, cache)

        np.testing.assert_allclose(grad, numeric_gradient(loss, x), atol=1e-6)
        assert np.all(grad[:, 4, :, :] == 0)

    def test_rejects_small_input(self):
        with pytest.raises(ShapeError):
            maxpool2x2_forward(np.zeros((1, 1, 4, 1)))


@st.composite
def conv_geometry(draw):
    """Small random conv layer plus a batch shape it accepts."""
    k = draw(st.integers(min_value=1, max_value=3))
    dilation = draw(st.integers(min_value=1, max_value=2))
    stride = draw(st.integers(min_value=1, max_value=2))
    padding = Padding.SAME if stride == 1 and draw(st.booleans()) else Padding.VALID
    spec = ConvSpec(
        in_channels=draw(st.integers(min_value=1, max_value=2)),
        out_channels=draw(st.integers(min_value=1, max_value=2)),
        kernel=(k, k),
        stride=stride,
        dilation=dilation,
        padding=padding,
    )
    extent = (k - 1) * dilation + 1
    height = draw(st.integers(min_value=extent, max_value=extent + 3))
    width = draw(st.integers(min_value=extent, max_value=extent + 3))
    batch = draw(st.integers(min_value=1, max_value=2))
    return spec, (batch, height, width, spec.in_channels)


class TestRandomizedGradients:
    """Finite-difference checks over randomized small shapes."""

    @given(geometry=conv_geometry(), seed=st.integers(min_value=0, max_value=2**32 - 1))
    @hyp_settings(max_examples=50, deadline=None)
    def test_conv(self, geometry, seed):
        spec, shape = geometry
        rng = np.random.default_rng(seed)
        x = rng.uniform(-0.5, 0.5, size=shape)
        weights = rng.normal(size=spec.weight_shape)
        bias = rng.normal(size=spec.out_channels)
        out, cache = conv2d_forward(x, spec, weights, bias)
        upstream = rng.normal(size=out.shape)

        def loss():
            return float((conv2d_forward(x, spec, weights, bias)[0] * upstream).sum())

        grad_x, grad_w, grad_b = conv2d_backward(upstream, cache)

        assert relative_error(grad_x, numeric_gradient(loss, x)) < 1e-6
        assert relative_error(grad_w, numeric_gradient(loss, weights)) < 1e-6
        assert relative_error(grad_b, numeric_gradient(loss, bias)) < 1e-6

    @given(
        batch=st.integers(min_value=1, max_value=4),
        fan_in=st.integers(min_value=1, max_value=8),
        fan_out=st.integers(min_value=1, max_value=8),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    @hyp_settings(max_examples=50, deadline=None)
    def test_dense(self, batch, fan_in, fan_out, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(batch, fan_in))
        weights = rng.normal(size=(fan_in, fan_out))
        bias = rng.normal(size=fan_out)
        _, cache = dense_forward(x, weights, bias)
        upstream = rng.normal(size=(batch, fan_out))

        def loss():
            return float((dense_forward(x, weights, bias)[0] * upstream).sum())

        grad_x, grad_w, grad_b = dense_backward(upstream, cache)

        assert relative_error(grad_x, numeric_gradient(loss, x)) < 1e-6
        assert relative_error(grad_w, numeric_gradient(loss, weights)) < 1e-6
        assert relative_error(grad_b, numeric_gradient(loss, bias)) < 1e-6

    @given(
        batch=st.integers(min_value=1, max_value=2),
        height=st.integers(min_value=2, max_value=7),
        width=st.integers(min_value=2, max_value=7),
        channels=st.integers(min_value=1, max_value=3),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    @hyp_settings(max_examples=50, deadline=None)
    def test_maxpool(self, batch, height, width, channels, seed):
        rng = np.random.default_rng(seed)
        # distinct integers keep every window maximum unique under the perturbation
        x = rng.permutation(batch * height * width * channels).astype(np.float64)
        x = x.reshape(batch, height, width, channels)
        out, cache = maxpool2x2_forward(x)
        upstream = rng.normal(size=out.shape)

        def loss():
            return float((maxpool2x2_forward(x)[0] * upstream).sum())

        grad = maxpool2x2_backward(upstream, cache)

        np.testing.assert_allclose(grad, numeric_gradient(loss, x), atol=1e-6)
