"""Semantics of the three guidance mechanisms and the dispatcher."""

import numpy as np
import pytest

from guidedvo.guidance import (
    GuidanceError,
    SenetGuidanceParams,
    channelwise_guidance,
    channelwise_scales,
    guide,
    init_senet_params,
    pointwise_guidance,
    pointwise_scales,
    senet_guidance,
    senet_reduction,
    senet_scales,
)
from guidedvo.params import ParamSet, make_rng
from guidedvo.tensor import ShapeError, Tensor

SIG1 = 1.0 / (1.0 + np.exp(-1.0))  # 0.7310585786300049


def rand_maps(rng, c=4, h=3, w=5, dtype=np.float64):
    x = rng.normal(size=(c, h, w)).astype(dtype)
    o = rng.normal(size=(c, h, w)).astype(dtype)
    return Tensor(x), Tensor(o)


class TestSenet:
    def test_zero_params_halve_features(self, rng):
        x, o = rand_maps(rng)
        c = x.shape[0]
        gp = SenetGuidanceParams(
            Tensor(np.zeros((c, 2))), Tensor(np.zeros(2)),
            Tensor(np.zeros((2, c))), Tensor(np.zeros(c)),
        )
        out = senet_guidance(x, o, gp)
        np.testing.assert_allclose(out.data, 0.5 * x.data, atol=1e-12)

    def test_hand_set_weights(self):
        # two channels, bottleneck of one: s = (sigmoid(2), sigmoid(0))
        o = Tensor(np.stack([np.full((2, 2), 1.0), np.full((2, 2), 5.0)]))
        gp = SenetGuidanceParams(
            Tensor(np.array([[1.0], [0.0]])), Tensor(np.zeros(1)),
            Tensor(np.array([[2.0, 0.0]])), Tensor(np.zeros(2)),
        )
        s = senet_scales(o, gp)
        np.testing.assert_allclose(s.data, [1 / (1 + np.exp(-2.0)), 0.5], atol=1e-12)
        np.testing.assert_allclose(s.data, [0.8808, 0.5], atol=1e-4)

    def test_scales_open_interval(self, rng):
        x, o = rand_maps(rng)
        c = x.shape[0]
        params = ParamSet()
        init_senet_params(params, "m", c, make_rng(3), np.float64)
        gp = SenetGuidanceParams(
            params["m/guide/w1"], params["m/guide/b1"],
            params["m/guide/w2"], params["m/guide/b2"],
        )
        s = senet_scales(o, gp).data
        assert np.all((s > 0.0) & (s < 1.0))

    def test_scales_ignore_current_input(self, rng):
        # the scale vector is a function of the previous output only
        x1, o = rand_maps(rng)
        x2, _ = rand_maps(rng)
        c = x1.shape[0]
        params = ParamSet()
        init_senet_params(params, "m", c, make_rng(3), np.float64)
        gp = SenetGuidanceParams(
            params["m/guide/w1"], params["m/guide/b1"],
            params["m/guide/w2"], params["m/guide/b2"],
        )
        s1 = senet_guidance(x1, o, gp).data / x1.data
        s2 = senet_guidance(x2, o, gp).data / x2.data
        np.testing.assert_allclose(s1, s2, atol=1e-9)

    def test_reduction_rules(self):
        assert senet_reduction(1024) == 16
        assert senet_reduction(128) == 16
        assert senet_reduction(16) == 4
        assert senet_reduction(2) == 1


class TestPointwise:
    def test_identical_maps_scale_sigma_one(self, rng):
        x, _ = rand_maps(rng)
        out = pointwise_guidance(x, x)
        np.testing.assert_allclose(out.data, SIG1 * x.data, atol=1e-6)

    def test_orthogonal_column_gives_half(self):
        x = np.zeros((2, 1, 1))
        o = np.zeros((2, 1, 1))
        x[:, 0, 0] = [1.0, 0.0]
        o[:, 0, 0] = [0.0, 1.0]
        s = pointwise_scales(Tensor(x), Tensor(o))
        np.testing.assert_allclose(s.data, 0.5, atol=1e-12)

    def test_negated_maps(self, rng):
        x, _ = rand_maps(rng)
        neg = Tensor(-x.data)
        out = pointwise_guidance(x, neg)
        sneg = 1.0 / (1.0 + np.exp(1.0))
        np.testing.assert_allclose(out.data, sneg * x.data, atol=1e-6)

    def test_scale_map_shape(self, rng):
        x, o = rand_maps(rng, c=3, h=4, w=6)
        assert pointwise_scales(x, o).shape == (1, 4, 6)


class TestChannelwise:
    def test_identical_maps(self, rng):
        x, _ = rand_maps(rng)
        s = channelwise_scales(x, x)
        np.testing.assert_allclose(s.data, SIG1, atol=1e-6)

    def test_zero_channel_gives_half(self, rng):
        x, o = rand_maps(rng)
        o.data[1] = 0.0
        s = channelwise_scales(x, o).data
        np.testing.assert_allclose(s[1], 0.5, atol=1e-9)

    def test_scale_per_channel_shape(self, rng):
        x, o = rand_maps(rng, c=5, h=2, w=3)
        assert channelwise_scales(x, o).shape == (5, 1, 1)

    def test_differs_from_pointwise_on_1x1(self, rng):
        # single spatial position: pointwise couples all channels into one
        # scale, channelwise scales each channel by the sign of its product
        x, o = rand_maps(rng, c=6, h=1, w=1)
        p = pointwise_guidance(x, o)
        c = channelwise_guidance(x, o)
        assert p.shape == c.shape
        assert not np.allclose(p.data, c.data)


class TestSharedProperties:
    @pytest.mark.parametrize("mech", [pointwise_scales, channelwise_scales])
    def test_scales_in_open_interval(self, rng, mech):
        for _ in range(20):
            x, o = rand_maps(rng)
            s = mech(x, o).data
            assert np.all((s > 0.0) & (s < 1.0))

    @pytest.mark.parametrize("mech", [pointwise_guidance, channelwise_guidance])
    def test_magnitude_never_grows(self, rng, mech):
        x, o = rand_maps(rng)
        out = mech(x, o)
        assert np.all(np.abs(out.data) <= np.abs(x.data) + 1e-15)

    @pytest.mark.parametrize("mech", [pointwise_scales, channelwise_scales])
    def test_positive_scaling_invariance(self, rng, mech):
        x, o = rand_maps(rng)
        for lam in (0.25, 3.0, 117.0):
            s1 = mech(x, o).data
            s2 = mech(x, Tensor(lam * o.data)).data
            np.testing.assert_allclose(s1, s2, atol=1e-6)

    def test_joint_spatial_permutation(self, rng):
        x, o = rand_maps(rng, c=3, h=4, w=4)
        perm = rng.permutation(16)
        xp = x.data.reshape(3, 16)[:, perm].reshape(3, 4, 4)
        op = o.data.reshape(3, 16)[:, perm].reshape(3, 4, 4)
        # channel scales unchanged
        np.testing.assert_allclose(
            channelwise_scales(Tensor(xp), Tensor(op)).data,
            channelwise_scales(x, o).data,
            atol=1e-9,
        )
        # pointwise scale map permutes along with the positions
        s = pointwise_scales(x, o).data.reshape(16)
        sp = pointwise_scales(Tensor(xp), Tensor(op)).data.reshape(16)
        np.testing.assert_allclose(sp, s[perm], atol=1e-9)


class TestDispatch:
    def test_none_is_bitwise_identity(self, rng):
        x, o = rand_maps(rng)
        assert guide(x, o, "none") is x

    def test_channel_dispatch(self, rng):
        x, _ = rand_maps(rng)
        out = guide(x, x, "channel")
        np.testing.assert_allclose(out.data, SIG1 * x.data, atol=1e-6)

    def test_first_step_passthrough(self, rng):
        x, _ = rand_maps(rng)
        assert guide(x, None, "channel") is x
        assert guide(x, None, "senet") is x

    def test_missing_senet_params_rejected(self, rng):
        x, o = rand_maps(rng)
        with pytest.raises(GuidanceError):
            guide(x, o, "senet", gp=None)

    def test_unknown_variant_rejected(self, rng):
        x, o = rand_maps(rng)
        with pytest.raises(GuidanceError):
            guide(x, o, "softmax")

    def test_shape_mismatch_rejected(self, rng):
        x, _ = rand_maps(rng, c=3)
        _, o = rand_maps(rng, c=4)
        with pytest.raises(ShapeError):
            pointwise_guidance(x, o)
