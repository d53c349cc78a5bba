"""Adam update algebra, poly LR schedule, MSRA init, ParamSet behavior."""

import numpy as np
import pytest

from guidedvo.optim import AdamState, adam_step, poly_lr
from guidedvo.params import ParamSet, make_rng, msra_init
from guidedvo.tensor import ShapeError, Tensor


def make_param_set(values):
    params = ParamSet()
    for name, val in values.items():
        params.add(name, Tensor(np.asarray(val, dtype=np.float64)))
    return params


class TestAdam:
    def test_zero_grad_zero_decay_is_fixed_point(self):
        params = make_param_set({"w": [1.0, -2.0, 3.0]})
        before = params["w"].data.copy()
        state = AdamState.zeros_like(params)
        for _ in range(3):
            adam_step(params, {"w": np.zeros(3)}, state, lr=0.1, weight_decay=0.0)
        np.testing.assert_array_equal(params["w"].data, before)

    def test_first_step_is_signed_lr(self):
        params = make_param_set({"w": [0.0]})
        state = AdamState.zeros_like(params)
        adam_step(params, {"w": np.array([0.5])}, state, lr=1e-4, weight_decay=0.0)
        # bias-corrected m_hat/sqrt(v_hat) = g/|g| up to eps
        np.testing.assert_allclose(params["w"].data, [-1e-4], rtol=1e-4)

    def test_two_steps_update_counter_and_v(self):
        params = make_param_set({"w": [1.0]})
        state = AdamState.zeros_like(params)
        g = {"w": np.array([0.3])}
        adam_step(params, g, state, lr=1e-3, weight_decay=0.0)
        adam_step(params, g, state, lr=1e-3, weight_decay=0.0)
        assert state.step == 2
        assert np.all(state.v["w"] > 0.0)

    def test_v_always_nonnegative(self, rng):
        params = make_param_set({"w": rng.normal(size=8)})
        state = AdamState.zeros_like(params)
        for i in range(20):
            adam_step(params, {"w": rng.normal(size=8)}, state, lr=1e-3)
            assert np.all(state.v["w"] >= 0.0)

    def test_decoupled_weight_decay_shrinks_params(self):
        params = make_param_set({"w": [2.0]})
        state = AdamState.zeros_like(params)
        adam_step(params, {"w": np.zeros(1)}, state, lr=0.5, weight_decay=0.1)
        # zero gradient: only the decay term acts
        np.testing.assert_allclose(params["w"].data, [2.0 * (1 - 0.05)])

    def test_shape_mismatch_rejected(self):
        params = make_param_set({"w": [1.0, 2.0]})
        state = AdamState.zeros_like(params)
        with pytest.raises(ShapeError):
            adam_step(params, {"w": np.zeros(3)}, state, lr=1e-3)

    def test_missing_grad_rejected(self):
        params = make_param_set({"w": [1.0]})
        state = AdamState.zeros_like(params)
        with pytest.raises(KeyError):
            adam_step(params, {}, state, lr=1e-3)

    def test_frozen_params_untouched(self):
        params = ParamSet()
        params.add("frozen", Tensor(np.array([7.0])), trainable=False)
        params.add("live", Tensor(np.array([1.0])))
        state = AdamState.zeros_like(params)
        adam_step(params, {"live": np.array([1.0])}, state, lr=0.1)
        np.testing.assert_array_equal(params["frozen"].data, [7.0])
        assert params["live"].data[0] != 1.0


class TestPolyLR:
    def test_initial_value(self):
        assert poly_lr(0, 1000, 1e-4, 0.9) == pytest.approx(1e-4)

    def test_final_value_is_zero(self):
        assert poly_lr(1000, 1000, 1e-4, 0.9) == 0.0

    def test_halfway_closed_form(self):
        assert poly_lr(500, 1000, 1e-4, 0.9) == pytest.approx(1e-4 * 0.5**0.9, rel=1e-9)
        assert poly_lr(500, 1000, 1e-4, 0.9) == pytest.approx(5.3589e-5, rel=1e-4)

    def test_monotonically_nonincreasing(self):
        values = [poly_lr(i, 200, 1e-4, 0.9) for i in range(201)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_iteration_past_end_rejected(self):
        with pytest.raises(ValueError):
            poly_lr(1001, 1000, 1e-4, 0.9)
        with pytest.raises(ValueError):
            poly_lr(-1, 1000, 1e-4, 0.9)


class TestMsraInit:
    def test_deterministic_given_seed(self):
        a = msra_init((4, 4), fan_in=8, rng=42)
        b = msra_init((4, 4), fan_in=8, rng=42)
        np.testing.assert_array_equal(a.data, b.data)

    def test_sample_variance_matches_fan_in(self):
        t = msra_init((100_000,), fan_in=8, rng=7, dtype=np.float64)
        assert t.data.var() == pytest.approx(0.25, abs=0.01)

    def test_fan_in_two_gives_unit_std(self):
        t = msra_init((200_000,), fan_in=2, rng=3, dtype=np.float64)
        assert t.data.std() == pytest.approx(1.0, abs=0.02)

    def test_bad_fan_in_rejected(self):
        with pytest.raises(ValueError):
            msra_init((2, 2), fan_in=0, rng=0)


class TestParamSet:
    def test_duplicate_name_rejected(self):
        params = ParamSet()
        params.add("w", Tensor(np.zeros(2)))
        with pytest.raises(ValueError):
            params.add("w", Tensor(np.zeros(2)))

    def test_insertion_order_preserved(self, rng):
        params = ParamSet()
        names = [f"p{i}" for i in range(10)]
        for n in names:
            params.add(n, Tensor(rng.normal(size=2)))
        assert params.names() == names

    def test_rng_streams_are_counter_based_philox(self):
        gen = make_rng(0)
        assert isinstance(gen.bit_generator, np.random.Philox)
