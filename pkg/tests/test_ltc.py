import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltc_emotion.autograd import Tensor, gradcheck, load_archive, save_archive
from ltc_emotion.errors import ShapeError
from ltc_emotion.ltc import (
    TAU_MAX,
    TAU_MIN,
    LNNStack,
    LTCCell,
    decay_factors,
    init_cell,
    ltc_forward,
    ltc_step,
    run_cell,
    time_constants,
)


def set_tau(cell, tau):
    cell.theta_tau.data[:] = np.log(tau)


class TestInit:
    def test_tau_in_range(self):
        tau = time_constants(init_cell(48, 128, seed=0))
        assert tau.shape == (128,)
        assert np.all((tau >= TAU_MIN) & (tau <= TAU_MAX))
        assert np.unique(tau).size == 128

    def test_seeded_init_is_reproducible(self):
        a, b = init_cell(5, 4, seed=3), init_cell(5, 4, seed=3)
        for (na, pa), (nb, pb) in zip(a.named_parameters(), b.named_parameters()):
            assert na == nb
            np.testing.assert_array_equal(pa.data, pb.data)
        np.testing.assert_array_equal(a.b.data, 0.0)

    def test_bad_dims(self):
        with pytest.raises(ShapeError):
            LTCCell(0, 4)


class TestDecay:
    def test_closed_forms(self):
        cell = init_cell(2, 3)
        set_tau(cell, np.array([1.0, 0.1, 1e6]))
        d = decay_factors(cell).data
        assert d[0] == pytest.approx(np.exp(-1.0), abs=1e-15)
        assert d[1] == pytest.approx(np.exp(-10.0), rel=1e-12)
        assert d[2] == pytest.approx(1.0, abs=1e-5)

    def test_theta_zero_gives_unit_tau(self):
        cell = init_cell(2, 3)
        cell.theta_tau.data[:] = 0.0
        np.testing.assert_array_equal(time_constants(cell), 1.0)


class TestStep:
    def test_zero_weights_fixed_point(self):
        cell = init_cell(3, 4)
        cell.Wx.data[:] = 0.0
        cell.Wh.data[:] = 0.0
        out = ltc_step(cell, np.ones((1, 3)), np.zeros((1, 4)))
        np.testing.assert_array_equal(out.data, 0.0)

    def test_hand_evaluated_unit(self):
        cell = LTCCell(1, 1)
        set_tau(cell, np.array([1.0 / np.log(2.0)]))  # d = 0.5
        cell.Wx.data[:] = 0.0
        cell.Wh.data[:] = 0.0
        cell.b.data[:] = 40.0  # tanh saturates to 1 in double precision
        assert decay_factors(cell).data[0] == pytest.approx(0.5, abs=1e-15)
        out = ltc_step(cell, np.zeros((1, 1)), np.zeros((1, 1)))
        assert out.data[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_long_tau_is_pure_memory(self):
        cell = init_cell(3, 4, seed=1)
        set_tau(cell, np.full(4, 1e8))
        h = np.array([[0.3, -0.7, 0.9, 0.1]])
        out = ltc_step(cell, np.ones((1, 3)), h)
        np.testing.assert_allclose(out.data, h, atol=1e-7)

    def test_short_tau_is_memoryless_tanh(self):
        cell = init_cell(3, 4, seed=2)
        set_tau(cell, np.full(4, 0.1))
        x, h = np.ones((1, 3)), np.full((1, 4), 0.5)
        expected = np.tanh(x @ cell.Wx.data.T + h @ cell.Wh.data.T + cell.b.data)
        np.testing.assert_allclose(ltc_step(cell, x, h).data, expected, atol=np.exp(-10) * 2)

    def test_shape_mismatch(self):
        cell = init_cell(3, 4)
        with pytest.raises(ShapeError, match="ltc_step"):
            ltc_step(cell, np.ones((1, 2)), np.zeros((1, 4)))

    def test_invariants_over_random_steps(self):
        rng = np.random.default_rng(0)
        violations = 0
        n_steps = 0
        for trial in range(100):
            cell = init_cell(6, 8, seed=trial)
            cell.theta_tau.data += rng.normal(scale=1.0, size=8)  # drift beyond the init range
            cell.Wh.data *= rng.uniform(0.5, 5.0)
            h = rng.uniform(-1, 1, size=(1, 8))
            for _ in range(100):
                tau = time_constants(cell)
                d = decay_factors(cell).data
                h = ltc_step(cell, rng.normal(scale=3.0, size=(1, 6)), h).data
                violations += int(np.any(tau <= 0) or np.any(d <= 0) or np.any(d >= 1)
                                  or np.abs(h).max() > 1.0)
                n_steps += 1
        assert n_steps == 10_000 and violations == 0

    def test_tiny_tau_underflows_to_memoryless(self):
        # below tau ~ 1/745 the decay rounds to exactly 0 in float64; the step
        # is then the tanh drive and stays bounded
        cell = init_cell(2, 3, seed=3)
        set_tau(cell, np.full(3, 1e-4))
        assert np.all(decay_factors(cell).data == 0.0)
        out = ltc_step(cell, np.full((1, 2), 50.0), np.ones((1, 3)))
        assert np.abs(out.data).max() <= 1.0

    @given(st.integers(0, 10_000), st.floats(0.0, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_step_bounded_by_previous_state(self, seed, h_scale):
        rng = np.random.default_rng(seed)
        cell = init_cell(4, 5, seed=seed)
        h = h_scale * rng.uniform(-1, 1, size=(2, 5))
        out = ltc_step(cell, rng.normal(scale=10, size=(2, 4)), h).data
        assert np.all(np.abs(out) <= np.maximum(np.abs(h), 1.0) + 1e-12)


class TestForward:
    def test_single_step_sequence(self):
        cell = init_cell(3, 4, seed=4)
        x = np.random.default_rng(0).normal(size=(2, 1, 3))
        seq = run_cell(cell, Tensor(x))
        step = ltc_step(cell, x[:, 0], np.zeros((2, 4)))
        np.testing.assert_allclose(seq.data[:, 0], step.data, atol=1e-15)

    def test_constant_input_converges(self):
        cell = init_cell(3, 6, seed=5)
        cell.Wh.data *= 0.3  # keep the recurrent map contractive
        x = np.tile(np.array([[0.4, -0.2, 0.9]]), (1, 300, 1))
        h = run_cell(cell, Tensor(x)).data[0]
        assert np.abs(h[-1] - h[-2]).max() < 1e-4

    def test_hidden_states_bounded_for_any_input(self):
        stack = LNNStack(5, 8, n_layers=2, seed=6)
        x = np.random.default_rng(1).normal(scale=100.0, size=(3, 40, 5))
        out = ltc_forward(stack, x).data
        assert out.shape == (3, 40, 8) and np.abs(out).max() <= 1.0

    def test_empty_sequence_raises(self):
        with pytest.raises(ShapeError, match="empty"):
            ltc_forward(LNNStack(3, 4), np.zeros((1, 0, 3)))

    def test_eval_is_deterministic(self):
        stack = LNNStack(3, 4, n_layers=2, seed=7)
        x = np.random.default_rng(2).normal(size=(2, 6, 3))
        np.testing.assert_array_equal(ltc_forward(stack, x).data, ltc_forward(stack, x).data)

    def test_identity_second_layer(self):
        stack = LNNStack(3, 4, n_layers=2, dropout=0.0, seed=8)
        first, second = stack.cells()
        second.Wx.data[:] = np.eye(4) * 1e-3
        second.Wh.data[:] = 0.0
        second.b.data[:] = 0.0
        set_tau(second, np.full(4, 0.01))  # d = e^-100
        x = np.random.default_rng(3).normal(size=(2, 7, 3))
        two = ltc_forward(stack, x).data
        one = run_cell(first, Tensor(x)).data
        np.testing.assert_allclose(two, np.tanh(1e-3 * one), atol=1e-12)
        np.testing.assert_allclose(two / 1e-3, one, atol=1e-3)

    def test_theta_tau_gradcheck(self):
        cell = init_cell(3, 4, seed=9)
        x = Tensor(np.random.default_rng(4).normal(size=(2, 5, 3)))
        target = np.random.default_rng(5).normal(size=(2, 5, 4))

        def loss():
            return ((run_cell(cell, x) - target) ** 2).mean()

        report = gradcheck(loss, dict(cell.named_parameters()), tol=1e-3)
        assert report.passed, str(report)
        assert "theta_tau" in report.errors


class TestNaming:
    def test_parameter_names(self, tmp_path):
        stack = LNNStack(3, 4, n_layers=2)
        names = [f"ltc.{n}" for n, _ in stack.named_parameters()]
        assert names[:4] == ["ltc.layer0.Wx", "ltc.layer0.Wh", "ltc.layer0.b",
                             "ltc.layer0.theta_tau"]
        assert "ltc.layer1.theta_tau" in names
        save_archive(tmp_path / "c.ckpt", {f"ltc.{k}": v for k, v in stack.state_dict().items()})
        back, _ = load_archive(tmp_path / "c.ckpt")
        assert set(back) == set(names)

    def test_time_constants_per_layer(self):
        taus = time_constants(LNNStack(3, 4, n_layers=3))
        assert len(taus) == 3 and all(t.shape == (4,) for t in taus)
