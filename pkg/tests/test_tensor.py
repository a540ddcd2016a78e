"""Tensor kernels, autodiff, Adam, and the checkpoint container."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stmtmem import tensor as T
from stmtmem.errors import DimensionError, NumericInputError, UsageError, VocabularyError
from stmtmem.params import (
    AdamState,
    ParameterSet,
    adam_step,
    load_checkpoint,
    save_checkpoint,
)
from stmtmem import verify


def leaf(data):
    return T.Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


class TestMatmul:
    def test_identity(self):
        out = T.matmul(T.constant(np.eye(2)), T.constant([[5.0, 6.0], [7.0, 8.0]]))
        np.testing.assert_array_equal(out.data, [[5.0, 6.0], [7.0, 8.0]])

    def test_hand_product(self):
        out = T.matmul(T.constant([[1.0, 2.0], [3.0, 4.0]]),
                       T.constant([[5.0, 6.0], [7.0, 8.0]]))
        np.testing.assert_array_equal(out.data, [[19.0, 22.0], [43.0, 50.0]])

    def test_zero_annihilates(self):
        out = T.matmul(T.constant(np.zeros((3, 4))), T.constant(np.ones((4, 2))))
        np.testing.assert_array_equal(out.data, np.zeros((3, 2)))

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 2\)"):
            T.matmul(T.constant(np.ones((2, 3))), T.constant(np.ones((2, 2))))

    def test_gradients_flow_to_both_operands(self):
        a, b = leaf([[1.0, 2.0], [3.0, 4.0]]), leaf([[5.0, 6.0], [7.0, 8.0]])
        T.sum_all(T.matmul(a, b)).backward()
        np.testing.assert_allclose(a.grad, np.ones((2, 2)) @ b.data.T)
        np.testing.assert_allclose(b.grad, a.data.T @ np.ones((2, 2)))

    def test_associativity_and_distributivity_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b, c = (rng.uniform(-1, 1, (3, 3)) for _ in range(3))
            ta, tb, tc = map(T.constant, (a, b, c))
            assoc_l = T.matmul(T.matmul(ta, tb), tc).data
            assoc_r = T.matmul(ta, T.matmul(tb, tc)).data
            np.testing.assert_allclose(assoc_l, assoc_r, atol=1e-9)
            ident = T.matmul(ta, T.constant(np.eye(3))).data
            np.testing.assert_allclose(ident, a, atol=1e-12)
            dist_l = T.matmul(ta, T.add(tb, tc)).data
            dist_r = T.add(T.matmul(ta, tb), T.matmul(ta, tc)).data
            np.testing.assert_allclose(dist_l, dist_r, atol=1e-9)


class TestElementwise:
    def test_tanh_at_zero_value_and_gradient(self):
        x = leaf([0.0])
        y = T.tanh(x)
        assert y.data[0] == 0.0
        T.sum_all(y).backward()
        assert x.grad[0] == 1.0

    def test_sigmoid_at_zero(self):
        assert T.sigmoid(T.constant([0.0])).data[0] == 0.5

    def test_abs_definition_and_zero_subgradient(self):
        x = leaf([-0.1, 0.0])
        y = T.abs_(x)
        np.testing.assert_array_equal(y.data, [0.1, 0.0])
        T.sum_all(y).backward()
        np.testing.assert_array_equal(x.grad, [-1.0, 0.0])

    def test_binary_ops_reject_shape_mismatch(self):
        for op in (T.add, T.sub, T.mul):
            with pytest.raises(DimensionError):
                op(T.constant(np.ones(3)), T.constant(np.ones(4)))

    def test_relu_blocks_negative_gradient(self):
        x = leaf([-1.0, 2.0])
        T.sum_all(T.relu(x)).backward()
        np.testing.assert_array_equal(x.grad, [0.0, 1.0])


class TestSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(T.softmax(T.constant([0.0, 0.0])).data, [0.5, 0.5])

    def test_hand_values(self):
        out = T.softmax(T.constant([1.0, 2.0, 3.0])).data
        np.testing.assert_allclose(out, [0.09003, 0.24473, 0.66524], atol=5e-6)

    def test_extreme_logits_do_not_overflow(self):
        out = T.softmax(T.constant([1000.0, 0.0])).data
        np.testing.assert_array_equal(out, [1.0, 0.0])

    def test_non_finite_input_rejected(self):
        with pytest.raises(NumericInputError):
            T.softmax(T.constant([np.inf, 0.0]))

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=8),
           st.floats(-30, 30))
    @settings(max_examples=100, deadline=None)
    def test_sum_one_and_shift_invariance(self, logits, shift):
        base = T.softmax(T.constant(logits)).data
        assert abs(base.sum() - 1.0) <= 1e-12
        assert (base > 0).all()
        shifted = T.softmax(T.constant([v + shift for v in logits])).data
        np.testing.assert_allclose(shifted, base, atol=1e-12)


class TestConcat:
    def test_single_argument_identity(self):
        x = T.constant([1.0, 2.0])
        np.testing.assert_array_equal(T.concat([x], axis=0).data, x.data)

    def test_row_concatenation(self):
        out = T.concat([T.constant([[1.0], [2.0]]), T.constant([[3.0], [4.0]])], axis=0)
        np.testing.assert_array_equal(out.data, [[1.0], [2.0], [3.0], [4.0]])

    def test_gate_feature_layout(self):
        parts = [T.constant(np.full(5, float(i))) for i in range(4)]
        assert T.concat(parts, axis=0).shape == (20,)

    def test_mismatched_off_axis_dims(self):
        with pytest.raises(DimensionError):
            T.concat([T.constant(np.ones((2, 3))), T.constant(np.ones((2, 4)))], axis=0)

    def test_gradient_splits_back(self):
        a, b = leaf([1.0, 2.0]), leaf([3.0])
        out = T.concat([a, b], axis=0)
        T.sum_all(T.mul(out, T.constant([1.0, 2.0, 3.0]))).backward()
        np.testing.assert_array_equal(a.grad, [1.0, 2.0])
        np.testing.assert_array_equal(b.grad, [3.0])


class TestEmbeddingLookup:
    def test_repeated_id_copies_row(self):
        table = T.constant(np.arange(12.0).reshape(4, 3))
        out = T.embedding_lookup(table, [0, 0])
        np.testing.assert_array_equal(out.data, [table.data[0], table.data[0]])

    def test_gradient_scatter_adds(self):
        table = leaf(np.zeros((5, 3)))
        T.sum_all(T.embedding_lookup(table, [3, 3])).backward()
        expected = np.zeros((5, 3))
        expected[3] = 2.0
        np.testing.assert_array_equal(table.grad, expected)

    def test_empty_id_list(self):
        out = T.embedding_lookup(T.constant(np.ones((4, 3))), [])
        assert out.shape == (0, 3)

    def test_out_of_range_id_reported(self):
        with pytest.raises(VocabularyError, match="7"):
            T.embedding_lookup(T.constant(np.ones((4, 3))), [1, 7])


class TestGRUCell:
    def zero_weights(self, e, h):
        z = lambda shape: T.constant(np.zeros(shape))
        return T.GRUWeights(z((e, h)), z((h, h)), z(h),
                            z((e, h)), z((h, h)), z(h),
                            z((e, h)), z((h, h)), z(h))

    def test_zero_fixed_point(self):
        w = self.zero_weights(3, 4)
        out = T.gru_cell(T.constant(np.zeros(3)), T.constant(np.zeros(4)), w)
        np.testing.assert_array_equal(out.data, np.zeros(4))

    def test_zero_weights_halve_state(self):
        w = self.zero_weights(3, 4)
        h = np.array([1.0, -2.0, 0.5, 4.0])
        out = T.gru_cell(T.constant(np.zeros(3)), T.constant(h), w)
        np.testing.assert_allclose(out.data, 0.5 * h)

    def test_finite_difference(self):
        rng = np.random.default_rng(5)
        for trial in range(5):
            w = T.GRUWeights(*(leaf(rng.uniform(-1, 1, s)) for s in
                               [(3, 4), (4, 4), (4,)] * 3))
            x, h = leaf(rng.uniform(-1, 1, 3)), leaf(rng.uniform(-1, 1, 4))
            proj = T.constant(rng.uniform(0.5, 1.5, 4))
            result = verify.check_gradient(
                f"gru{trial}", lambda: T.sum_all(T.mul(T.gru_cell(x, h, w), proj)),
                [x, h, *w])
            assert result.max_rel_err < 1e-4


class TestCrossEntropy:
    def test_uniform_case(self):
        dist = T.constant(np.full(4, 0.25))
        assert math.isclose(T.cross_entropy(dist, 2).item(), math.log(4), rel_tol=1e-12)

    def test_perfect_prediction(self):
        dist = T.constant([0.0, 1.0, 0.0])
        assert math.isclose(T.cross_entropy(dist, 1).item(), 0.0, abs_tol=1e-9)

    def test_quarter_probability(self):
        dist = T.constant([0.25, 0.5, 0.25])
        assert math.isclose(T.cross_entropy(dist, 0).item(), 1.38629, abs_tol=1e-5)

    def test_out_of_range_target(self):
        with pytest.raises(VocabularyError):
            T.cross_entropy(T.constant([0.5, 0.5]), 2)

    def test_batched_rows(self):
        dist = T.constant([[0.5, 0.5], [0.25, 0.75]])
        out = T.cross_entropy(dist, [0, 1])
        np.testing.assert_allclose(out.data, [-np.log(0.5), -np.log(0.75)])


class TestBackward:
    def test_square_derivative(self):
        x = leaf([3.0])
        T.sum_all(T.mul(x, x)).backward()
        assert x.grad[0] == pytest.approx(6.0)

    def test_tanh_derivative_at_zero(self):
        x = leaf([0.0])
        T.sum_all(T.tanh(x)).backward()
        assert x.grad[0] == 1.0

    def test_non_scalar_loss_rejected(self):
        with pytest.raises(UsageError):
            leaf([1.0, 2.0]).backward()

    def test_repeated_backward_accumulates(self):
        x = leaf([2.0])
        y = T.sum_all(T.mul(x, x))
        y.backward()
        first = x.grad.copy()
        y.backward()
        np.testing.assert_array_equal(x.grad, 2 * first)

    def test_deep_chain_is_iterative(self):
        # 5000 chained ops would overflow a recursive traversal.
        x = leaf([1.0])
        y = x
        for _ in range(5000):
            y = T.add_const(y, 0.0)
        T.sum_all(y).backward()
        assert x.grad[0] == 1.0


class TestAdam:
    def test_first_step_is_signed_learning_rate(self):
        params = ParameterSet(0)
        p = params.add("w", np.array([1.0]))
        p.grad = np.array([2.0])
        state = AdamState.bind(params, lr=1e-3)
        adam_step(params, state)
        assert p.data[0] == pytest.approx(1.0 - 1e-3, abs=1e-9)
        assert p.grad is None and state.t == 1

    def test_zero_gradient_leaves_parameters_unchanged(self):
        params = ParameterSet(0)
        p = params.add("w", np.array([1.0, -2.0]))
        p.grad = np.zeros(2)
        adam_step(params, AdamState.bind(params))
        np.testing.assert_array_equal(p.data, [1.0, -2.0])

    def test_missing_gradient_names_parameter(self):
        params = ParameterSet(0)
        params.add("alpha", np.ones(2))
        with pytest.raises(UsageError, match="alpha"):
            adam_step(params, AdamState.bind(params))

    def test_identical_runs_are_bitwise_identical(self):
        def run():
            rng = np.random.default_rng(42)
            params = ParameterSet(42)
            p = params.add("w", rng.uniform(-1, 1, 8))
            state = AdamState.bind(params)
            for _ in range(5):
                p.grad = np.sin(p.data)
                adam_step(params, state)
            return p.data.tobytes()
        assert run() == run()


class TestFiniteDifferenceInvariant:
    def test_all_ops_match_central_differences(self):
        results = verify.run_op_checks(seed=123, trials=4)
        for r in results:
            assert r.passed, f"{r.name}: {r.max_rel_err:.3e}"


class TestDeterminism:
    def test_same_seed_same_parameters(self):
        from stmtmem.model import init_params
        cfg = verify.toy_config()
        a, b = init_params(cfg), init_params(cfg)
        for (name_a, ta), (name_b, tb) in zip(a.items(), b.items()):
            assert name_a == name_b
            assert ta.data.tobytes() == tb.data.tobytes()


class TestParameterSet:
    def test_iteration_is_lexicographic(self):
        params = ParameterSet(0)
        for name in ("zeta", "alpha", "midway"):
            params.add(name, np.zeros(1))
        assert params.names() == ["alpha", "midway", "zeta"]

    def test_duplicate_names_rejected(self):
        params = ParameterSet(0)
        params.add("w", np.zeros(1))
        with pytest.raises(UsageError):
            params.add("w", np.zeros(1))


class TestCheckpoint:
    def test_round_trip_is_bit_exact(self, tmp_path):
        cfg = verify.toy_config()
        from stmtmem.model import init_params
        params = init_params(cfg)
        path = str(tmp_path / "model.ckpt")
        save_checkpoint(path, cfg, params)
        loaded_cfg, loaded = load_checkpoint(path)
        assert loaded_cfg == cfg
        assert loaded.names() == params.names()
        for (_, orig), (_, back) in zip(params.items(), loaded.items()):
            assert orig.data.tobytes() == back.data.tobytes()

    def test_rewrite_is_bytewise_identical(self, tmp_path):
        cfg = verify.toy_config()
        from stmtmem.model import init_params
        params = init_params(cfg)
        p1, p2 = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
        save_checkpoint(p1, cfg, params)
        save_checkpoint(p2, cfg, params)
        assert open(p1, "rb").read() == open(p2, "rb").read()
