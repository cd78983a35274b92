import numpy as np
import pytest

from ngcausal.model import (Architecture, ComponentMLP, build_lagged, forward,
                            grad, granger_weights, init_model, loss,
                            loss_and_grad, predict)
from ngcausal.numerics import SeededRng, finite_diff_grad


def random_instance(seed, p=None, K=None, hidden=None, N=None):
    """A random small model/dataset pair for gradient and loss checks."""
    gen = np.random.default_rng(seed)
    p = p if p is not None else int(gen.integers(1, 4))
    K = K if K is not None else int(gen.integers(1, 3))
    if hidden is None:
        n_hidden = int(gen.integers(0, 3))
        hidden = tuple(int(gen.integers(1, 5)) for _ in range(n_hidden))
    N = N if N is not None else int(gen.integers(2, 9))
    activation = "tanh" if gen.random() < 0.8 else "relu"
    arch = Architecture(hidden_sizes=hidden, activation=activation, init_scale=0.5)
    model = init_model(p, K, arch, SeededRng(seed))
    from ngcausal.model import LaggedDataset
    X = gen.normal(size=(N, p * K))
    y = gen.normal(size=N)
    data = LaggedDataset(inputs=X, targets=y, series_index=0, p=p, K=K)
    return model, data


class TestBuildLagged:
    def test_three_step_scalar_series(self):
        # series (a, b, c), K=2: the single row has inputs (b, a), target c
        ts = np.array([[1.0], [2.0], [3.0]])
        data = build_lagged(ts, K=2, i=0)
        assert data.n_rows == 1
        assert np.array_equal(data.inputs, [[2.0, 1.0]])
        assert np.array_equal(data.targets, [3.0])

    def test_two_series_lag_one(self):
        ts = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]])
        data = build_lagged(ts, K=1, i=1)
        assert np.array_equal(data.inputs, ts[:2])
        assert np.array_equal(data.targets, [20.0, 30.0])

    def test_row_count(self):
        ts = SeededRng(0).gen.normal(size=(37, 4))
        assert build_lagged(ts, K=5, i=2).n_rows == 32

    def test_lag_block_ordering(self):
        # row n = (x_{K+n-1}, ..., x_n): lag-1 block first
        ts = SeededRng(1).gen.normal(size=(10, 3))
        data = build_lagged(ts, K=3, i=0)
        n = 2
        expected = np.concatenate([ts[3 + n - 1], ts[3 + n - 2], ts[3 + n - 3]])
        assert np.array_equal(data.inputs[n], expected)

    def test_t_not_greater_than_k_rejected(self):
        with pytest.raises(ValueError):
            build_lagged(np.zeros((3, 2)), K=3, i=0)

    def test_series_index_range(self):
        with pytest.raises(ValueError):
            build_lagged(np.zeros((5, 2)), K=1, i=2)


class TestForward:
    def test_zero_network_outputs_zero(self):
        model = ComponentMLP(p=3, K=2, hidden_sizes=(4,))
        assert forward(model, np.ones(6)) == 0.0

    def test_linear_reduction(self):
        # no hidden layers: forward(x) = w x + bias, the one-lag linear map
        model = ComponentMLP(p=1, K=1, hidden_sizes=())
        model.weight(0)[0, 0] = 0.5
        model.bias(0)[0] = 0.25
        assert forward(model, np.array([2.0])) == 0.5 * 2.0 + 0.25

    def test_tanh_hand_case(self):
        # H1=1, first-layer row (1, 0), unit decoder: output = tanh(0.5)
        model = ComponentMLP(p=2, K=1, hidden_sizes=(1,), activation="tanh")
        model.weight(0)[0] = [1.0, 0.0]
        model.weight(1)[0, 0] = 1.0
        out = forward(model, np.array([0.5, 7.0]))
        assert np.isclose(out, np.tanh(0.5), atol=1e-15)
        assert np.isclose(out, 0.46211715726000974, atol=1e-12)

    def test_dimension_mismatch(self):
        model = ComponentMLP(p=2, K=2, hidden_sizes=(3,))
        with pytest.raises(ValueError):
            forward(model, np.ones(3))

    def test_matches_batched_predict(self):
        model, data = random_instance(0, N=6)
        one_by_one = np.array([forward(model, x) for x in data.inputs])
        assert np.allclose(one_by_one, predict(model, data.inputs), rtol=1e-12, atol=1e-14)


class TestLoss:
    def test_perfect_fit_is_zero(self):
        model, data = random_instance(3)
        data.targets[:] = predict(model, data.inputs)
        assert loss(model, data) == 0.0

    def test_zero_model_sums_squared_targets(self):
        from ngcausal.model import LaggedDataset
        model = ComponentMLP(p=1, K=1, hidden_sizes=(2,))
        data = LaggedDataset(inputs=np.zeros((2, 1)), targets=np.array([1.0, 2.0]),
                             series_index=0, p=1, K=1)
        assert loss(model, data) == 5.0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_per_row_recomputation(self, seed):
        model, data = random_instance(seed)
        total = sum((forward(model, x) - t) ** 2
                    for x, t in zip(data.inputs, data.targets))
        assert np.isclose(loss(model, data), total, rtol=1e-10, atol=1e-12)


class TestGrad:
    def test_zero_residual_zero_gradient(self):
        model, data = random_instance(4)
        data.targets[:] = predict(model, data.inputs)
        assert np.allclose(grad(model, data), 0.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_finite_differences(self, seed):
        model, data = random_instance(seed)
        _, g = loss_and_grad(model, data)

        def f(theta):
            probe = ComponentMLP(model.p, model.K, model.hidden_sizes,
                                 model.activation, model.use_output_bias,
                                 theta=theta.copy())
            return loss(probe, data)

        fd = finite_diff_grad(f, model.theta, h=1e-6)
        rel = np.abs(g - fd) / np.maximum(1.0, np.maximum(np.abs(g), np.abs(fd)))
        assert rel.max() < 1e-5

    def test_zero_input_column_zero_first_layer_grad(self):
        model, data = random_instance(8, p=3, K=2, N=6)
        j = 1
        data.inputs[:, j::3] = 0.0
        g = grad(model, data)
        gw1 = model.unpack(g)[0][0]
        assert np.all(gw1[:, j::3] == 0.0)


class TestGrangerWeights:
    def test_zero_first_layer(self):
        model = ComponentMLP(p=4, K=3, hidden_sizes=(5,))
        assert np.array_equal(granger_weights(model), np.zeros(4))

    def test_three_four_five(self):
        # K=2, H1=1, column weights (3, 4) stack to norm 5
        model = ComponentMLP(p=1, K=2, hidden_sizes=(1,))
        model.weight(0)[0] = [3.0, 4.0]
        assert granger_weights(model)[0] == 5.0

    def test_zero_iff_column_group_zero(self):
        model, _ = random_instance(5, p=3, K=2, hidden=(4,))
        gw = granger_weights(model)
        for j in range(3):
            assert (gw[j] == 0.0) == np.all(model.column_group(j) == 0.0)

    def test_zero_group_makes_prediction_invariant(self):
        # sufficiency: zero outgoing weights -> output ignores that series
        model, data = random_instance(6, p=4, K=2, hidden=(5,), N=10)
        j = 2
        model.column_group(j)[...] = 0.0
        base = predict(model, data.inputs)
        gen = np.random.default_rng(0)
        for _ in range(5):
            perturbed = data.inputs.copy()
            perturbed[:, j::4] = gen.normal(scale=100.0, size=(10, 2))
            assert np.array_equal(predict(model, perturbed), base)


class TestLinearEquivalence:
    def test_matches_least_squares_residual_algebra(self):
        # zero-hidden model: loss/grad equal the normal-equation forms
        gen = np.random.default_rng(2)
        p, K, N = 3, 2, 30
        from ngcausal.model import LaggedDataset
        X = gen.normal(size=(N, p * K))
        y = gen.normal(size=N)
        data = LaggedDataset(inputs=X, targets=y, series_index=0, p=p, K=K)
        model = ComponentMLP(p, K, hidden_sizes=())
        w = gen.normal(size=p * K)
        b = 0.3
        model.weight(0)[0] = w
        model.bias(0)[0] = b

        r = X @ w + b - y
        assert np.isclose(loss(model, data), r @ r, rtol=1e-10)
        g = grad(model, data)
        gw, gb = model.unpack(g)
        assert np.allclose(gw[0][0], 2.0 * X.T @ r, rtol=1e-10, atol=1e-12)
        assert np.isclose(gb[0][0], 2.0 * r.sum(), rtol=1e-10)


class TestArchitecture:
    def test_bad_activation_rejected(self):
        with pytest.raises(ValueError):
            Architecture(activation="sigmoid")

    def test_bad_hidden_rejected(self):
        with pytest.raises(ValueError):
            Architecture(hidden_sizes=(0,))

    def test_output_bias_off_stays_zero(self):
        arch = Architecture(hidden_sizes=(3,), output_bias=False)
        model = init_model(2, 2, arch, SeededRng(0))
        _, data = random_instance(1, p=2, K=2, N=5)
        g = grad(model, data)
        assert g[model.b_off[-1]] == 0.0
        assert model.output_bias == 0.0

    def test_init_is_seeded(self):
        arch = Architecture(hidden_sizes=(4, 3))
        a = init_model(3, 2, arch, SeededRng(9))
        b = init_model(3, 2, arch, SeededRng(9))
        c = init_model(3, 2, arch, SeededRng(10))
        assert np.array_equal(a.theta, b.theta)
        assert not np.array_equal(a.theta, c.theta)

    def test_copy_is_independent(self):
        model = init_model(2, 1, Architecture(hidden_sizes=(2,)), SeededRng(0))
        clone = model.copy()
        clone.theta[:] = 0.0
        assert not np.array_equal(model.theta, clone.theta)
