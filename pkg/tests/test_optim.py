import numpy as np
import pytest

from ngcausal.datasets import VarGenConfig, standardize
from ngcausal.model import (Architecture, ComponentMLP, LaggedDataset,
                            build_lagged, init_model, loss, loss_and_grad)
from ngcausal.numerics import SeededRng
from ngcausal.optim import (FitResult, OptimizationError, OptimizerConfig,
                            fit, objective, prox_step, warm_start_fit)
from ngcausal.penalties import PenaltySpec, penalty_value, prox_group_block


def assert_monotone_trace(trace):
    trace = np.asarray(trace)
    slack = 1e-12 * np.maximum(1.0, np.abs(trace[:-1]))
    assert np.all(np.diff(trace) <= slack), "objective trace increased"


def small_dataset(seed, p=3, K=2, T=60):
    ts = VarGenConfig(p=p, K=K, burn_in=50).generate(T, seed)[0]
    return build_lagged(standardize(ts)[0], K, 0)


class TestObjective:
    def test_lambda_zero_equals_loss(self):
        data = small_dataset(0)
        model = init_model(3, 2, Architecture(hidden_sizes=(4,)), SeededRng(1))
        assert objective(model, data, PenaltySpec("group", 0.0)) == loss(model, data)

    def test_zero_model_zero_targets(self):
        model = ComponentMLP(2, 1, hidden_sizes=(3,))
        data = LaggedDataset(inputs=np.ones((4, 2)), targets=np.zeros(4),
                             series_index=0, p=2, K=1)
        assert objective(model, data, PenaltySpec("group", 3.0)) == 0.0

    def test_recomposition(self):
        data = small_dataset(2)
        model = init_model(3, 2, Architecture(hidden_sizes=(5,), init_scale=1.0),
                           SeededRng(3))
        spec = PenaltySpec("hierarchical", 0.8)
        assert np.isclose(objective(model, data, spec),
                          loss(model, data) + penalty_value(spec, model),
                          rtol=1e-10)


class TestProxStep:
    def test_descends_on_convex_quadratic(self):
        data = small_dataset(4)
        model = init_model(3, 2, Architecture(hidden_sizes=()), SeededRng(5))
        spec = PenaltySpec("group", 0.0)
        before = objective(model, data, spec)
        _, after = prox_step(model, data, spec, step=1e-4)
        assert after < before

    def test_fixed_point_when_gradient_zero(self):
        # zero network on zero targets is an exact stationary point
        data = small_dataset(6)
        data.targets[:] = 0.0
        model = ComponentMLP(3, 2, hidden_sizes=(3,))
        new_model, _ = prox_step(model, data, PenaltySpec("group", 0.0), step=1e-3)
        assert np.array_equal(new_model.theta, model.theta)

    def test_scalar_soft_threshold_hand_computation(self):
        # p=1, K=1, linear: one weight w and bias b
        X = np.array([[1.0], [2.0], [-1.0]])
        y = np.array([0.5, 1.5, -0.2])
        data = LaggedDataset(inputs=X, targets=y, series_index=0, p=1, K=1)
        model = ComponentMLP(1, 1, hidden_sizes=())
        w, b, step, lam = 0.3, 0.1, 0.05, 2.0
        model.weight(0)[0, 0] = w
        model.bias(0)[0] = b
        r = X[:, 0] * w + b - y
        gw = 2.0 * float(X[:, 0] @ r)
        gb = 2.0 * float(r.sum())
        pre = w - step * gw
        shrunk = max(0.0, 1.0 - step * lam / abs(pre)) * pre
        new_model, _ = prox_step(model, data, PenaltySpec("group", lam), step)
        assert np.isclose(new_model.weight(0)[0, 0], shrunk, rtol=1e-12)
        assert np.isclose(new_model.bias(0)[0], b - step * gb, rtol=1e-12)

    def test_original_model_untouched(self):
        data = small_dataset(8)
        model = init_model(3, 2, Architecture(hidden_sizes=(2,)), SeededRng(9))
        before = model.theta.copy()
        prox_step(model, data, PenaltySpec("group", 1.0), step=1e-3)
        assert np.array_equal(model.theta, before)


class TestFit:
    def test_huge_lambda_gives_empty_row(self):
        data = small_dataset(10)
        res = fit(data, PenaltySpec("group", 1e8),
                  Architecture(hidden_sizes=(4,)), OptimizerConfig(), seed=0)
        assert np.array_equal(res.model.first_layer_packed, np.zeros((4, 6)))
        assert_monotone_trace(res.objective_trace)

    def test_linear_noiseless_recovers_coefficient(self):
        # x_t = 0.5 x_{t-1} noise-free: the unpenalized linear fit finds 0.5
        from ngcausal.datasets import VarProcess, simulate_var
        proc = VarProcess(coeffs=np.array([[[0.5]]]), noise_sigma=0.0,
                          truth=np.array([[1.0]]))
        ts = simulate_var(proc, 60, SeededRng(0), burn_in=0,
                          init=np.array([[1.0]]))
        data = build_lagged(ts, 1, 0)
        # least-squares oracle for the same design
        A = np.column_stack([data.inputs[:, 0], np.ones(data.n_rows)])
        coef_ref = np.linalg.lstsq(A, data.targets, rcond=None)[0]
        res = fit(data, PenaltySpec("group", 0.0), Architecture(hidden_sizes=()),
                  OptimizerConfig(rel_tol=1e-14, max_iters=100_000), seed=0)
        assert abs(res.model.weight(0)[0, 0] - coef_ref[0]) < 1e-3
        assert abs(res.model.weight(0)[0, 0] - 0.5) < 1e-3

    def test_deterministic_given_seed(self):
        data = small_dataset(11)
        arch = Architecture(hidden_sizes=(3,))
        opt = OptimizerConfig(max_iters=200)
        a = fit(data, PenaltySpec("group", 2.0), arch, opt, seed=42)
        b = fit(data, PenaltySpec("group", 2.0), arch, opt, seed=42)
        assert np.array_equal(a.model.theta, b.model.theta)
        assert np.array_equal(a.objective_trace, b.objective_trace)
        assert a.iterations_run == b.iterations_run
        assert a.converged == b.converged
        assert a.final_step == b.final_step

    def test_monotone_descent_various_penalties(self):
        data = small_dataset(12)
        for kind, lam, hidden in [("none", 0.0, (4,)), ("group", 1.0, (4,)),
                                  ("hierarchical", 2.0, (3, 2)), ("group", 5.0, ())]:
            res = fit(data, PenaltySpec(kind, lam), Architecture(hidden_sizes=hidden),
                      OptimizerConfig(max_iters=500), seed=13)
            assert_monotone_trace(res.objective_trace)

    def test_relu_fit_runs_and_descends(self):
        data = small_dataset(17)
        res = fit(data, PenaltySpec("group", 1.0),
                  Architecture(hidden_sizes=(4,), activation="relu"),
                  OptimizerConfig(max_iters=300), seed=3)
        assert_monotone_trace(res.objective_trace)

    def test_step_underflow_raises(self):
        # curvature so large that the accepted step sits below min_step
        X = np.full((4, 1), 100.0)
        y = np.array([1.0, -1.0, 2.0, 0.5])
        data = LaggedDataset(inputs=X, targets=y, series_index=0, p=1, K=1)
        opt = OptimizerConfig(initial_step=1e-2, min_step=9e-3)
        with pytest.raises(OptimizationError, match="min_step"):
            fit(data, PenaltySpec("group", 0.0), Architecture(hidden_sizes=()),
                opt, seed=0)

    def test_progress_sink_called(self):
        data = small_dataset(14)
        events = []
        fit(data, PenaltySpec("group", 1.0), Architecture(hidden_sizes=(2,)),
            OptimizerConfig(max_iters=25), seed=0,
            progress=lambda it, obj, step, active: events.append((it, obj, step, active)))
        assert events and events[0][0] == 1
        assert all(isinstance(e[3], int) for e in events)

    def test_lambda_zero_matches_plain_gradient_descent(self):
        # the prox at lambda = 0 is the identity, so the trace must equal an
        # independently coded gradient-descent loop with the same step policy
        data = small_dataset(15)
        arch = Architecture(hidden_sizes=(3,))
        opt = OptimizerConfig(max_iters=60, rel_tol=1e-15)
        res = fit(data, PenaltySpec("group", 0.0), arch, opt, seed=21)

        model = init_model(3, 2, arch, SeededRng(21))
        step = opt.initial_step
        trace = [loss(model, data)]
        prev = trace[0]
        for _ in range(opt.max_iters):
            val, g = loss_and_grad(model, data)
            while True:
                cand = model.theta - step * g
                probe = ComponentMLP(3, 2, arch.hidden_sizes, theta=cand.copy())
                new_loss = loss(probe, data)
                delta = cand - model.theta
                if new_loss <= (val + g @ delta + (delta @ delta) / (2 * step)
                                + 1e-12 * max(1.0, abs(val))):
                    break
                step *= opt.backtrack_factor
            model.theta[:] = cand
            trace.append(new_loss)
            if abs(prev - new_loss) < opt.rel_tol * max(1.0, abs(prev)):
                break
            prev = new_loss
        n = min(len(trace), len(res.objective_trace))
        assert np.allclose(res.objective_trace[:n], trace[:n], rtol=0, atol=1e-12)

    def test_fit_one_iteration_equals_prox_step(self):
        data = small_dataset(16)
        arch = Architecture(hidden_sizes=(3,))
        spec = PenaltySpec("group", 0.5)
        model = init_model(3, 2, arch, SeededRng(5))
        opt = OptimizerConfig(max_iters=1, backtracking=False, initial_step=1e-4)
        res = fit(data, spec, arch, opt, seed=5)
        stepped, _ = prox_step(model, data, spec, 1e-4)
        assert np.array_equal(res.model.theta, stepped.theta)


class TestWarmStart:
    def test_converged_restart_takes_one_iteration(self):
        data = small_dataset(20)
        spec = PenaltySpec("group", 3.0)
        opt = OptimizerConfig()
        first = fit(data, spec, Architecture(hidden_sizes=(3,)), opt, seed=1)
        assert first.converged
        again = warm_start_fit(first, data, spec, opt)
        assert again.iterations_run == 1
        assert again.converged

    def test_matches_cold_start_objective(self):
        # run both to tight convergence on a convex (linear) instance, where
        # the optimum is unique and the comparison is well posed
        data = small_dataset(21)
        opt = OptimizerConfig(rel_tol=1e-12, max_iters=100_000)
        arch = Architecture(hidden_sizes=())
        hi = fit(data, PenaltySpec("group", 4.0), arch, opt, seed=2)
        lo_warm = warm_start_fit(hi, data, PenaltySpec("group", 2.0), opt)
        lo_cold = fit(data, PenaltySpec("group", 2.0), arch, opt, seed=2)
        a, b = lo_warm.objective_trace[-1], lo_cold.objective_trace[-1]
        assert abs(a - b) / max(1.0, abs(b)) < 1e-4

    def test_architecture_mismatch_rejected(self):
        data = small_dataset(22)
        res = fit(data, PenaltySpec("group", 1.0), Architecture(hidden_sizes=(2,)),
                  OptimizerConfig(max_iters=20), seed=0)
        other = build_lagged(standardize(
            VarGenConfig(p=4, K=2, burn_in=20).generate(40, 0)[0])[0], 2, 0)
        with pytest.raises(ValueError, match="mismatch"):
            warm_start_fit(res, other, PenaltySpec("group", 1.0), OptimizerConfig())

    def test_sparsity_monotone_on_linear_path(self):
        # convex case: active group count never grows as lambda rises
        ts = standardize(VarGenConfig(p=5, K=2, burn_in=100).generate(300, 3)[0])[0]
        data = build_lagged(ts, 2, 0)
        from ngcausal.evaluation import lambda_max_linear, lambda_grid
        lams = lambda_grid(lambda_max_linear(ts, 2), 8, 50.0)
        arch = Architecture(hidden_sizes=())
        opt = OptimizerConfig()
        counts = []
        prev = None
        from ngcausal.model import granger_weights
        for lam in lams:
            spec = PenaltySpec("group", float(lam))
            prev = (fit(data, spec, arch, opt, seed=0) if prev is None
                    else warm_start_fit(prev, data, spec, opt))
            counts.append(int((granger_weights(prev.model) > 0).sum()))
        # lams descend, so counts must be non-decreasing along the sweep
        assert all(b >= a for a, b in zip(counts, counts[1:]))


class TestKktLinearCase:
    def test_group_lasso_optimality_conditions(self):
        # K=1, no hidden layers: compare against a high-precision independent
        # proximal solve, then check the stationarity structure of both
        ts = standardize(VarGenConfig(p=4, K=1, burn_in=100).generate(250, 5)[0])[0]
        data = build_lagged(ts, 1, 0)
        X, y = data.inputs, data.targets
        lam = 0.25 * 2.0 * max(np.linalg.norm(X[:, [j]].T @ (y - y.mean()))
                               for j in range(4))

        res = fit(data, PenaltySpec("group", lam), Architecture(hidden_sizes=()),
                  OptimizerConfig(rel_tol=1e-14, max_iters=200_000), seed=0)

        # independent fixed-step reference solve
        w = np.zeros(4)
        b = 0.0
        L = 2.0 * np.linalg.norm(X, ord=2) ** 2 + 2.0 * X.shape[0]
        eta = 1.0 / L
        for _ in range(150_000):
            r = X @ w + b - y
            gw = 2.0 * X.T @ r
            gb = 2.0 * r.sum()
            w_new = w - eta * gw
            for j in range(4):
                w_new[j] = prox_group_block(np.array([w_new[j]]), eta * lam)[0]
            b = b - eta * gb
            w = w_new
        ref_obj = float((X @ w + b - y) @ (X @ w + b - y)) + lam * np.abs(w).sum()

        assert abs(res.objective_trace[-1] - ref_obj) <= 1e-6 * max(1.0, ref_obj)
        fitted_w = res.model.weight(0)[0]
        assert np.array_equal(fitted_w != 0, w != 0)

        # KKT: inactive groups have |correlation| <= lam; active ones equal lam
        r = X @ fitted_w + res.model.bias(0)[0] - y
        corr = 2.0 * X.T @ r
        for j in range(4):
            if fitted_w[j] == 0:
                assert abs(corr[j]) <= lam * (1 + 1e-3)
            else:
                assert abs(abs(corr[j]) - lam) <= 1e-3 * lam


class TestOptimizerConfigValidation:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            OptimizerConfig(initial_step=0.0)
        with pytest.raises(ValueError):
            OptimizerConfig(backtrack_factor=1.0)
        with pytest.raises(ValueError):
            OptimizerConfig(min_step=1.0, initial_step=0.5)
        with pytest.raises(ValueError):
            OptimizerConfig(rel_tol=0.0)

    def test_fit_result_fields(self):
        data = small_dataset(30)
        res = fit(data, PenaltySpec("none", 0.0), Architecture(hidden_sizes=()),
                  OptimizerConfig(max_iters=10), seed=0)
        assert isinstance(res, FitResult)
        assert res.objective_trace.shape == (res.iterations_run + 1,)
        assert res.final_step > 0
