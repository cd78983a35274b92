"""Benchmark the numba kernels against the pure-numpy fallback.

Runs every hot kernel on a small and a production-sized problem under both
backends, checks they agree, and times an end-to-end penalized fit under the
active backend (set NGCAUSAL_BACKEND=numpy or =numba and rerun to compare
the full pipeline).
"""

import time

import numpy as np

from ngcausal import _kernels as kernels
from ngcausal.datasets import VarGenConfig, standardize
from ngcausal.model import Architecture, build_lagged
from ngcausal.optim import OptimizerConfig, fit
from ngcausal.penalties import PenaltySpec


def build_problem(N, p, K, H, seed=0):
    gen = np.random.default_rng(seed)
    dims = np.array([p * K, H, 1], dtype=np.int64)
    w_off, b_off = [], []
    off = 0
    for l in range(2):
        w_off.append(off)
        off += dims[l + 1] * dims[l]
        b_off.append(off)
        off += dims[l + 1]
    theta = gen.normal(scale=0.3, size=off)
    X = gen.normal(size=(N, p * K))
    y = gen.normal(size=N)
    return (theta, dims, np.array(w_off, dtype=np.int64),
            np.array(b_off, dtype=np.int64), X, y)


def timeit(fn, reps):
    fn()  # warm (JIT compile / cache touch)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return 1e6 * (time.perf_counter() - t0) / reps


def bench_kernels(N, p, K, H, reps):
    theta, dims, w_off, b_off, X, y = build_problem(N, p, K, H)
    grad = np.zeros_like(theta)
    w1 = theta[:H * p * K].reshape(H, p * K).copy()
    print(f"\nproblem: N={N}, p={p}, K={K}, hidden={H}  ({reps} reps)")
    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name in kernels.IMPLS))
    rows = {
        "mlp_loss": lambda f: f(theta, dims, w_off, b_off, kernels.ACT_TANH, X, y),
        "mlp_loss_grad": lambda f: f(theta, dims, w_off, b_off, kernels.ACT_TANH,
                                     X, y, grad),
        "group_norms": lambda f: f(w1, p, K),
        "lag_norms": lambda f: f(w1, p, K),
        "prox_group": lambda f: f(w1.copy(), p, K, 0.05),
        "prox_hier": lambda f: f(w1.copy(), p, K, 0.05),
    }
    for name, call in rows.items():
        times = [timeit(lambda f=impls[name]: call(f), reps)
                 for impls in kernels.IMPLS.values()]
        print(f"{name:<16}" + "".join(f"{t:>10.1f}us" for t in times))

    # agreement check
    g1 = np.zeros_like(theta)
    g2 = np.zeros_like(theta)
    losses = []
    for backend, impls in kernels.IMPLS.items():
        g = g1 if backend == "numpy" else g2
        losses.append(impls["mlp_loss_grad"](theta, dims, w_off, b_off,
                                             kernels.ACT_TANH, X, y, g))
    if len(losses) == 2:
        print(f"cross-backend: |loss diff| = {abs(losses[0] - losses[1]):.3g}, "
              f"max |grad diff| = {np.abs(g1 - g2).max():.3g}")


def bench_fit():
    ts = standardize(VarGenConfig(p=10, K=3).generate(1000, 0)[0])[0]
    data = build_lagged(ts, 3, 0)
    arch = Architecture(hidden_sizes=(10,))
    opt = OptimizerConfig(rel_tol=1e-5, max_iters=400)

    def one_fit():
        fit(data, PenaltySpec("group", 200.0), arch, opt, seed=0)

    t = timeit(one_fit, 3)
    print(f"\nend-to-end fit (backend={kernels.backend_name()}): {t / 1e6:.3f} s "
          f"per fit (T=1000, p=10, K=3, width 10, 400 iters cap)")


if __name__ == "__main__":
    print(f"active backend: {kernels.backend_name()} "
          f"(backends available: {', '.join(kernels.IMPLS)})")
    bench_kernels(N=64, p=10, K=3, H=10, reps=300)
    bench_kernels(N=1000, p=10, K=3, H=10, reps=300)
    bench_fit()
