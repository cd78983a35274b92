"""Synthetic ground-truthed time series: sparse stable VAR and Lorenz-96.

Time series are plain (T, p) float64 arrays, row t = observation at time t.
Causal ground truth is a (p, p) 0/1 array with entry (i, j) = 1 when series j
drives series i.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .numerics import SeededRng, gauss_sample


class SimulationError(RuntimeError):
    """A generator produced a diverging or otherwise unusable trajectory."""


# --------------------------------------------------------------------- VAR


@dataclass
class VarProcess:
    """A linear autoregressive system with known sparsity structure.

    coeffs has shape (K, p, p): coeffs[k] maps the state k+1 steps back onto
    the present.  truth(i, j) = 1 iff coeffs[k][i, j] != 0 for some k.
    """

    coeffs: np.ndarray
    noise_sigma: float
    truth: np.ndarray

    @property
    def p(self):
        return self.coeffs.shape[1]

    @property
    def K(self):
        return self.coeffs.shape[0]


def companion_matrix(coeffs):
    """Stack lag matrices into the (p*K, p*K) one-step companion form."""
    K, p, _ = coeffs.shape
    C = np.zeros((p * K, p * K))
    C[:p, :] = np.concatenate(list(coeffs), axis=1)
    if K > 1:
        C[p:, :-p] = np.eye(p * (K - 1))
    return C


def spectral_radius(M):
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def make_sparse_var(rng, p, K, edge_prob=0.2, magnitude=0.1,
                    target_radius=0.95, noise_sigma=0.1):
    """Draw a sparse stable VAR system with a known causal graph.

    Every diagonal entry is active (self-dependence); each off-diagonal edge
    (i, j) is active with probability edge_prob.  An active edge carries the
    same signed magnitude at all K lags (one sign flip per edge).  All
    coefficients are then rescaled by a common factor so the companion
    spectral radius hits target_radius exactly.
    """
    if not (0 < edge_prob <= 1):
        raise ValueError(f"edge_prob must be in (0, 1], got {edge_prob}")
    if not (0 < target_radius < 1):
        raise ValueError(f"target_radius must be in (0, 1), got {target_radius}")
    if magnitude <= 0:
        raise ValueError(f"magnitude must be > 0, got {magnitude}")
    if noise_sigma <= 0:
        raise ValueError(f"noise_sigma must be > 0, got {noise_sigma}")

    adjacency = (rng.gen.random((p, p)) < edge_prob).astype(np.float64)
    np.fill_diagonal(adjacency, 1.0)
    signs = np.where(rng.gen.random((p, p)) < 0.5, -1.0, 1.0)
    base = adjacency * signs * magnitude
    coeffs = np.repeat(base[np.newaxis, :, :], K, axis=0)

    if not np.any(coeffs):
        raise ValueError("cannot rescale an all-zero coefficient set")

    def radius_at(scale):
        return spectral_radius(companion_matrix(scale * coeffs)) - target_radius

    hi = 1.0
    while radius_at(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("failed to bracket the target spectral radius")
    scale = brentq(radius_at, 0.0, hi, xtol=1e-13, rtol=1e-15)
    coeffs = scale * coeffs

    truth = (np.abs(coeffs) > 0).any(axis=0).astype(np.float64)
    return VarProcess(coeffs=coeffs, noise_sigma=noise_sigma, truth=truth)


def simulate_var(proc, T, rng, burn_in=200, init=None):
    """Iterate the VAR recursion and return the last T rows.

    The raw trajectory starts from K history rows (zeros, or ``init`` with
    shape (K, p) as a test hook), generates burn_in + T rows total, and
    drops the first burn_in.  Requires burn_in + T > K.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    p, K = proc.p, proc.K
    total = burn_in + T
    if total < K:
        raise ValueError(f"burn_in + T = {total} is below the lag order {K}")
    x = np.zeros((total, p))
    if init is not None:
        init = np.asarray(init, dtype=np.float64)
        if init.shape != (K, p):
            raise ValueError(f"init must have shape ({K}, {p}), got {init.shape}")
        x[:K] = init
    noise = gauss_sample(rng, (total - K) * p, proc.noise_sigma).reshape(total - K, p)
    for t in range(K, total):
        acc = noise[t - K]
        for k in range(K):
            acc = acc + proc.coeffs[k] @ x[t - 1 - k]
        x[t] = acc
        if np.any(np.abs(acc) > 1e8):
            raise SimulationError(f"VAR trajectory overflowed at step {t}; process is unstable")
    return x[burn_in:]


# ----------------------------------------------------------------- Lorenz-96


def lorenz_derivative(x, F):
    """Ring-coupled drift d_i = (x_{i+1} - x_{i-2}) * x_{i-1} - x_i + F."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 4:
        raise ValueError(f"need at least 4 coordinates, got {x.shape[0]}")
    return (np.roll(x, -1) - np.roll(x, 2)) * np.roll(x, 1) - x + F


def lorenz_truth(p):
    """Causal graph of the ring dynamics: row i links to i-2, i-1, i, i+1."""
    truth = np.zeros((p, p))
    for i in range(p):
        for j in (i - 2, i - 1, i, i + 1):
            truth[i, j % p] = 1.0
    return truth


@dataclass
class LorenzConfig:
    """Euler-discretized Lorenz-96 generator settings."""

    p: int = 10
    F: float = 5.0
    dt: float = 0.01
    noise_sigma: float = 0.01
    burn_in: int = 1000


def simulate_lorenz(cfg, T, rng, init=None):
    """Euler-step the Lorenz-96 ring and return (series, truth graph).

    x_{t+1} = x_t + dt * drift(x_t) + e_t with e_t ~ Normal(0, sigma^2 I).
    The initial state is the equilibrium F plus a small seeded perturbation
    (std 0.01); ``init`` overrides it as a test hook.  burn_in rows are
    discarded before the T returned rows.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if cfg.p < 4:
        raise ValueError(f"p must be >= 4, got {cfg.p}")
    if cfg.dt <= 0:
        raise ValueError(f"dt must be > 0, got {cfg.dt}")
    if cfg.noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {cfg.noise_sigma}")

    p = cfg.p
    if init is not None:
        state = np.asarray(init, dtype=np.float64).copy()
        if state.shape != (p,):
            raise ValueError(f"init must have shape ({p},), got {state.shape}")
    else:
        state = cfg.F + gauss_sample(rng, p, 0.01)

    total = cfg.burn_in + T
    out = np.empty((total, p))
    noise = gauss_sample(rng, total * p, cfg.noise_sigma).reshape(total, p)
    for t in range(total):
        state = state + cfg.dt * lorenz_derivative(state, cfg.F) + noise[t]
        if np.any(np.abs(state) > 1e8):
            raise SimulationError(f"Lorenz trajectory diverged at step {t}")
        out[t] = state
    return out[cfg.burn_in:], lorenz_truth(p)


# ------------------------------------------------------------ preprocessing


def standardize(ts):
    """Center each column and scale to unit population std.

    Returns (standardized, mean, std) so the transform can be inverted.
    """
    ts = np.asarray(ts, dtype=np.float64)
    mean = ts.mean(axis=0)
    std = ts.std(axis=0)
    bad = np.flatnonzero(std == 0)
    if bad.size:
        raise ValueError(f"zero-variance column(s) {bad.tolist()}: cannot standardize")
    return (ts - mean) / std, mean, std


# ------------------------------------------------- experiment-facing configs


@dataclass
class VarGenConfig:
    """VAR generator settings for experiment runs (seed supplied per run)."""

    p: int = 10
    K: int = 3
    edge_prob: float = 0.2
    magnitude: float = 0.1
    target_radius: float = 0.95
    noise_sigma: float = 0.1
    burn_in: int = 200

    def generate(self, T, seed):
        rng = SeededRng(seed)
        proc = make_sparse_var(rng, self.p, self.K, self.edge_prob,
                               self.magnitude, self.target_radius,
                               self.noise_sigma)
        ts = simulate_var(proc, T, rng, burn_in=self.burn_in)
        return ts, proc.truth


@dataclass
class LorenzGenConfig:
    """Lorenz-96 generator settings for experiment runs."""

    p: int = 10
    F: float = 5.0
    dt: float = 0.01
    noise_sigma: float = 0.01
    burn_in: int = 1000

    def generate(self, T, seed):
        cfg = LorenzConfig(p=self.p, F=self.F, dt=self.dt,
                           noise_sigma=self.noise_sigma, burn_in=self.burn_in)
        return simulate_lorenz(cfg, T, SeededRng(seed))
