"""Nonlinear Granger-causal graph discovery from multivariate time series.

One sparsity-penalized MLP is fit per output series; group or hierarchical
group-lasso prox steps drive whole first-layer input groups to exact zero,
which reads off the causal graph (and, hierarchically, the lag order of
each interaction).  Includes seeded VAR and Lorenz-96 generators and an
ROC/AUC sweep harness.
"""

from ._kernels import backend_name
from .numerics import SeededRng, child_seed, finite_diff_grad, gauss_sample, matvec
from .datasets import (LorenzConfig, LorenzGenConfig, SimulationError,
                       VarGenConfig, VarProcess, companion_matrix,
                       lorenz_derivative, lorenz_truth, make_sparse_var,
                       simulate_lorenz, simulate_var, spectral_radius,
                       standardize)
from .model import (Architecture, ComponentMLP, LaggedDataset, build_lagged,
                    forward, grad, granger_weights, init_model, loss,
                    loss_and_grad, predict)
from .penalties import (PenaltySpec, apply_prox, penalty_value,
                        prox_group_block, prox_hierarchical_column)
from .optim import (FitResult, OptimizationError, OptimizerConfig, fit,
                    objective, prox_step, warm_start_fit)
from .evaluation import (DegenerateTruthError, ExperimentResult, SweepResult,
                         assemble_graph, auc, edge_rates, lag_profile,
                         lambda_grid, lambda_max_linear, roc_points,
                         roc_points_scores, run_experiment, sweep_path)

__version__ = "0.1.0"

__all__ = [
    "Architecture", "ComponentMLP", "DegenerateTruthError", "ExperimentResult",
    "FitResult", "LaggedDataset", "LorenzConfig", "LorenzGenConfig",
    "OptimizationError", "OptimizerConfig", "PenaltySpec", "SeededRng",
    "SimulationError", "SweepResult", "VarGenConfig", "VarProcess",
    "apply_prox", "assemble_graph", "auc", "backend_name", "build_lagged",
    "child_seed", "companion_matrix", "edge_rates", "finite_diff_grad", "fit",
    "forward", "gauss_sample", "grad", "granger_weights", "init_model",
    "lag_profile", "lambda_grid", "lambda_max_linear", "lorenz_derivative",
    "lorenz_truth", "loss", "loss_and_grad", "make_sparse_var", "matvec",
    "objective", "penalty_value", "predict", "prox_group_block",
    "prox_hierarchical_column", "prox_step", "roc_points", "roc_points_scores",
    "run_experiment", "simulate_lorenz", "simulate_var", "spectral_radius",
    "standardize", "sweep_path", "warm_start_fit",
]
