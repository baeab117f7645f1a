"""Primal-dual prox methods for non-smooth regularized empirical risk minimization."""

from .losses import LossSpec, BilinearForm, bilinear_build, lipschitz_c, primal_loss_value
from .numerics import Dataset, read_libsvm, write_libsvm, thin_svd, data_radius
from .projections import Box, BoxLinear, L2Ball, DualDomain, project_dual_domain
from .regularizers import (
    L1, L2Norm, LInf, SquaredL2Half, GroupLasso, L21Rows, L1InfRows,
    ExclusiveLasso, TraceNorm, CompositeV, reg_value, reg_prox, reg_conjugate,
)
from .solvers import (
    SaddleProblem, SolverConfig, SingleStep, TwoStep, Solution, SolverTrace, TraceRecord,
    build_erm_problem, augment_bias, solve, solve_pdprox_dual, solve_pdprox_primal,
    primal_objective, dual_objective, duality_gap, default_step_size,
    BallDomain, BoxDomain, STEP_RATIO_GRID, STEP_SCALE_GRID,
)
from .baselines import solve_pegasos, solve_subgradient
from .completion import TripletData, build_matrix_completion_problem, read_triplets
from .synthetic import gen_synthetic

__version__ = "0.1.0"

__all__ = [
    "LossSpec", "BilinearForm", "bilinear_build", "lipschitz_c", "primal_loss_value",
    "Dataset", "read_libsvm", "write_libsvm", "thin_svd", "data_radius",
    "Box", "BoxLinear", "L2Ball", "DualDomain", "project_dual_domain",
    "L1", "L2Norm", "LInf", "SquaredL2Half", "GroupLasso", "L21Rows", "L1InfRows",
    "ExclusiveLasso", "TraceNorm", "CompositeV", "reg_value", "reg_prox", "reg_conjugate",
    "SaddleProblem", "SolverConfig", "SingleStep", "TwoStep", "Solution", "SolverTrace",
    "TraceRecord", "build_erm_problem", "augment_bias", "solve", "solve_pdprox_dual",
    "solve_pdprox_primal", "primal_objective", "dual_objective", "duality_gap",
    "default_step_size", "BallDomain", "BoxDomain", "STEP_RATIO_GRID", "STEP_SCALE_GRID",
    "solve_pegasos", "solve_subgradient", "TripletData", "build_matrix_completion_problem",
    "read_triplets", "gen_synthetic",
]
