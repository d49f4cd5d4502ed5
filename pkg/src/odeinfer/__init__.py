"""Forward ODE solvers, likelihoods, MCMC and likelihood-surface diagnostics."""
from .adaptive import RK32, RK54, Tolerances, error_norm, initial_step, solve_adaptive
from .core import Dataset, OdeSystem, Trajectory, eval_rhs, sample_trajectory
from .errors import (ConfigError, DataError, DivergenceError, DomainError, InitializationError,
                     OdeInferError, ScanError, SolverError, StepBudgetExceeded, StepSizeUnderflow)
from .fixed import FixedStepConfig, solve_euler
from .inference import (ChainSet, McmcConfig, Prior, metropolis_accept_prob, r_hat,
                        run_adaptive_metropolis)
from .problems import OdeProblem, SirProblem, SolverConfig, solve
from .surface import (JaggednessReport, LikelihoodSurface, jaggedness, scan_likelihood,
                      step_count_jump_correlation, step_size_sensitivity)

__version__ = "0.1.0"

__all__ = [
    "RK32", "RK54", "Tolerances", "error_norm", "initial_step", "solve_adaptive",
    "Dataset", "OdeSystem", "Trajectory", "eval_rhs", "sample_trajectory",
    "ConfigError", "DataError", "DivergenceError", "DomainError", "InitializationError",
    "OdeInferError", "ScanError", "SolverError", "StepBudgetExceeded", "StepSizeUnderflow",
    "FixedStepConfig", "solve_euler",
    "ChainSet", "McmcConfig", "Prior", "metropolis_accept_prob", "r_hat", "run_adaptive_metropolis",
    "OdeProblem", "SirProblem", "SolverConfig", "solve",
    "JaggednessReport", "LikelihoodSurface", "jaggedness", "scan_likelihood",
    "step_count_jump_correlation", "step_size_sensitivity",
]
