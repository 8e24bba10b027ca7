from src.sddp.policy import Cut, CutPool, Policy, TrainingRecord, load_policy, save_policy
from src.sddp.train import (
    ROOT_PROFILE, DualUnavailableError, SddpModel, SimulationResult, SolverError, SubproblemInfeasibleError,
    TrainOptions, Trajectory, backward_pass, check_stopping, enumerate_paths, evaluate_policy_exhaustive,
    forward_pass, load_warm_start, sample_path, simulate_policy, train,
)

__all__ = [
    "Cut", "CutPool", "DualUnavailableError", "Policy", "ROOT_PROFILE", "SddpModel", "SimulationResult",
    "SolverError", "SubproblemInfeasibleError", "TrainOptions", "TrainingRecord", "Trajectory", "backward_pass",
    "check_stopping", "enumerate_paths", "evaluate_policy_exhaustive", "forward_pass", "load_policy",
    "load_warm_start", "sample_path", "save_policy", "simulate_policy", "train",
]
