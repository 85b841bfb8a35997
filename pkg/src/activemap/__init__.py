"""Voxel active 3D mapping: bounded greedy ray planning with learned map densification."""
from .grid import (
    ConfidenceMap,
    EvidenceMap,
    GroundTruthMap,
    VoxelGrid,
    class_balanced_weights,
    entropy_loss_vector,
    load_map,
    save_map,
    sigma,
    weighted_logistic_loss,
)
from .planner import PlanProblem, PlanResult, greedy_plan, prioritized_greedy_plan
from .raycast import RayBundle, SensorPose, coverage_probability, traverse
from .reconstruction import MappingModel, TrainConfig, predict, train
from .pipeline import EpisodeConfig, Trajectory, run_episode
from .world import SceneSpec, generate_world, straight_trajectory

__version__ = "0.1.0"

__all__ = [
    "ConfidenceMap",
    "EvidenceMap",
    "GroundTruthMap",
    "VoxelGrid",
    "class_balanced_weights",
    "entropy_loss_vector",
    "load_map",
    "save_map",
    "sigma",
    "weighted_logistic_loss",
    "PlanProblem",
    "PlanResult",
    "greedy_plan",
    "prioritized_greedy_plan",
    "RayBundle",
    "SensorPose",
    "coverage_probability",
    "traverse",
    "MappingModel",
    "TrainConfig",
    "predict",
    "train",
    "EpisodeConfig",
    "Trajectory",
    "run_episode",
    "SceneSpec",
    "generate_world",
    "straight_trajectory",
]
