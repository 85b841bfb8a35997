"""The measure-reconstruct-plan loop."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import (
    DEFAULT_CLAMP,
    ConfidenceMap,
    EvidenceMap,
    GroundTruthMap,
    entropy_loss_vector,
    _check_same,
)
from .planner import PLANNERS, PlanProblem
from .raycast import RayBundle, SensorPose, apply_measurements, ray_coverages, synthesize_many
from .reconstruction import (
    LocalGridSpec,
    MappingModel,
    extract_local_labels,
    extract_local_map,
    predict,
    splat_to_global,
)

POLICIES = ("random", "greedy", "prioritized")


@dataclass(frozen=True)
class Trajectory:
    poses: tuple[SensorPose, ...]
    horizon: int = 5
    max_step: float | None = None

    def __post_init__(self):
        poses = tuple(self.poses)
        if not poses:
            raise ValueError("trajectory needs at least one pose")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.max_step is not None:
            p = np.array([q.position for q in poses])
            steps = np.linalg.norm(np.diff(p, axis=0), axis=1)
            if steps.size and steps.max() > self.max_step + 1e-9:
                raise ValueError(f"consecutive poses {steps.max():.3f} m apart "
                                 f"exceed max_step {self.max_step}")
        object.__setattr__(self, "poses", poses)

    def __len__(self):
        return len(self.poses)


@dataclass(frozen=True)
class EpisodeConfig:
    budget: int = 50
    bundle: RayBundle = field(default_factory=RayBundle)
    max_range: float = 12.0
    planner: str = "prioritized"
    seed: int = 0
    local: LocalGridSpec = field(default_factory=LocalGridSpec)
    freespace_on_miss: bool = False
    clamp: float = DEFAULT_CLAMP
    include_self: bool = True

    def __post_init__(self):
        if self.planner not in POLICIES:
            raise ValueError(f"planner must be one of {POLICIES}, got {self.planner!r}")
        if not 1 <= self.budget <= self.bundle.count:
            raise ValueError(f"budget {self.budget} must be in [1, {self.bundle.count}]")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> EpisodeConfig:
        d = dict(d)
        if "bundle" in d and isinstance(d["bundle"], dict):
            d["bundle"] = RayBundle(**d["bundle"])
        if "local" in d and isinstance(d["local"], dict):
            loc = {k: tuple(v) if isinstance(v, list) else v for k, v in d["local"].items()}
            d["local"] = LocalGridSpec(**loc)
        return cls(**d)


@dataclass
class EpisodeResult:
    confidence: ConfidenceMap
    evidence: EvidenceMap
    fired: list[np.ndarray]
    planned_losses: list[float]
    prior_losses: list[float]
    evaluations: list[int]
    measured_fraction: float
    plan_seconds: list[float] = field(default_factory=list)
    pairs: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        """Deterministic summary; wall-clock lives in ``plan_seconds`` only."""
        return {
            "steps": len(self.fired),
            "fired": [a.tolist() for a in self.fired],
            "planned_losses": [float(v) for v in self.planned_losses],
            "prior_losses": [float(v) for v in self.prior_losses],
            "evaluations": [int(v) for v in self.evaluations],
            "measured_fraction": float(self.measured_fraction),
            "confidence_sum": float(np.sum(self.confidence.values)),
        }

    def dumps(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def plan_problem(Yhat: ConfidenceMap, poses, bundle: RayBundle, budget: int,
                 max_range: float, include_self: bool = True) -> PlanProblem:
    """Every bundle direction at every pose; ray id = position * bundle size + direction."""
    eps = entropy_loss_vector(Yhat)
    dirs = bundle.directions()
    rays, positions = [], []
    for l, pose in enumerate(poses):
        rays += ray_coverages(Yhat, pose, pose.to_world(dirs), max_range, include_self)
        positions += [l] * bundle.count
    return PlanProblem.from_rays(eps, rays, positions, budget, len(poses))


def run_episode(world: GroundTruthMap, traj: Trajectory, model: MappingModel,
                cfg: EpisodeConfig, collect: bool = False) -> EpisodeResult:
    """Fire, measure, reconstruct, re-plan, for each pose of ``traj``.

    The first pose fires ``budget`` uniformly random directions; afterwards
    each pose fires the rays planned for it at the previous step
    (``cfg.planner == "random"`` keeps drawing random directions). With
    ``collect`` the local ``(x_l, y_l)`` training pairs are kept.
    """
    grid = world.grid
    rng = np.random.default_rng(cfg.seed)
    dirs = cfg.bundle.directions()
    X = EvidenceMap.empty(grid)
    Yhat = ConfidenceMap.zeros(grid)
    next_rays = np.sort(rng.choice(cfg.bundle.count, cfg.budget, replace=False))
    fired, planned, prior, evals, secs, pairs = [], [], [], [], [], []
    n = len(traj)
    for l, pose in enumerate(traj.poses):
        fired.append(next_rays)
        ms = synthesize_many(world, pose.position, pose.to_world(dirs[next_rays]),
                             cfg.max_range, ray_ids=next_rays)
        X = apply_measurements(X, ms, cfg.freespace_on_miss)
        x_l = extract_local_map(X, pose, cfg.local)
        y_hat = predict(model, x_l)
        Yhat = splat_to_global(Yhat, y_hat, pose, cfg.local, cfg.clamp)
        if collect:
            pairs.append((x_l, extract_local_labels(world, pose, cfg.local)))
        if l + 1 >= n:
            break
        if cfg.planner == "random":
            next_rays = np.sort(rng.choice(cfg.bundle.count, cfg.budget, replace=False))
            continue
        future = traj.poses[l + 1:l + 1 + traj.horizon]
        problem = plan_problem(Yhat, future, cfg.bundle, cfg.budget, cfg.max_range,
                               cfg.include_self)
        t0 = time.perf_counter()
        result = PLANNERS[cfg.planner](problem)
        secs.append(time.perf_counter() - t0)
        planned.append(result.cost)
        prior.append(problem.total_loss)
        evals.append(result.evaluations)
        next_rays = np.sort(np.asarray(result.selected[0], np.int64))
    return EpisodeResult(Yhat, X, fired, planned, prior, evals, X.measured_fraction(),
                         secs, pairs)


def check_compatible(world: GroundTruthMap, other) -> None:
    _check_same(world.grid, other.grid)
