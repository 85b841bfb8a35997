"""Alternating planning and learning: retrain the mapping model on data its own plans produce."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .pipeline import EpisodeConfig, run_episode
from .reconstruction import MappingModel, TrainConfig, make_examples, mean_loss, train


@dataclass
class LearningResult:
    models: list[MappingModel]
    val_losses: list[float]
    train_losses: list[list[float]] = field(default_factory=list)

    @property
    def final(self) -> MappingModel:
        return self.models[-1]


def collect_pairs(worlds, model: MappingModel, cfg: EpisodeConfig, planner: str):
    """Local training pairs from one episode per world, seeded by world index."""
    pairs = []
    for i, (world, traj) in enumerate(worlds):
        c = replace(cfg, planner=planner, seed=cfg.seed + i)
        pairs += run_episode(world, traj, model, c, collect=True).pairs
    return pairs


def validation_loss(model: MappingModel, worlds, cfg: EpisodeConfig) -> float:
    """Weighted logistic loss on pairs gathered by prioritized planning with ``model``."""
    examples = make_examples(collect_pairs(worlds, model, cfg, "prioritized"))
    if not examples:
        raise ValueError("validation worlds produced no usable examples")
    return mean_loss(model, examples)


def learn_active_mapping(train_worlds, val_worlds, episode_cfg: EpisodeConfig,
                         train_cfg: TrainConfig, max_iterations: int = 4,
                         rel_tol: float = 1e-3, init: MappingModel | None = None,
                         verbose=None) -> LearningResult:
    """Train θ⁰ on randomly measured data, then alternate planning and retraining.

    Round t >= 1 regenerates the dataset with the prioritized planner driven by
    the previous model and continues training from it. Stops after
    ``max_iterations`` rounds, or as soon as the validation loss fails to drop
    by ``rel_tol`` relative to the previous round.
    """
    if not train_worlds or not val_worlds:
        raise ValueError("train and validation world sets must be non-empty")
    model = init.copy() if init is not None else MappingModel.zeros()
    pairs = collect_pairs(train_worlds, model, episode_cfg, "random")
    model, tl = train(model, pairs, train_cfg)
    models, trains = [model], [tl]
    vals = [validation_loss(model, val_worlds, episode_cfg)]
    if verbose:
        verbose(f"round 0: train {tl[-1]:.6g} val {vals[-1]:.6g}")
    for t in range(1, max_iterations + 1):
        pairs = collect_pairs(train_worlds, model, episode_cfg, "prioritized")
        model, tl = train(model, pairs, train_cfg)
        v = validation_loss(model, val_worlds, episode_cfg)
        models.append(model)
        trains.append(tl)
        vals.append(v)
        if verbose:
            verbose(f"round {t}: train {tl[-1]:.6g} val {v:.6g}")
        if v > vals[-2] * (1 - rel_tol):
            break
    return LearningResult(models, vals, trains)
