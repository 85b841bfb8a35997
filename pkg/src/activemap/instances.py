"""Seeded plan-problem generators shared by tests, benchmarks and the CLI."""
from __future__ import annotations

import numpy as np

from .grid import VoxelGrid, ConfidenceMap, entropy_loss_vector
from .planner import PlanProblem
from .raycast import RayBundle, SensorPose, ray_coverages


def random_problem(rng: np.random.Generator, n_positions: int, rays_per_position: int,
                   n_voxels: int, budget: int, ray_length=(1, 8), quantized: bool = False):
    """Random sparse instance.

    ``quantized`` draws p and epsilon from a few levels so exact ties are
    common, which exercises the tie-breaking paths.
    """
    n_rays = n_positions * rays_per_position
    lo, hi = ray_length
    hi = min(hi, n_voxels)
    lo = min(lo, hi)
    lengths = rng.integers(lo, hi + 1, size=n_rays)
    indptr = np.zeros(n_rays + 1, np.int64)
    np.cumsum(lengths, out=indptr[1:])
    indices = np.concatenate([np.sort(rng.choice(n_voxels, size=k, replace=False))
                              for k in lengths]) if n_rays else np.zeros(0, np.int64)
    if quantized:
        values = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=indices.shape[0])
        eps = rng.choice([0.5, 1.0], size=n_voxels)
    else:
        values = rng.random(indices.shape[0])
        eps = rng.random(n_voxels)
    positions = np.repeat(np.arange(n_positions), rays_per_position)
    return PlanProblem(eps, indptr, indices.astype(np.int64), values, positions,
                       n_positions, budget)


def tiny_problem(rng: np.random.Generator) -> PlanProblem:
    """Brute-force sized: L <= 3, K <= 2, at most 12 rays, at most 64 voxels."""
    L = int(rng.integers(1, 4))
    K = int(rng.integers(1, 3))
    per = int(rng.integers(1, 12 // L + 1))
    V = int(rng.integers(2, 65))
    return random_problem(rng, L, per, V, K, ray_length=(1, min(V, 10)))


def scene_problem(seed: int, n_positions: int = 5, rays_per_position: int = 1000,
                  size: int = 32, budget: int = 50, max_range: float = 8.0) -> PlanProblem:
    """Planning instance on a generated world with a noisy confidence map.

    A straight trajectory crosses a ``size``^3 world; the confidence is the
    ground truth scaled and perturbed, so entropy concentrates on surfaces.
    """
    from .world import SceneSpec, generate_world

    rng = np.random.default_rng(seed)
    res = 0.25
    grid = VoxelGrid((size, size, size), res)
    world = generate_world(SceneSpec(grid=grid, object_density=0.05, ground_layer=2,
                                     corridor_halfwidth=1.0), seed)
    noise = rng.normal(0.0, 1.5, grid.size)
    conf = ConfidenceMap(grid, 1.5 * world.labels + noise)
    eps = entropy_loss_vector(conf)
    h = int(np.ceil(np.sqrt(rays_per_position * 4 / 3)))
    v = int(np.ceil(rays_per_position / h))
    dirs = RayBundle(120.0, 90.0, h, v).directions()[:rays_per_position]
    extent = size * res
    rays, positions = [], []
    for l in range(n_positions):
        x = extent * (0.15 + 0.7 * l / max(n_positions - 1, 1))
        pose = SensorPose((x, extent / 2, 1.5), yaw=float(rng.uniform(-0.3, 0.3)))
        rays += ray_coverages(conf, pose, pose.to_world(dirs), max_range)
        positions += [l] * len(dirs)
    return PlanProblem.from_rays(eps, rays, positions, budget, n_positions)
