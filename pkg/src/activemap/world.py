"""Procedural voxel worlds (ground, boxes, poles) and straight trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .grid import EMPTY, OCCUPIED, UNKNOWN, GroundTruthMap, VoxelGrid
from .raycast import SensorPose


@dataclass(frozen=True)
class SceneSpec:
    grid: VoxelGrid = field(default_factory=lambda: VoxelGrid((96, 96, 24), 0.25))
    ground_layer: int = 2
    object_density: float = 0.02  # objects per square meter
    box_fraction: float = 0.6
    box_size: tuple[float, float] = (1.0, 3.0)
    box_height: tuple[float, float] = (1.0, 4.0)
    pole_radius: tuple[float, float] = (0.2, 0.6)
    pole_height: tuple[float, float] = (1.5, 5.0)
    # objects stay clear of the band |y - center| < corridor_halfwidth
    corridor_halfwidth: float = 2.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"dims": list(self.grid.dims), "resolution": self.grid.resolution,
                     "origin": list(self.grid.origin)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SceneSpec:
        d = dict(d)
        if "grid" in d:
            d["grid"] = VoxelGrid(**d["grid"])
        for k in ("box_size", "box_height", "pole_radius", "pole_height"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


def generate_world(spec: SceneSpec, seed: int) -> GroundTruthMap:
    """Ground plane plus seeded boxes and vertical cylinders.

    Layers below ``ground_layer`` are unknown, the ground layer is occupied,
    air is empty, and objects are solid from the ground up.
    """
    g = spec.grid
    nx, ny, nz = g.dims
    res = g.resolution
    rng = np.random.default_rng(seed)
    vol = np.full((nx, ny, nz), EMPTY, np.int8)
    gl = min(spec.ground_layer, nz - 1)
    vol[:, :, :gl] = UNKNOWN
    vol[:, :, gl] = OCCUPIED

    ext = g.extent
    area = ext[0] * ext[1]
    n_obj = int(rng.poisson(spec.object_density * area))
    cx = g.origin[0] + (np.arange(nx) + 0.5) * res
    cy = g.origin[1] + (np.arange(ny) + 0.5) * res
    cz = g.origin[2] + (np.arange(nz) + 0.5) * res
    ground_top = g.origin[2] + (gl + 1) * res
    mid_y = g.origin[1] + ext[1] / 2
    X, Y = np.meshgrid(cx, cy, indexing="ij")

    placed = 0
    attempts = 0
    while placed < n_obj and attempts < 50 * max(n_obj, 1):
        attempts += 1
        is_box = rng.random() < spec.box_fraction
        if is_box:
            sx, sy = rng.uniform(*spec.box_size, size=2)
            h = rng.uniform(*spec.box_height)
            half_y = sy / 2
        else:
            rad = rng.uniform(*spec.pole_radius)
            h = rng.uniform(*spec.pole_height)
            half_y = rad
        px = rng.uniform(g.origin[0], g.origin[0] + ext[0])
        py = rng.uniform(g.origin[1], g.origin[1] + ext[1])
        if abs(py - mid_y) < spec.corridor_halfwidth + half_y:
            continue
        if is_box:
            foot = (np.abs(X - px) <= sx / 2) & (np.abs(Y - py) <= sy / 2)
        else:
            foot = (X - px) ** 2 + (Y - py) ** 2 <= rad ** 2
        zmask = (cz > ground_top - res) & (cz < ground_top + h)
        zmask[:gl + 1] = False
        vol[foot[:, :, None] & zmask[None, None, :]] = OCCUPIED
        placed += 1
    return GroundTruthMap(g, g.flatten(vol))


def straight_trajectory(grid: VoxelGrid, n_poses: int = 10, step: float = 1.5,
                        start: float = 2.0, height: float = 1.5, ground_layer: int = 2,
                        yaw: float = 0.0) -> list[SensorPose]:
    """Poses along +x through the middle of the grid, ``height`` above the ground.

    Positions snap to voxel centers so no ray starts on a voxel boundary.
    """
    z = grid.origin[2] + (ground_layer + 1) * grid.resolution + height
    y = grid.origin[1] + grid.extent[1] / 2
    pts = np.array([[grid.origin[0] + start + k * step, y, z] for k in range(n_poses)])
    centers = grid.voxel_center(grid.world_to_voxel(pts))
    return [SensorPose(tuple(c), yaw=yaw) for c in centers]
