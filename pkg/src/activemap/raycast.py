"""Ray-voxel traversal, synthetic depth measurements and per-ray coverage probabilities."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from . import kernels
from .grid import (
    EMPTY,
    MEASURED_FREE,
    MEASURED_OCCUPIED,
    OCCUPIED,
    UNKNOWN,
    ConfidenceMap,
    EvidenceMap,
    GroundTruthMap,
    VoxelGrid,
    sigma,
)

log = logging.getLogger(__name__)

DEFAULT_OCCUPIED_FRACTION = 1.0 / 3.0


@dataclass(frozen=True)
class SensorPose:
    position: tuple[float, float, float]
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))

    def rotation(self) -> np.ndarray:
        """Sensor-to-world rotation: yaw about z, then pitch about y, then roll about x."""
        return Rotation.from_euler("ZYX", [self.yaw, self.pitch, self.roll]).as_matrix()

    def to_world(self, directions) -> np.ndarray:
        d = np.asarray(directions, dtype=np.float64) @ self.rotation().T
        return d / np.linalg.norm(d, axis=-1, keepdims=True)


@dataclass(frozen=True)
class RayBundle:
    """Evenly discretized field of view; x forward, y left, z up in the sensor frame."""
    h_fov: float = 120.0
    v_fov: float = 60.0
    h_count: int = 40
    v_count: int = 30

    @property
    def count(self) -> int:
        return self.h_count * self.v_count

    def directions(self) -> np.ndarray:
        az = np.deg2rad(-self.h_fov / 2 + (np.arange(self.h_count) + 0.5) * self.h_fov / self.h_count)
        el = np.deg2rad(-self.v_fov / 2 + (np.arange(self.v_count) + 0.5) * self.v_fov / self.v_count)
        a, e = np.meshgrid(az, el, indexing="xy")
        d = np.stack([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)], axis=-1)
        return d.reshape(-1, 3)


@dataclass(frozen=True)
class Ray:
    ray_id: int
    pose_index: int
    direction: tuple[float, float, float]


@dataclass(frozen=True)
class CoverageVector:
    """Miss probabilities p_ij for the voxels a ray crosses, in distance order.

    Voxels not listed implicitly have p_ij = 1.
    """
    indices: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        p = np.asarray(self.p, dtype=np.float64).reshape(-1)
        if idx.shape != p.shape:
            raise ValueError("indices and probabilities differ in length")
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ValueError("coverage probabilities must lie in [0, 1]")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return self.indices.shape[0]

    def dense(self, n_voxels: int) -> np.ndarray:
        out = np.ones(n_voxels)
        out[self.indices] = self.p
        return out


@dataclass(frozen=True)
class Measurement:
    """One synthesized ray. ``traversed`` excludes the sensor's own voxel."""
    ray_id: int
    hit: int | None
    traversed: np.ndarray = field(repr=False)


def _batch_inputs(origins, dirs, max_range):
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    if origins.shape[0] == 1 and dirs.shape[0] > 1:
        origins = np.repeat(origins, dirs.shape[0], axis=0)
    ranges = np.broadcast_to(np.asarray(max_range, dtype=np.float64), (dirs.shape[0],))
    if np.any(ranges <= 0):
        raise ValueError("max_range must be positive")
    return (np.ascontiguousarray(origins), np.ascontiguousarray(dirs),
            np.ascontiguousarray(ranges))


def traverse_many(grid: VoxelGrid, origins, dirs, max_range, backend=None):
    """Traverse many rays at once; returns CSR ``(indptr, indices)``.

    Each ray's voxels are face-adjacent, in increasing distance, start with
    the sensor voxel, and stop at the grid boundary or at the first voxel
    boundary beyond ``max_range``. Rays starting outside the grid are empty.
    """
    o, d, r = _batch_inputs(origins, dirs, max_range)
    k = kernels.get_backend(backend)
    return k.traverse_batch(np.asarray(grid.dims, np.int64), grid.resolution,
                            np.asarray(grid.origin, np.float64), o, d, r)


def traverse(grid: VoxelGrid, origin, direction, max_range: float, backend=None) -> np.ndarray:
    indptr, indices = traverse_many(grid, [origin], [direction], max_range, backend)
    return indices[indptr[0]:indptr[1]]


def _hit_on(labels: np.ndarray, path: np.ndarray):
    occ = np.flatnonzero(labels[path] == OCCUPIED)
    return int(occ[0]) if occ.size else None


def synthesize_measurement(Y: GroundTruthMap, origin, direction, max_range: float,
                           ray_id: int = 0) -> Measurement:
    """March until the first occupied voxel or ``max_range``.

    The sensor's own voxel is skipped. Unknown labels never block the ray.
    """
    path = traverse(Y.grid, origin, direction, max_range)[1:]
    k = _hit_on(Y.labels, path)
    if k is None:
        return Measurement(ray_id, None, path)
    return Measurement(ray_id, int(path[k]), path[:k + 1])


def synthesize_many(Y: GroundTruthMap, origin, dirs, max_range: float,
                    ray_ids=None) -> list[Measurement]:
    dirs = np.atleast_2d(dirs)
    indptr, indices = traverse_many(Y.grid, [origin], dirs, max_range)
    ids = range(dirs.shape[0]) if ray_ids is None else ray_ids
    out = []
    for r, rid in enumerate(ids):
        path = indices[indptr[r] + 1:indptr[r + 1]]
        k = _hit_on(Y.labels, path)
        if k is None:
            out.append(Measurement(int(rid), None, path))
        else:
            out.append(Measurement(int(rid), int(path[k]), path[:k + 1]))
    return out


def apply_measurement(X: EvidenceMap, m: Measurement,
                      freespace_on_miss: bool = False) -> EvidenceMap:
    return apply_measurements(X, [m], freespace_on_miss)


def apply_measurements(X: EvidenceMap, measurements, freespace_on_miss: bool = False) -> EvidenceMap:
    """Insert measurements: free along the beam, occupied at the hit.

    Rays without a return leave ``X`` untouched unless ``freespace_on_miss``.
    Occupied evidence is never downgraded to free.
    """
    codes = X.codes.copy()
    for m in measurements:
        if m.hit is None:
            if not freespace_on_miss:
                continue
            free = m.traversed
        else:
            if m.traversed.size and int(m.traversed[-1]) != m.hit:
                raise ValueError("hit must be the last traversed voxel")
            free = m.traversed[:-1]
            codes[m.hit] = MEASURED_OCCUPIED
        if free.size:
            sel = free[codes[free] != MEASURED_OCCUPIED]
            codes[sel] = MEASURED_FREE
    return EvidenceMap(X.grid, codes)


def coverage_probability(Yhat: ConfidenceMap, traversal, include_self: bool = True,
                         backend=None) -> CoverageVector:
    """Probability that each voxel on the ray is *not* covered by it.

    A voxel is covered when everything between it and the sensor is empty
    and the voxel itself or something behind it is occupied, so the pulse
    returns from it or beyond. ``include_self=False`` drops the voxel from the
    "at or behind" product.
    """
    path = np.asarray(traversal, dtype=np.int64)
    indptr = np.array([0, path.shape[0]], np.int64)
    p = coverage_many(Yhat, indptr, path, include_self, backend)
    return CoverageVector(path, p)


def coverage_many(Yhat: ConfidenceMap | np.ndarray, indptr, indices, include_self: bool = True,
                  backend=None) -> np.ndarray:
    """CSR version of :func:`coverage_probability`; returns p per entry."""
    c = Yhat.values if isinstance(Yhat, ConfidenceMap) else np.asarray(Yhat, np.float64)
    q = sigma(c)
    k = kernels.get_backend(backend)
    p = k.coverage_batch(q, np.asarray(indptr, np.int64), np.asarray(indices, np.int64),
                         bool(include_self))
    return np.clip(p, 0.0, 1.0)


def ray_coverages(Yhat: ConfidenceMap, pose: SensorPose, dirs_world, max_range: float,
                  include_self: bool = True) -> list[CoverageVector]:
    """Coverage vectors for rays fired from ``pose``; the sensor voxel is dropped."""
    indptr, indices = traverse_many(Yhat.grid, [pose.position], dirs_world, max_range)
    keep = np.ones(indices.shape[0], bool)
    keep[indptr[:-1][np.diff(indptr) > 0]] = False
    lengths = np.diff(indptr) - (np.diff(indptr) > 0)
    sub_ptr = np.zeros_like(indptr)
    np.cumsum(lengths, out=sub_ptr[1:])
    sub_idx = indices[keep]
    p = coverage_many(Yhat, sub_ptr, sub_idx, include_self)
    return [CoverageVector(sub_idx[sub_ptr[r]:sub_ptr[r + 1]], p[sub_ptr[r]:sub_ptr[r + 1]])
            for r in range(lengths.shape[0])]


# -- ground truth from scans --------------------------------------------------

def build_ground_truth(scans, grid: VoxelGrid,
                       occupied_fraction: float = DEFAULT_OCCUPIED_FRACTION):
    """Voxelize registered scans by free/occupied voting.

    ``scans`` is a sequence of ``(SensorPose, points)`` with points in world
    meters. Beams vote free on every voxel from the sensor up to the endpoint;
    the endpoint voxel votes occupied. A voxel is occupied when it has at
    least one occupied vote and ``occ / (occ + free) >= occupied_fraction``,
    which drops moving objects that were later seen through. Returns
    ``(GroundTruthMap, n_skipped)`` where skipped points fell outside the grid.
    """
    scans = list(scans)
    if not scans:
        raise ValueError("no scans given")
    occ = np.zeros(grid.size, np.int64)
    free = np.zeros(grid.size, np.int64)
    skipped = 0
    for pose, points in scans:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.size == 0:
            continue
        origin = np.asarray(pose.position)
        cells = grid.world_to_voxel(pts)
        inside = grid.contains(cells)
        skipped += int(np.count_nonzero(~inside))
        pts, cells = pts[inside], cells[inside]
        if not pts.shape[0]:
            continue
        vec = pts - origin
        dist = np.linalg.norm(vec, axis=1)
        ok = dist > 0
        end = grid.index(cells)
        np.add.at(occ, end, 1)
        if not ok.any():
            continue
        dirs = vec[ok] / dist[ok, None]
        indptr, indices = traverse_many(grid, [origin], dirs, dist[ok])
        owner = np.repeat(np.arange(dirs.shape[0]), np.diff(indptr))
        beam = indices[indices != end[ok][owner]]
        np.add.at(free, beam, 1)
    labels = np.full(grid.size, UNKNOWN, np.int8)
    labels[free > 0] = EMPTY
    votes = occ + free
    is_occ = (occ >= 1) & (occ >= occupied_fraction * votes)
    labels[is_occ] = OCCUPIED
    if skipped:
        log.info("skipped %d points outside the grid", skipped)
    return GroundTruthMap(grid, labels), skipped


def read_scans(points_path, poses_path):
    """Load scans from text files.

    ``poses_path``: one ``id x y z yaw pitch roll`` record per line.
    ``points_path``: one ``pose_id x y z`` record per line.
    Lines starting with ``#`` are ignored.
    """
    poses = {}
    for line in Path(poses_path).read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        f = line.split()
        if len(f) != 7:
            raise ValueError(f"bad pose record: {line!r}")
        poses[f[0]] = SensorPose((float(f[1]), float(f[2]), float(f[3])),
                                 float(f[4]), float(f[5]), float(f[6]))
    points: dict[str, list] = {k: [] for k in poses}
    for line in Path(points_path).read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        f = line.split()
        if len(f) != 4:
            raise ValueError(f"bad point record: {line!r}")
        if f[0] not in poses:
            raise ValueError(f"point refers to unknown pose {f[0]!r}")
        points[f[0]].append([float(v) for v in f[1:]])
    return [(poses[k], np.asarray(points[k]).reshape(-1, 3)) for k in poses]
