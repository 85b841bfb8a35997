"""Voxel grids, the three map kinds, and the losses shared by learning and planning.

All maps are dense 1-D arrays in linear voxel order, x fastest, then y, then z:
``i = x + nx * (y + ny * z)``. ``volume()`` gives the (nx, ny, nz) view.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

OCCUPIED = 1
EMPTY = -1
UNKNOWN = 0

UNMEASURED = 0
MEASURED_FREE = 1
MEASURED_OCCUPIED = 2

DEFAULT_CLAMP = 100.0

MAGIC = b"AVM1"
KIND_LABELS, KIND_CONFIDENCE, KIND_EVIDENCE = 0, 1, 2


class GridMismatchError(ValueError):
    pass


class DegenerateLabelsError(ValueError):
    """Class balancing needs at least one occupied and one empty voxel."""


@dataclass(frozen=True)
class VoxelGrid:
    dims: tuple[int, int, int]
    resolution: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) <= 0:
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def size(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.dims) * self.resolution

    def index(self, coords):
        """Linear index of integer voxel coordinates, shape (..., 3)."""
        c = np.asarray(coords, dtype=np.int64)
        nx, ny, _ = self.dims
        return c[..., 0] + nx * (c[..., 1] + ny * c[..., 2])

    def coords(self, index):
        i = np.asarray(index, dtype=np.int64)
        nx, ny, _ = self.dims
        return np.stack([i % nx, (i // nx) % ny, i // (nx * ny)], axis=-1)

    def contains(self, coords) -> np.ndarray:
        c = np.asarray(coords)
        return np.all((c >= 0) & (c < np.asarray(self.dims)), axis=-1)

    def world_to_voxel(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return np.floor((p - np.asarray(self.origin)) / self.resolution).astype(np.int64)

    def voxel_center(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.float64)
        return np.asarray(self.origin) + (c + 0.5) * self.resolution

    def centers(self) -> np.ndarray:
        """World centers of all voxels in linear order, shape (size, 3)."""
        return self.voxel_center(self.coords(np.arange(self.size)))

    def volume(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.dims, order="F")

    def flatten(self, vol: np.ndarray) -> np.ndarray:
        return np.asarray(vol).reshape(-1, order="F")


def _check_same(a: VoxelGrid, b: VoxelGrid):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True)
class GroundTruthMap:
    """Labels per voxel: +1 occupied, -1 empty, 0 unknown."""
    grid: VoxelGrid
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8).reshape(-1)
        if labels.shape[0] != self.grid.size:
            raise ValueError("label count does not match grid size")
        if not np.isin(labels, (OCCUPIED, EMPTY, UNKNOWN)).all():
            raise ValueError("labels must be in {+1, -1, 0}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def unknown(cls, grid: VoxelGrid) -> GroundTruthMap:
        return cls(grid, np.zeros(grid.size, np.int8))


@dataclass(frozen=True)
class ConfidenceMap:
    """Per-voxel occupancy log-odds."""
    grid: VoxelGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.shape[0] != self.grid.size:
            raise ValueError("confidence count does not match grid size")
        if not np.isfinite(values).all():
            raise ValueError("confidence values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: VoxelGrid) -> ConfidenceMap:
        return cls(grid, np.zeros(grid.size))

    def probability(self) -> np.ndarray:
        return sigma(self.values)


@dataclass(frozen=True)
class EvidenceMap:
    """Sparse measurements: 0 unmeasured, 1 measured free, 2 measured occupied."""
    grid: VoxelGrid
    codes: np.ndarray = field(repr=False)

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.uint8).reshape(-1)
        if codes.shape[0] != self.grid.size:
            raise ValueError("evidence count does not match grid size")
        if codes.size and codes.max() > MEASURED_OCCUPIED:
            raise ValueError("evidence codes must be 0, 1 or 2")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def empty(cls, grid: VoxelGrid) -> EvidenceMap:
        return cls(grid, np.zeros(grid.size, np.uint8))

    def measured_fraction(self) -> float:
        return float(np.count_nonzero(self.codes)) / self.grid.size


def sigma(c):
    """Logistic function 1 / (1 + exp(-c))."""
    return expit(c)


def update_confidence(conf: ConfidenceMap, delta: ConfidenceMap,
                      clamp: float = DEFAULT_CLAMP) -> ConfidenceMap:
    """Additive log-odds update, clipped to [-clamp, clamp]."""
    _check_same(conf.grid, delta.grid)
    return ConfidenceMap(conf.grid, np.clip(conf.values + delta.values, -clamp, clamp))


def _label_arrays(Y: GroundTruthMap, Yhat: ConfidenceMap, w):
    _check_same(Y.grid, Yhat.grid)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape[0] != Y.grid.size:
        raise GridMismatchError("weight vector does not match grid size")
    return Y.labels.astype(np.float64), Yhat.values, w


def weighted_logistic_loss(Y: GroundTruthMap, Yhat: ConfidenceMap, w) -> float:
    """sum_i w_i log(1 + exp(-Y_i Yhat_i)) over labelled voxels (natural log)."""
    y, c, w = _label_arrays(Y, Yhat, w)
    mask = (y != 0) & (w != 0)
    return float(np.sum(w[mask] * np.logaddexp(0.0, -y[mask] * c[mask])))


def weighted_logistic_grad(Y: GroundTruthMap, Yhat: ConfidenceMap, w) -> np.ndarray:
    """Gradient of :func:`weighted_logistic_loss` with respect to Yhat."""
    y, c, w = _label_arrays(Y, Yhat, w)
    g = -w * y * expit(-y * c)
    g[y == 0] = 0.0
    return g


def entropy_loss_vector(Yhat: ConfidenceMap | np.ndarray) -> np.ndarray:
    """Bernoulli entropy of sigma(Yhat) per voxel, in nats.

    Written as p * softplus(-c) + (1 - p) * softplus(c) so it stays accurate
    when the confidence saturates.
    """
    c = Yhat.values if isinstance(Yhat, ConfidenceMap) else np.asarray(Yhat, np.float64)
    p = expit(c)
    q = expit(-c)
    return p * np.logaddexp(0.0, -c) + q * np.logaddexp(0.0, c)


def class_balanced_weights(Y: GroundTruthMap) -> np.ndarray:
    labels = Y.labels
    n_occ = int(np.count_nonzero(labels == OCCUPIED))
    n_emp = int(np.count_nonzero(labels == EMPTY))
    if n_occ == 0 or n_emp == 0:
        raise DegenerateLabelsError(
            f"need both classes, got {n_occ} occupied and {n_emp} empty voxels")
    n = n_occ + n_emp
    w = np.zeros(labels.shape[0])
    w[labels == OCCUPIED] = n / (2.0 * n_occ)
    w[labels == EMPTY] = n / (2.0 * n_emp)
    return w


# -- binary map files -------------------------------------------------------

_HEADER = struct.Struct("<4s3Id3dB")


def map_to_bytes(m: GroundTruthMap | ConfidenceMap | EvidenceMap) -> bytes:
    g = m.grid
    if isinstance(m, GroundTruthMap):
        kind, payload = KIND_LABELS, m.labels.astype("<i1")
    elif isinstance(m, ConfidenceMap):
        kind, payload = KIND_CONFIDENCE, m.values.astype("<f4")
    elif isinstance(m, EvidenceMap):
        kind, payload = KIND_EVIDENCE, m.codes.astype("<u1")
    else:
        raise TypeError(f"not a map: {type(m).__name__}")
    head = _HEADER.pack(MAGIC, *g.dims, g.resolution, *g.origin, kind)
    return head + payload.tobytes()


def map_from_bytes(data: bytes):
    if len(data) < _HEADER.size:
        raise ValueError("truncated map file")
    magic, nx, ny, nz, res, ox, oy, oz, kind = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    grid = VoxelGrid((nx, ny, nz), res, (ox, oy, oz))
    body = data[_HEADER.size:]
    dtype = {KIND_LABELS: "<i1", KIND_CONFIDENCE: "<f4", KIND_EVIDENCE: "<u1"}.get(kind)
    if dtype is None:
        raise ValueError(f"unknown payload kind {kind}")
    payload = np.frombuffer(body, dtype=dtype)
    if payload.shape[0] != grid.size:
        raise ValueError("payload size does not match dims")
    if kind == KIND_LABELS:
        return GroundTruthMap(grid, payload.astype(np.int8))
    if kind == KIND_CONFIDENCE:
        return ConfidenceMap(grid, payload.astype(np.float64))
    return EvidenceMap(grid, payload.astype(np.uint8))


def save_map(path, m) -> None:
    Path(path).write_bytes(map_to_bytes(m))


def load_map(path):
    return map_from_bytes(Path(path).read_bytes())
