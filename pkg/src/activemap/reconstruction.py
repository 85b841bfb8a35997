"""Dense occupancy from sparse evidence with a linear neighborhood log-odds model.

The model scores voxel ``i`` as ``bias + sum_o W[o, x(i + o)]`` over the
offsets ``o`` of a (2r+1)^3 window, where ``x`` is the evidence code (one-hot
over unmeasured / free / occupied); offsets falling outside the map contribute
nothing. It is trained by momentum SGD on the class-balanced logistic loss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import kernels
from .grid import (
    UNKNOWN,
    ConfidenceMap,
    DegenerateLabelsError,
    EvidenceMap,
    GroundTruthMap,
    VoxelGrid,
    class_balanced_weights,
    update_confidence,
    DEFAULT_CLAMP,
)
from .raycast import SensorPose

N_CHANNELS = 3


@dataclass(frozen=True)
class FeatureSpec:
    radius: int = 2

    @property
    def window(self) -> int:
        return 2 * self.radius + 1

    @property
    def n_offsets(self) -> int:
        return self.window ** 3

    @property
    def length(self) -> int:
        return N_CHANNELS * self.n_offsets + 1

    def center_offset(self) -> int:
        return self.n_offsets // 2


@dataclass
class MappingModel:
    """``theta[0]`` is the bias; ``theta[1:]`` reshapes to (offsets, channels)."""
    theta: np.ndarray
    features: FeatureSpec = field(default_factory=FeatureSpec)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if self.theta.shape[0] != self.features.length:
            raise ValueError(f"theta has {self.theta.shape[0]} weights, "
                             f"feature spec needs {self.features.length}")
        if not np.isfinite(self.theta).all():
            raise ValueError("model weights must be finite")

    @classmethod
    def zeros(cls, radius: int = 2) -> MappingModel:
        spec = FeatureSpec(radius)
        return cls(np.zeros(spec.length), spec)

    @property
    def bias(self) -> float:
        return float(self.theta[0])

    @property
    def weights(self) -> np.ndarray:
        return self.theta[1:].reshape(self.features.n_offsets, N_CHANNELS)

    def copy(self) -> MappingModel:
        return MappingModel(self.theta.copy(), self.features, dict(self.meta))


@dataclass(frozen=True)
class LocalGridSpec:
    """Sensor-aligned local map. ``offset`` is the sensor-frame position of the
    (0, 0, 0) voxel corner; the frame follows the sensor yaw only."""
    dims: tuple[int, int, int] = (48, 48, 24)
    resolution: float = 0.25
    offset: tuple[float, float, float] = (-2.0, -6.0, -2.25)

    def grid(self) -> VoxelGrid:
        return VoxelGrid(self.dims, self.resolution, self.offset)


def _yaw_matrix(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def local_to_global_index(global_grid: VoxelGrid, pose: SensorPose, spec: LocalGridSpec):
    """Global linear index nearest to each local voxel center; -1 outside."""
    lg = spec.grid()
    centers = lg.centers()
    world = centers @ _yaw_matrix(pose.yaw).T + np.asarray(pose.position)
    cells = global_grid.world_to_voxel(world)
    inside = global_grid.contains(cells)
    out = np.full(lg.size, -1, np.int64)
    out[inside] = global_grid.index(cells[inside])
    return out


def extract_local_map(X: EvidenceMap, pose: SensorPose, spec: LocalGridSpec) -> EvidenceMap:
    """Nearest-neighbor resampling of ``X`` into the local frame; outside is unmeasured."""
    idx = local_to_global_index(X.grid, pose, spec)
    codes = np.zeros(idx.shape[0], np.uint8)
    ok = idx >= 0
    codes[ok] = X.codes[idx[ok]]
    return EvidenceMap(spec.grid(), codes)


def extract_local_labels(Y: GroundTruthMap, pose: SensorPose, spec: LocalGridSpec) -> GroundTruthMap:
    idx = local_to_global_index(Y.grid, pose, spec)
    labels = np.full(idx.shape[0], UNKNOWN, np.int8)
    ok = idx >= 0
    labels[ok] = Y.labels[idx[ok]]
    return GroundTruthMap(spec.grid(), labels)


def splat_to_global(Yhat: ConfidenceMap, local: ConfidenceMap, pose: SensorPose,
                    spec: LocalGridSpec, clamp: float = DEFAULT_CLAMP) -> ConfidenceMap:
    """Add a local prediction to the global map.

    Every global voxel whose center falls inside the local grid takes the
    value of the local voxel containing it (inverse nearest-neighbor), so
    each global voxel is updated at most once per call.
    """
    g = Yhat.grid
    lg = spec.grid()
    R = _yaw_matrix(pose.yaw)
    corners = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], float)
    corners = np.asarray(lg.origin) + corners * lg.extent
    wc = corners @ R.T + np.asarray(pose.position)
    lo = np.clip(g.world_to_voxel(wc.min(axis=0)), 0, np.asarray(g.dims) - 1)
    hi = np.clip(g.world_to_voxel(wc.max(axis=0)), 0, np.asarray(g.dims) - 1)
    axes = [np.arange(lo[a], hi[a] + 1) for a in range(3)]
    cells = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    world = g.voxel_center(cells)
    loc = (world - np.asarray(pose.position)) @ R
    lcell = lg.world_to_voxel(loc)
    inside = lg.contains(lcell)
    delta = np.zeros(g.size)
    delta[g.index(cells[inside])] = local.values[lg.index(lcell[inside])]
    return update_confidence(Yhat, ConfidenceMap(g, delta), clamp)


def _codes_volume(x: EvidenceMap) -> np.ndarray:
    return np.ascontiguousarray(x.grid.volume(x.codes))


def predict(model: MappingModel, x: EvidenceMap, backend=None) -> ConfidenceMap:
    """Per-voxel log-odds for the evidence map ``x``."""
    k = kernels.get_backend(backend)
    vol = k.linear_predict(_codes_volume(x), np.ascontiguousarray(model.weights),
                           model.bias, model.features.radius)
    return ConfidenceMap(x.grid, x.grid.flatten(vol))


def loss_and_grad(model: MappingModel, x: EvidenceMap, y: GroundTruthMap, w=None,
                  backend=None):
    """Class-balanced logistic loss per unit weight, and its gradient in theta.

    Normalizing by ``sum(w)`` keeps the step size independent of map size.
    """
    if w is None:
        w = class_balanced_weights(y)
    wsum = float(np.sum(w))
    codes = _codes_volume(x)
    k = kernels.get_backend(backend)
    h = k.linear_predict(codes, np.ascontiguousarray(model.weights), model.bias,
                         model.features.radius)
    g = x.grid
    hv = g.flatten(h)
    yv = y.labels.astype(np.float64)
    m = yv != 0
    loss = float(np.sum(w[m] * np.logaddexp(0.0, -yv[m] * hv[m]))) / wsum
    dh = np.zeros_like(hv)
    dh[m] = -w[m] * yv[m] * expit(-yv[m] * hv[m]) / wsum
    gw = k.linear_grad(codes, np.ascontiguousarray(g.volume(dh)), model.features.radius)
    grad = np.concatenate([[dh.sum()], gw.reshape(-1)])
    return loss, grad


@dataclass(frozen=True)
class TrainConfig:
    """Momentum SGD, one example per step.

    Learning rate at 0-based epoch ``i`` is ``lr * decay ** ceil(i / decay_every)``.
    """
    lr: float = 0.05
    decay: float = 1.0 / 8.0
    decay_every: int = 10
    momentum: float = 0.9
    epochs: int = 20
    batch_size: int = 1
    seed: int = 0

    def learning_rate(self, epoch: int) -> float:
        return self.lr * self.decay ** math.ceil(epoch / self.decay_every)


@dataclass
class Example:
    x: EvidenceMap
    y: GroundTruthMap
    w: np.ndarray


def make_examples(pairs) -> list[Example]:
    """Attach class-balanced weights; pairs lacking either class are dropped."""
    out = []
    for x, y in pairs:
        try:
            out.append(Example(x, y, class_balanced_weights(y)))
        except DegenerateLabelsError:
            continue
    return out


def train_epoch(model: MappingModel, dataset, cfg: TrainConfig, epoch: int = 0,
                velocity=None, backend=None):
    """One seeded, shuffled pass. Returns ``(model, mean_loss, velocity)``.

    ``dataset`` holds :class:`Example` items or ``(x, y)`` pairs.
    """
    examples = [d if isinstance(d, Example) else make_examples([d]) for d in dataset]
    examples = [e for d in examples for e in (d if isinstance(d, list) else [d])]
    if not examples:
        raise ValueError("empty dataset")
    theta = model.theta.copy()
    v = np.zeros_like(theta) if velocity is None else np.asarray(velocity, float).copy()
    lr = cfg.learning_rate(epoch)
    rng = np.random.default_rng([cfg.seed, epoch])
    order = rng.permutation(len(examples))
    cur = MappingModel(theta, model.features, dict(model.meta))
    losses = []
    bs = max(1, cfg.batch_size)
    for start in range(0, len(order), bs):
        grad = np.zeros_like(theta)
        for k in order[start:start + bs]:
            e = examples[k]
            loss, gk = loss_and_grad(cur, e.x, e.y, e.w, backend)
            losses.append(loss)
            grad += gk
        grad /= len(order[start:start + bs])
        v = cfg.momentum * v - lr * grad
        cur.theta = cur.theta + v
    cur.meta["epochs"] = int(cur.meta.get("epochs", 0)) + 1
    return cur, float(np.mean(losses)), v


def train(model: MappingModel, dataset, cfg: TrainConfig, backend=None):
    """Run ``cfg.epochs`` epochs; returns ``(model, per-epoch mean losses)``."""
    examples = make_examples(dataset) if dataset and not isinstance(dataset[0], Example) \
        else list(dataset)
    v = None
    losses = []
    cur = model.copy()
    for epoch in range(cfg.epochs):
        cur, loss, v = train_epoch(cur, examples, cfg, epoch, v, backend)
        losses.append(loss)
    cur.meta.update(seed=cfg.seed, lr=cfg.lr, momentum=cfg.momentum)
    return cur, losses


def mean_loss(model: MappingModel, dataset, backend=None) -> float:
    examples = make_examples(dataset) if dataset and not isinstance(dataset[0], Example) \
        else list(dataset)
    if not examples:
        raise ValueError("empty dataset")
    return float(np.mean([loss_and_grad(model, e.x, e.y, e.w, backend)[0] for e in examples]))


# -- model files -----------------------------------------------------------------

_MODEL_MAGIC = "AVMODEL1"


def save_model(path, model: MappingModel) -> None:
    """Text header (``key=value`` lines ending with ``END``) then little-endian f64 weights."""
    head = [_MODEL_MAGIC, f"radius={model.features.radius}", f"length={model.theta.shape[0]}"]
    for key in sorted(model.meta):
        head.append(f"{key}={model.meta[key]}")
    head.append("END")
    Path(path).write_bytes(("\n".join(head) + "\n").encode() + model.theta.astype("<f8").tobytes())


def load_model(path) -> MappingModel:
    data = Path(path).read_bytes()
    marker = b"\nEND\n"
    cut = data.find(marker)
    if not data.startswith(_MODEL_MAGIC.encode()) or cut < 0:
        raise ValueError("not a model file")
    lines = data[:cut].decode().splitlines()[1:]
    fields = dict(line.split("=", 1) for line in lines)
    radius = int(fields.pop("radius"))
    length = int(fields.pop("length"))
    theta = np.frombuffer(data[cut + len(marker):], dtype="<f8")
    if theta.shape[0] != length:
        raise ValueError("weight count does not match header")
    meta = {}
    for k, v in fields.items():
        try:
            meta[k] = int(v)
        except ValueError:
            try:
                meta[k] = float(v)
            except ValueError:
                meta[k] = v
    return MappingModel(theta.astype(np.float64), FeatureSpec(radius), meta)


def save_manifest(path, entries) -> None:
    """One ``x_path y_path`` line per training pair."""
    Path(path).write_text("".join(f"{x} {y}\n" for x, y in entries))


def load_manifest(path) -> list[tuple[str, str]]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            x, y = line.split()
            out.append((x, y))
    return out
