"""ROC evaluation of reconstructed occupancy and the Random-vs-Coupled comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage
from sklearn.metrics import auc as _auc
from sklearn.metrics import roc_curve as _roc_curve

from .grid import EMPTY, OCCUPIED, ConfidenceMap, GroundTruthMap, _check_same
from .raycast import traverse_many


class DegenerateROCError(ValueError):
    pass


@dataclass
class ROC:
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float
    n_pos: int
    n_neg: int

    def rows(self):
        return list(zip(self.thresholds.tolist(), self.tpr.tolist(), self.fpr.tolist()))


def measurable_mask(world: GroundTruthMap, poses, directions, max_range: float) -> np.ndarray:
    """Voxels some bundle ray from some pose reaches before being blocked."""
    mask = np.zeros(world.grid.size, bool)
    occ = world.labels == OCCUPIED
    for pose in poses:
        d = pose.to_world(directions)
        indptr, indices = traverse_many(world.grid, [pose.position], d, max_range)
        for r in range(d.shape[0]):
            path = indices[indptr[r] + 1:indptr[r + 1]]
            hit = np.flatnonzero(occ[path])
            mask[path[:hit[0] + 1] if hit.size else path] = True
    return mask


def evaluation_mask(Y: GroundTruthMap, measurable=None, margin_m: float = 1.0,
                    discount_adjacent: bool = True):
    """Boolean (positives, negatives) after the exclusion rules.

    Unknown labels are dropped. With ``measurable``, voxels more than
    ``ceil(margin_m / resolution)`` voxels away from it are dropped. With
    ``discount_adjacent``, empty voxels in the 26-neighborhood of an occupied
    voxel are dropped, since false positives there are discretization error.
    """
    g = Y.grid
    pos = Y.labels == OCCUPIED
    neg = Y.labels == EMPTY
    if measurable is not None:
        reach = math.ceil(margin_m / g.resolution - 1e-9)
        vol = g.volume(np.asarray(measurable, bool))
        dist = ndimage.distance_transform_edt(~vol)
        near = g.flatten(dist <= reach)
        pos &= near
        neg &= near
    if discount_adjacent:
        occ_vol = g.volume(Y.labels == OCCUPIED)
        grown = ndimage.binary_dilation(occ_vol, structure=np.ones((3, 3, 3), bool))
        neg &= ~g.flatten(grown)
    return pos, neg


def roc_curve(Y: GroundTruthMap, Yhat: ConfidenceMap, measurable=None, margin_m: float = 1.0,
              discount_adjacent: bool = True) -> ROC:
    """ROC of occupancy confidences against ground truth; AUC by trapezoids."""
    _check_same(Y.grid, Yhat.grid)
    pos, neg = evaluation_mask(Y, measurable, margin_m, discount_adjacent)
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateROCError(f"need positives and negatives, got {n_pos} and {n_neg}")
    keep = pos | neg
    y = pos[keep].astype(np.int8)
    s = Yhat.values[keep]
    fpr, tpr, thr = _roc_curve(y, s, drop_intermediate=False)
    return ROC(thr, tpr, fpr, float(_auc(fpr, tpr)), n_pos, n_neg)


def compare_policies(worlds, random_model, coupled_model, cfg, seeds=(0,)):
    """Paired Random (random rays) vs Coupled (prioritized planning) episodes.

    ``worlds`` is a list of ``(GroundTruthMap, Trajectory)``. Returns one row
    per (world, seed, arm) with AUC, measured fraction and planner counters.
    """
    from .pipeline import run_episode

    rows = []
    arms = (("random", random_model, "random"), ("coupled", coupled_model, "prioritized"))
    for w, (world, traj) in enumerate(worlds):
        mask = measurable_mask(world, traj.poses, cfg.bundle.directions(), cfg.max_range)
        for seed in seeds:
            for arm, model, planner in arms:
                c = replace(cfg, planner=planner, seed=int(seed))
                res = run_episode(world, traj, model, c)
                roc = roc_curve(world, res.confidence, mask)
                rows.append({
                    "world": w, "seed": int(seed), "arm": arm, "auc": roc.auc,
                    "measured_fraction": res.measured_fraction,
                    "evaluations": int(sum(res.evaluations)),
                    "plan_seconds": float(sum(res.plan_seconds)),
                })
    return rows


def median_auc(rows, arm: str) -> float:
    return float(np.median([r["auc"] for r in rows if r["arm"] == arm]))
