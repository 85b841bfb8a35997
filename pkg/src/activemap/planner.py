"""Budgeted ray selection minimizing the expected loss eps^T prod_j p_j."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels


@dataclass
class PlanProblem:
    """Rays as a CSR matrix of miss probabilities, one row per ray.

    Rows are kept sorted by ``ray_ids`` and entries within a row by voxel
    index, so row order doubles as the deterministic tie-break.
    """
    epsilon: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    positions: np.ndarray
    n_positions: int
    budget: int
    ray_ids: np.ndarray = None

    def __post_init__(self):
        self.epsilon = np.ascontiguousarray(self.epsilon, dtype=np.float64)
        self.indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.positions = np.ascontiguousarray(self.positions, dtype=np.int64)
        n = self.n_rays
        if self.ray_ids is None:
            self.ray_ids = np.arange(n, dtype=np.int64)
        self.ray_ids = np.ascontiguousarray(self.ray_ids, dtype=np.int64)
        self.n_positions = int(self.n_positions)
        self.budget = int(self.budget)
        self._validate()

    def _validate(self):
        n = self.n_rays
        if self.budget < 1:
            raise ValueError("budget K must be >= 1")
        if np.any(self.epsilon < 0) or not np.isfinite(self.epsilon).all():
            raise ValueError("epsilon must be finite and non-negative")
        if self.positions.shape != (n,) or self.ray_ids.shape != (n,):
            raise ValueError("positions and ray_ids need one entry per ray")
        if n and (self.positions.min() < 0 or self.positions.max() >= self.n_positions):
            raise ValueError("ray position outside [0, L)")
        if n > 1 and np.any(np.diff(self.ray_ids) <= 0):
            raise ValueError("ray_ids must be unique and sorted")
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.shape[0]:
            raise ValueError("malformed indptr")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.n_voxels):
            raise ValueError("voxel index out of range")
        if self.values.size and (self.values.min() < 0 or self.values.max() > 1):
            raise ValueError("miss probabilities must lie in [0, 1]")

    @property
    def n_rays(self) -> int:
        return self.indptr.shape[0] - 1

    @property
    def n_voxels(self) -> int:
        return self.epsilon.shape[0]

    @property
    def total_loss(self) -> float:
        return float(self.epsilon.sum())

    @classmethod
    def from_rays(cls, epsilon, rays, positions, budget, n_positions=None, ray_ids=None):
        """Build from a list of sparse rays (anything with ``indices`` and ``p``)."""
        positions = np.asarray(positions, dtype=np.int64)
        ids = np.arange(len(rays)) if ray_ids is None else np.asarray(ray_ids, np.int64)
        if len(np.unique(ids)) != len(ids):
            raise ValueError("ray_ids must be unique")
        order = np.argsort(ids, kind="stable")
        lengths = np.array([len(rays[r].indices) for r in order], dtype=np.int64)
        indptr = np.zeros(len(rays) + 1, np.int64)
        np.cumsum(lengths, out=indptr[1:])
        indices = np.empty(indptr[-1], np.int64)
        values = np.empty(indptr[-1])
        for k, r in enumerate(order):
            idx = np.asarray(rays[r].indices, np.int64)
            srt = np.argsort(idx, kind="stable")
            indices[indptr[k]:indptr[k + 1]] = idx[srt]
            values[indptr[k]:indptr[k + 1]] = np.asarray(rays[r].p, np.float64)[srt]
        if n_positions is None:
            n_positions = int(positions.max()) + 1 if positions.size else 1
        return cls(epsilon, indptr, indices, values, positions[order], n_positions,
                   budget, ids[order])

    def row(self, r: int):
        sl = slice(self.indptr[r], self.indptr[r + 1])
        return self.indices[sl], self.values[sl]

    def rows_of(self, ray_ids) -> np.ndarray:
        return np.searchsorted(self.ray_ids, np.asarray(ray_ids, np.int64))

    def dense(self) -> np.ndarray:
        """(n_rays, n_voxels) matrix of p_ij; only for small instances."""
        out = np.ones((self.n_rays, self.n_voxels))
        owner = np.repeat(np.arange(self.n_rays), np.diff(self.indptr))
        out[owner, self.indices] = self.values
        return out

    def subset(self, keep_positions) -> PlanProblem:
        """Same instance restricted to rays of the given positions."""
        mask = np.isin(self.positions, np.asarray(list(keep_positions), np.int64))
        rows = np.flatnonzero(mask)
        lengths = np.diff(self.indptr)[rows]
        indptr = np.zeros(rows.shape[0] + 1, np.int64)
        np.cumsum(lengths, out=indptr[1:])
        take = np.concatenate([np.arange(self.indptr[r], self.indptr[r + 1]) for r in rows]) \
            if rows.size else np.zeros(0, np.int64)
        return PlanProblem(self.epsilon, indptr, self.indices[take], self.values[take],
                           self.positions[rows], self.n_positions, self.budget,
                           self.ray_ids[rows])

    def cost_of_rows(self, rows) -> float:
        prod = np.ones(self.n_voxels)
        for r in rows:
            idx, p = self.row(int(r))
            prod[idx] *= p
        return float(self.epsilon @ prod)


@dataclass
class PlanResult:
    selected: list[list[int]]
    order: list[int]
    cost: float
    trace: np.ndarray = field(repr=False)
    evaluations: int = 0
    delta_log: np.ndarray | None = field(default=None, repr=False)

    def selected_sets(self) -> list[frozenset]:
        return [frozenset(s) for s in self.selected]


def expected_loss(epsilon, rays) -> float:
    """eps^T prod_j p_j with p_ij = 1 for voxels a ray does not list."""
    eps = np.asarray(epsilon, dtype=np.float64)
    prod = np.ones(eps.shape[0])
    for ray in rays:
        prod[np.asarray(ray.indices, np.int64)] *= np.asarray(ray.p, np.float64)
    return float(eps @ prod)


def delta(b, ray) -> float:
    """Loss decrease sum_i b_i (1 - p_ij) from adding ``ray`` at residual ``b``."""
    b = np.asarray(b, dtype=np.float64)
    if np.any(b < 0):
        raise ValueError("residual losses must be non-negative")
    idx = np.asarray(ray.indices, np.int64)
    return float(np.sum(b[idx] * (1.0 - np.asarray(ray.p, np.float64))))


def _run(kernel_name, problem: PlanProblem, backend, log_capacity):
    k = kernels.get_backend(backend)
    fn = getattr(k, kernel_name)
    cap = int(log_capacity)
    log_iter = np.zeros(cap, np.int64)
    log_row = np.zeros(cap, np.int64)
    log_val = np.zeros(cap)
    order, trace, evals, n_log = fn(problem.indptr, problem.indices, problem.values,
                                    problem.positions, problem.n_positions, problem.budget,
                                    problem.epsilon, log_iter, log_row, log_val)
    order = np.asarray(order)
    selected = [[] for _ in range(problem.n_positions)]
    ids = problem.ray_ids[order]
    for rid, pos in zip(ids.tolist(), problem.positions[order].tolist()):
        selected[pos].append(rid)
    dlog = None
    if cap:
        n_log = int(n_log)
        dlog = np.rec.fromarrays(
            [log_iter[:n_log], problem.ray_ids[log_row[:n_log]], log_val[:n_log]],
            names="iteration,ray_id,delta")
    trace = np.asarray(trace, dtype=np.float64)
    return PlanResult(selected, ids.tolist(), float(trace[-1]), trace, int(evals), dlog)


def greedy_plan(problem: PlanProblem, backend=None, log_capacity=0) -> PlanResult:
    """Naive greedy: every iteration scores all available rays.

    Picks the ray with the largest decrease (equivalently the smallest
    b^T p_j), smallest ray id on ties, and closes a position once it holds
    ``budget`` rays. Runs until no ray is available. With ``log_capacity``
    > 0 the first that many (iteration, ray, delta) evaluations are recorded.
    """
    return _run("greedy", problem, backend, log_capacity)


def prioritized_greedy_plan(problem: PlanProblem, backend=None, log_capacity=0) -> PlanResult:
    """Lazy greedy over a sequence kept sorted by stale decreases.

    Decreases only shrink as the residual shrinks, so a stale value is an
    upper bound. Each iteration re-scores rays in stale order until the best
    fresh value is strictly above the next stale one, re-sorts the refreshed
    prefix and merges it back. Selections and cost trace equal
    :func:`greedy_plan`'s.
    """
    return _run("prioritized", problem, backend, log_capacity)


PLANNERS = {"greedy": greedy_plan, "prioritized": prioritized_greedy_plan}


# -- text format ----------------------------------------------------------------

def dumps_problem(problem: PlanProblem) -> str:
    """Header ``L K n_rays n_voxels``, one epsilon line, then one line per ray:
    ``ray_id position voxel:p voxel:p ...``. Floats use repr, so parsing is exact."""
    lines = [f"{problem.n_positions} {problem.budget} {problem.n_rays} {problem.n_voxels}",
             " ".join(repr(float(e)) for e in problem.epsilon)]
    for r in range(problem.n_rays):
        idx, p = problem.row(r)
        pairs = " ".join(f"{int(i)}:{float(v)!r}" for i, v in zip(idx, p))
        lines.append(f"{int(problem.ray_ids[r])} {int(problem.positions[r])} {pairs}".rstrip())
    return "\n".join(lines) + "\n"


def loads_problem(text: str) -> PlanProblem:
    lines = text.splitlines()
    if len(lines) < 2:
        raise ValueError("plan problem text needs a header and an epsilon line")
    L, K, n_rays, n_vox = (int(v) for v in lines[0].split())
    eps = np.array([float(v) for v in lines[1].split()], dtype=np.float64)
    if eps.shape[0] != n_vox:
        raise ValueError("epsilon length does not match header")
    body = lines[2:2 + n_rays]
    if len(body) != n_rays:
        raise ValueError("ray count does not match header")
    ids, pos, lengths, idx, vals = [], [], [], [], []
    for line in body:
        f = line.split()
        ids.append(int(f[0]))
        pos.append(int(f[1]))
        lengths.append(len(f) - 2)
        for pair in f[2:]:
            i, v = pair.split(":")
            idx.append(int(i))
            vals.append(float(v))
    indptr = np.zeros(n_rays + 1, np.int64)
    np.cumsum(lengths, out=indptr[1:])
    return PlanProblem(eps, indptr, np.array(idx, np.int64), np.array(vals), np.array(pos),
                       L, K, np.array(ids, np.int64))


def save_problem(path, problem: PlanProblem) -> None:
    Path(path).write_text(dumps_problem(problem))


def load_problem(path) -> PlanProblem:
    return loads_problem(Path(path).read_text())
