"""Exact planning oracle and approximation-ratio bounds for greedy planning."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .planner import PlanProblem, greedy_plan, prioritized_greedy_plan

INV_E = math.exp(-1.0)
BRUTE_FORCE_LIMIT = 10**6


class InstanceTooLarge(ValueError):
    pass


def _position_rows(problem: PlanProblem, positions):
    return [np.flatnonzero(problem.positions == l).tolist() for l in positions]


def _count_candidates(problem: PlanProblem, positions) -> int:
    total = 1
    for rows in _position_rows(problem, positions):
        total *= math.comb(len(rows), min(problem.budget, len(rows)))
    return total


def _selection_cost(P, eps, groups) -> float:
    # one fixed evaluation order (positions ascending, rows ascending) so equal
    # selections always produce bit-identical costs
    rows = [r for group in groups for r in sorted(group)]
    prod = P[rows].prod(axis=0) if rows else np.ones(P.shape[1])
    return float(eps @ prod)


def brute_force_plan(problem: PlanProblem, positions=None, limit: int = BRUTE_FORCE_LIMIT):
    """Exhaustive optimum over feasible selections.

    Adding a ray never increases the loss, so only selections with
    ``min(K, |V_l|)`` rays per position are enumerated. Returns
    ``(opt, sets)`` with ``sets[l]`` the ray ids chosen at position ``l``; the
    first minimizer in lexicographic enumeration order wins.
    ``positions`` restricts the instance to those positions' rays.
    """
    if positions is None:
        positions = range(problem.n_positions)
    positions = list(positions)
    n_cand = _count_candidates(problem, positions)
    if n_cand > limit:
        raise InstanceTooLarge(f"{n_cand} candidate selections exceed the limit {limit}")
    P = problem.dense()
    eps = problem.epsilon
    per_pos = [list(itertools.combinations(rows, min(problem.budget, len(rows))))
               for rows in _position_rows(problem, positions)]
    best, best_sel = math.inf, None
    for combo in itertools.product(*per_pos):
        cost = _selection_cost(P, eps, combo)
        if cost < best:
            best, best_sel = cost, combo
    sets = [[] for _ in range(problem.n_positions)]
    for l, group in zip(positions, best_sel):
        sets[l] = sorted(int(problem.ray_ids[r]) for r in group)
    return best, sets


def opt_bars(problem: PlanProblem, limit: int = BRUTE_FORCE_LIMIT) -> list[float]:
    """Worst-case optimum after closing ``u`` positions, for ``u = 0 .. L-1``.

    Closing is modelled by removing all rays of the closed positions; the
    worst case is the maximum over which positions get closed.
    """
    L = problem.n_positions
    out = []
    for u in range(L):
        worst = -math.inf
        for closed in itertools.combinations(range(L), u):
            keep = [l for l in range(L) if l not in closed]
            opt, _ = brute_force_plan(problem, keep, limit)
            worst = max(worst, opt)
        out.append(worst)
    return out


def lower_bound_opt(problem: PlanProblem) -> float:
    """Budget-blind relaxation: each voxel keeps its K*L smallest p_ij."""
    m = problem.budget * problem.n_positions
    if problem.indices.size == 0:
        return problem.total_loss
    order = np.lexsort((problem.values, problem.indices))
    vox = problem.indices[order]
    vals = problem.values[order]
    first = np.r_[0, np.flatnonzero(np.diff(vox)) + 1]
    starts = np.repeat(first, np.diff(np.r_[first, vox.shape[0]]))
    rank = np.arange(vox.shape[0]) - starts
    keep = rank < m
    prod = np.ones(problem.n_voxels)
    np.multiply.at(prod, vox[keep], vals[keep])
    return float(problem.epsilon @ prod)


def ub_f_K(E: float, opt: float, K: int, atol: float = 1e-12):
    """Greedy cost bound after K iterations with one position.

    Returns ``(finite, limit)``: ``E a + opt (1 - a)`` with ``a = (1 - 1/K)^K``
    and the same with ``a = 1/e``. Since ``(1 - 1/K)^K <= 1/e`` the finite
    form is never larger.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if opt < -atol or opt > E + atol:
        raise ValueError(f"need 0 <= opt <= E, got opt={opt}, E={E}")
    a = (1.0 - 1.0 / K) ** K
    return E * a + opt * (1.0 - a), E * INV_E + opt * (1.0 - INV_E)


def gammas(L: int) -> np.ndarray:
    """gamma_u = (1 - e^{-1/L}) (e^{-1/L})^{L-1-u}, u = 0 .. L-1."""
    if L < 1:
        raise ValueError("L must be >= 1")
    r = math.exp(-1.0 / L)
    u = np.arange(L)
    return (1.0 - r) * r ** (L - 1 - u)


def ub_f_LK(E: float, opt_bar, L: int, atol: float = 1e-12) -> float:
    """Greedy cost bound after L*K iterations: E/e + sum_u gamma_u OPTbar_u."""
    ob = np.asarray(opt_bar, dtype=np.float64)
    if ob.shape != (L,):
        raise ValueError(f"need {L} OPTbar values, got {ob.shape[0] if ob.ndim else 0}")
    if np.any(np.diff(ob) < -atol):
        raise ValueError("OPTbar must be non-decreasing")
    return float(E * INV_E + gammas(L) @ ob)


def ub_rho(E: float, lb_opt: float, R, L: int) -> float:
    """Upper bound on the approximation ratio f / OPT.

    ``E / (LB e) + sum_u gamma_u (1 + sum_{v<=u} R_v / LB)`` with ``R`` holding
    ``R_1 .. R_{L-1}`` (a trailing ``R_L`` is accepted and ignored). Returns
    ``math.inf`` when ``lb_opt`` is zero.
    """
    R = np.asarray(R, dtype=np.float64).reshape(-1)
    if R.shape[0] not in (L - 1, L):
        raise ValueError(f"need L-1 = {L - 1} loss caps, got {R.shape[0]}")
    if np.any(R < 0):
        raise ValueError("loss caps R_v must be non-negative")
    if lb_opt < 0:
        raise ValueError("lb_opt must be non-negative")
    if lb_opt == 0:
        return math.inf
    g = gammas(L)
    cum = np.r_[0.0, np.cumsum(R[:L - 1])]
    # sum_u gamma_u telescopes to 1 - 1/e; using it keeps ub_rho(E, E, 0) == 1
    return float((E / lb_opt) * INV_E + (1.0 - INV_E) + (g @ cum) / lb_opt)


def fig3_curve(L_values, ratios, voxels_per_loss: float = 1.0):
    """UB(rho) against opt/E with each position covering 1/L of the voxels.

    Losses are normalized to ``E = 1`` and ``V = voxels_per_loss * E``, so
    ``R_v = V / L``. The cumulative loss increase is capped at ``E - opt``
    because no optimum exceeds ``E``. Yields ``(L, ratio, ub)`` rows; ``ub`` is
    ``math.inf`` for ratio 0.
    """
    for L in L_values:
        for r in ratios:
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"opt/E ratio must lie in [0, 1], got {r}")
            room = 1.0 - r
            caps = []
            for _ in range(L - 1):
                step = min(voxels_per_loss / L, room)
                caps.append(step)
                room -= step
            yield L, r, ub_rho(1.0, r, caps, L)


def lemma3_witness(b, optimal_rays, atol: float = 1e-12) -> int:
    """Index of a ray among ``optimal_rays`` with
    ``sum_i p_ij b_i <= (1 - 1/K) sum_i b_i + OPT / K``,
    where ``OPT = sum_i prod_j p_ij`` over the K given rays and ``0 <= b <= 1``.
    Raises AssertionError if none qualifies, which would be a bug.
    """
    b = np.asarray(b, dtype=np.float64)
    if np.any(b < -atol) or np.any(b > 1 + atol):
        raise ValueError("b must lie in [0, 1]")
    P = np.array([r.dense(b.shape[0]) if hasattr(r, "dense") else np.asarray(r, np.float64)
                  for r in optimal_rays])
    K = P.shape[0]
    if K == 0:
        raise ValueError("need at least one ray")
    opt = float(P.prod(axis=0).sum())
    rhs = b.sum() * (1.0 - 1.0 / K) + opt / K
    lhs = P @ b
    ok = np.flatnonzero(lhs <= rhs + atol)
    assert ok.size, "no ray satisfies the lemma inequality"
    return int(ok[0])


@dataclass
class BoundReport:
    E: float
    lb_opt: float
    f_greedy: float
    opt: float | None = None
    opt_bars: list[float] | None = None
    R: list[float] | None = field(default=None)
    ub_fK: float | None = None
    ub_fK_finite: float | None = None
    ub_fLK: float | None = None
    ub_rho: float | None = None
    evals_greedy: int = 0
    evals_prioritized: int = 0

    def sandwich_holds(self, atol: float = 1e-9) -> bool:
        if self.opt is None:
            return self.lb_opt <= self.f_greedy + atol
        ok = self.lb_opt <= self.opt + atol and self.opt <= self.f_greedy + atol
        if self.ub_fLK is not None:
            ok = ok and self.f_greedy <= self.ub_fLK + atol
        return ok


def bound_report(problem: PlanProblem, oracle: bool = True,
                 limit: int = BRUTE_FORCE_LIMIT) -> BoundReport:
    g = greedy_plan(problem)
    pg = prioritized_greedy_plan(problem)
    E = problem.total_loss
    rep = BoundReport(E=E, lb_opt=lower_bound_opt(problem), f_greedy=g.cost,
                      evals_greedy=g.evaluations, evals_prioritized=pg.evaluations)
    if not oracle:
        return rep
    try:
        bars = opt_bars(problem, limit)
    except InstanceTooLarge:
        return rep
    L = problem.n_positions
    # score the greedy selection exactly like the enumeration scores candidates,
    # so opt <= f_greedy holds without rounding slack
    rows = problem.rows_of(g.order)
    groups = [rows[problem.positions[rows] == l] for l in range(L)]
    rep.f_greedy = _selection_cost(problem.dense(), problem.epsilon, groups)
    rep.opt = bars[0]
    rep.opt_bars = bars
    rep.R = np.diff(bars).tolist()
    rep.ub_fK_finite, rep.ub_fK = ub_f_K(E, min(rep.opt, E), problem.budget)
    rep.ub_fLK = ub_f_LK(E, bars, L)
    rep.ub_rho = ub_rho(E, rep.lb_opt, rep.R, L)
    return rep
