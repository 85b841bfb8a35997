import numpy as np
import pytest
from hypothesis import given, strategies as st

from activemap import kernels
from activemap.instances import random_problem, tiny_problem
from activemap.planner import (
    PlanProblem,
    delta,
    dumps_problem,
    expected_loss,
    greedy_plan,
    load_problem,
    loads_problem,
    prioritized_greedy_plan,
    save_problem,
)
from activemap.raycast import CoverageVector

BACKENDS = kernels.available_backends()


def cv(p):
    """Dense miss-probability list to a sparse ray over the voxels where p < 1."""
    p = np.asarray(p, float)
    idx = np.flatnonzero(p < 1)
    return CoverageVector(idx, p[idx])


def three_ray_problem():
    rays = [cv([0, 1, 1]), cv([1, 0, 0]), cv([1, 0, 1])]
    return PlanProblem.from_rays([1.0, 1.0, 1.0], rays, [0, 0, 0], budget=2, ray_ids=[1, 2, 3])


def reference_greedy(problem):
    """Dense textbook greedy: largest decrease, smallest ray id on ties."""
    P = problem.dense()
    b = problem.epsilon.copy()
    alive = np.ones(problem.n_rays, bool)
    counts = np.zeros(problem.n_positions, int)
    order = []
    while alive.any():
        gains = np.where(alive, (b[None, :] * (1 - P)).sum(axis=1), -np.inf)
        j = int(np.argmax(gains))
        order.append(int(problem.ray_ids[j]))
        b = b * P[j]
        alive[j] = False
        l = problem.positions[j]
        counts[l] += 1
        if counts[l] == problem.budget:
            alive[problem.positions == l] = False
    return order


# -- expected loss and delta ---------------------------------------------------

def test_expected_loss_examples():
    eps = [1.0, 2.0, 3.0]
    assert expected_loss(eps, []) == 6.0
    assert expected_loss(eps, [cv([0, 1, 1])]) == 5.0
    v = expected_loss([1.0, 1.0, 4.0], [cv([0.5, 1, 1]), cv([0.5, 0.2, 1])])
    assert v == pytest.approx(4.45, abs=1e-15)


def test_expected_loss_matches_enumeration(rng):
    P = rng.random((4, 6))
    eps = rng.random(6)
    rays = [cv(p) for p in P]
    assert expected_loss(eps, rays) == pytest.approx(float(eps @ P.prod(axis=0)), rel=1e-14)


def test_delta_examples():
    assert delta([0.3, 0.4], cv([1, 1])) == 0.0
    assert delta([0.3, 0.4, 0.5], CoverageVector([0, 2], [0.0, 0.0])) == pytest.approx(0.8)
    assert delta([0.5, 0.2], CoverageVector([0, 1], [0.5, 1.0])) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        delta([-1.0], CoverageVector([0], [0.5]))


@given(st.integers(0, 2 ** 32 - 1))
def test_delta_consistent_with_product(seed):
    r = np.random.default_rng(seed)
    b = r.random(8)
    p = r.random(8)
    ray = CoverageVector(np.arange(8), p)
    assert delta(b, ray) == pytest.approx(b.sum() - b @ p, abs=1e-12)
    assert delta(b, ray) >= 0


# -- hand instances ------------------------------------------------------------

@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("plan", [greedy_plan, prioritized_greedy_plan])
def test_three_ray_instance(plan, backend):
    res = plan(three_ray_problem(), backend=backend)
    assert res.order == [2, 1]
    assert res.selected == [[2, 1]]
    assert res.cost == 0.0
    assert res.trace.tolist() == [3.0, 1.0, 0.0]


def test_single_ray_selected_regardless_of_eps():
    p = PlanProblem.from_rays([0.0, 0.0], [cv([0.5, 1.0])], [0], budget=3)
    for plan in (greedy_plan, prioritized_greedy_plan):
        res = plan(p)
        assert res.order == [0] and res.cost == 0.0


def test_no_rays_gives_empty_plan():
    p = PlanProblem.from_rays([1.0, 2.0], [], [], budget=1, n_positions=2)
    for plan in (greedy_plan, prioritized_greedy_plan):
        res = plan(p)
        assert res.order == [] and res.selected == [[], []]
        assert res.cost == 3.0 and res.evaluations == 0


def test_ray_ids_need_not_be_contiguous():
    rays = [cv([1, 0, 0]), cv([0, 1, 1]), cv([1, 0, 1])]
    p = PlanProblem.from_rays([1.0, 1.0, 1.0], rays, [0, 0, 0], budget=2, ray_ids=[20, 7, 9])
    assert greedy_plan(p).order == [20, 7]
    assert prioritized_greedy_plan(p).order == [20, 7]


def test_ties_go_to_the_smallest_ray_id():
    rays = [cv([0.5, 1]), cv([1, 0.5]), cv([0.5, 1])]
    p = PlanProblem.from_rays([1.0, 1.0], rays, [0, 0, 0], budget=1, ray_ids=[5, 3, 4])
    assert greedy_plan(p).order == [3]
    assert prioritized_greedy_plan(p).order == [3]


def test_problem_validation():
    with pytest.raises(ValueError):
        PlanProblem.from_rays([1.0], [cv([0.5])], [0], budget=0)
    with pytest.raises(ValueError):
        PlanProblem.from_rays([-1.0], [cv([0.5])], [0], budget=1)
    with pytest.raises(ValueError):
        PlanProblem.from_rays([1.0], [cv([0.5]), cv([0.2])], [0, 0], budget=1, ray_ids=[1, 1])
    with pytest.raises(ValueError):
        PlanProblem([1.0], [0, 1], [3], [0.5], [0], 1, 1)


# -- properties ----------------------------------------------------------------

def _check_plan(problem, res):
    tr = res.trace
    assert np.all(np.diff(tr) <= 0)
    rows = problem.rows_of(res.order)
    assert res.cost == pytest.approx(problem.cost_of_rows(rows), rel=1e-9, abs=1e-9)
    for l, sel in enumerate(res.selected):
        assert len(sel) <= problem.budget
        assert np.all(problem.positions[problem.rows_of(sel)] == l)
        avail = int(np.count_nonzero(problem.positions == l))
        assert len(sel) == min(problem.budget, avail)
    # each step's decrease is the chosen ray's fresh delta
    b = problem.epsilon.copy()
    for k, r in enumerate(rows):
        idx, p = problem.row(int(r))
        d = float(np.sum(b[idx] * (1 - p)))
        assert tr[k] - tr[k + 1] == pytest.approx(d, abs=1e-12 * max(1.0, tr[0]))
        b[idx] *= p
        assert np.all(b >= 0) and np.all(b <= problem.epsilon)


@given(st.integers(0, 2 ** 32 - 1), st.booleans())
def test_lazy_equals_naive(seed, quantized):
    r = np.random.default_rng(seed)
    L = int(r.integers(1, 5))
    prob = random_problem(r, L, int(r.integers(1, 30)), int(r.integers(1, 80)),
                          int(r.integers(1, 5)), quantized=quantized)
    for be in BACKENDS:
        g = greedy_plan(prob, backend=be)
        p = prioritized_greedy_plan(prob, backend=be)
        assert g.order == p.order
        assert g.selected_sets() == p.selected_sets()
        assert np.array_equal(g.trace, p.trace)
        _check_plan(prob, g)
        # a first pass over every ray is forced; beyond that lazy never does worse
        assert p.evaluations <= g.evaluations + prob.n_rays


@given(st.integers(0, 2 ** 32 - 1))
def test_matches_reference_greedy(seed):
    r = np.random.default_rng(seed)
    prob = random_problem(r, int(r.integers(1, 4)), int(r.integers(1, 15)),
                          int(r.integers(2, 40)), int(r.integers(1, 4)))
    assert greedy_plan(prob).order == reference_greedy(prob)


def test_backends_identical(rng):
    if len(BACKENDS) < 2:
        pytest.skip("numba backend unavailable")
    for _ in range(30):
        prob = random_problem(rng, 3, 40, 120, 3, quantized=bool(rng.integers(2)))
        for plan in (greedy_plan, prioritized_greedy_plan):
            a, b = plan(prob, backend="numba"), plan(prob, backend="numpy")
            assert a.order == b.order and a.evaluations == b.evaluations
            assert np.allclose(a.trace, b.trace, rtol=1e-12, atol=1e-12)


def test_delta_never_increases(rng):
    for _ in range(40):
        prob = random_problem(rng, int(rng.integers(1, 5)), 25, 60, 3)
        for plan in (greedy_plan, prioritized_greedy_plan):
            res = plan(prob, log_capacity=200_000)
            log = res.delta_log
            assert log.shape[0] == res.evaluations
            for rid in np.unique(log.ray_id):
                seq = log.delta[log.ray_id == rid]
                assert np.all(np.diff(seq) <= 1e-12)


def test_tiny_instances_count_bound(rng):
    for _ in range(50):
        prob = tiny_problem(rng)
        g, p = greedy_plan(prob), prioritized_greedy_plan(prob)
        assert p.evaluations <= g.evaluations + prob.n_rays


# -- text format -----------------------------------------------------------------

def test_text_roundtrip(tmp_path, rng):
    prob = random_problem(rng, 3, 5, 20, 2)
    prob = PlanProblem(prob.epsilon, prob.indptr, prob.indices, prob.values, prob.positions,
                       prob.n_positions, prob.budget, np.arange(prob.n_rays) * 3 + 1)
    text = dumps_problem(prob)
    assert text.splitlines()[0] == "3 2 15 20"
    back = loads_problem(text)
    for name in ("epsilon", "indptr", "indices", "values", "positions", "ray_ids"):
        assert np.array_equal(getattr(back, name), getattr(prob, name))
    save_problem(tmp_path / "p.txt", prob)
    assert dumps_problem(load_problem(tmp_path / "p.txt")) == text
    assert greedy_plan(back).order == greedy_plan(prob).order


def test_text_rejects_bad_input():
    with pytest.raises(ValueError):
        loads_problem("1 1 1 2\n0.5\n0 0 0:0.5\n")
    with pytest.raises(ValueError):
        loads_problem("1 1 2 1\n0.5\n0 0 0:0.5\n")
