import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from activemap import kernels
from activemap.grid import (
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
from activemap.raycast import (
    CoverageVector,
    Measurement,
    RayBundle,
    SensorPose,
    apply_measurement,
    apply_measurements,
    build_ground_truth,
    coverage_many,
    coverage_probability,
    read_scans,
    ray_coverages,
    synthesize_many,
    synthesize_measurement,
    traverse,
    traverse_many,
)


def line_grid(n):
    return VoxelGrid((n, 1, 1), 1.0)


def logit(q):
    q = np.asarray(q, float)
    return np.log(q) - np.log1p(-q)


# -- oracles -------------------------------------------------------------------

def slab_intervals(grid, o, d, max_range):
    """Exact [t_in, t_out] of the ray against every voxel box, clipped to [0, max_range]."""
    lo = grid.voxel_center(grid.coords(np.arange(grid.size))) - grid.resolution / 2
    hi = lo + grid.resolution
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - o) / d
        t2 = (hi - o) / d
    tmin = np.where(d == 0, np.where((o >= lo) & (o < hi), -np.inf, np.inf), np.minimum(t1, t2))
    tmax = np.where(d == 0, np.where((o >= lo) & (o < hi), np.inf, -np.inf), np.maximum(t1, t2))
    a = np.maximum(tmin.max(axis=1), 0.0)
    b = np.minimum(tmax.min(axis=1), max_range)
    return a, b


def sampled_voxels(grid, o, d, max_range, step):
    t = np.arange(0.0, max_range, step)
    cells = grid.world_to_voxel(o + t[:, None] * d)
    inside = grid.contains(cells)
    if not inside[0]:
        return []
    # the grid is convex: stop at the first exit
    stop = np.flatnonzero(~inside)
    if stop.size:
        cells = cells[:stop[0]]
    idx = grid.index(cells)
    keep = np.r_[True, idx[1:] != idx[:-1]]
    return idx[keep].tolist()


def enumerate_visibility(q, include_self=True):
    """1 - p for each voxel by summing over all 2^n occupancy configurations."""
    n = len(q)
    vis = np.zeros(n)
    for occ in itertools.product((0, 1), repeat=n):
        w = 1.0
        for u in range(n):
            w *= q[u] if occ[u] else 1.0 - q[u]
        for i in range(n):
            before_empty = not any(occ[:i])
            rest = occ[i:] if include_self else occ[i + 1:]
            if before_empty and any(rest):
                vis[i] += w
    return vis


# -- traversal -----------------------------------------------------------------

def test_axis_aligned_ray():
    g = VoxelGrid((8, 1, 1), 1.0)
    path = traverse(g, (0.5, 0.5, 0.5), (1.0, 0.0, 0.0), 3.0)
    assert path.tolist() == [0, 1, 2, 3]
    # voxel 4 is entered at t = 3.5 < 4.4, voxel 5 only at t = 4.5
    assert traverse(g, (0.5, 0.5, 0.5), (1.0, 0.0, 0.0), 4.4).tolist() == [0, 1, 2, 3, 4]
    # a boundary exactly at max range is not crossed
    assert traverse(g, (0.5, 0.5, 0.5), (1.0, 0.0, 0.0), 3.5).tolist() == [0, 1, 2, 3]


def test_diagonal_alternates_x_then_y():
    g = VoxelGrid((6, 6, 1), 1.0)
    d = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    c = g.coords(traverse(g, (0.5, 0.5, 0.5), d, 5.0))
    steps = np.diff(c, axis=0)
    assert np.all(np.abs(steps).sum(axis=1) == 1)
    assert [tuple(s) for s in steps[:4]] == [(1, 0, 0), (0, 1, 0), (1, 0, 0), (0, 1, 0)]


def test_outside_sensor_gives_empty_path():
    g = VoxelGrid((4, 4, 4), 1.0)
    assert traverse(g, (-1.0, 0.5, 0.5), (1.0, 0.0, 0.0), 10.0).size == 0


def test_traversal_matches_sampling_and_slab_oracles(rng):
    g = VoxelGrid((8, 8, 8), 0.5, (-1.0, 0.0, 0.25))
    step = g.resolution / 50
    for _ in range(1000):
        o = np.asarray(g.origin) + rng.uniform(0.01, 0.99, 3) * g.extent
        d = rng.normal(size=3)
        if rng.random() < 0.2:
            d[rng.integers(3)] = 0.0  # exercise axis-parallel components
        if not np.any(d):
            d[0] = 1.0
        d /= np.linalg.norm(d)
        r = float(rng.uniform(0.1, 6.0))
        path = traverse(g, o, d, r).tolist()
        assert len(set(path)) == len(path)
        steps = np.abs(np.diff(g.coords(np.array(path)), axis=0)).sum(axis=1)
        assert np.all(steps == 1)
        a, b = slab_intervals(g, o, d, r)
        length = b - a
        # every voxel the ray really passes through is listed, nothing else is
        assert set(np.flatnonzero(length > 1e-9)) <= set(path)
        assert np.all(length[path] >= -1e-9)
        entry = a[path]
        assert np.all(np.diff(entry) >= -1e-12)
        # the densely sampled sequence appears in order; skipped voxels are corner clips
        samp = sampled_voxels(g, o, d, r, step)
        pos = [path.index(v) for v in samp]
        assert pos == sorted(pos)
        missing = set(path) - set(samp)
        assert all(length[v] < 2 * step for v in missing)


def test_backends_traverse_identically(rng):
    if "numba" not in kernels.available_backends():
        pytest.skip("numba backend unavailable")
    g = VoxelGrid((16, 12, 10), 0.25)
    o = np.asarray(g.extent) * rng.uniform(0.05, 0.95, (300, 3))
    d = rng.normal(size=(300, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(0.1, 5.0, 300)
    a = traverse_many(g, o, d, r, backend="numba")
    b = traverse_many(g, o, d, r, backend="numpy")
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_bad_range():
    with pytest.raises(ValueError):
        traverse(line_grid(3), (0.5, 0.5, 0.5), (1, 0, 0), 0.0)


# -- poses and bundles ---------------------------------------------------------

@given(st.floats(-math.pi, math.pi), st.floats(-1.5, 1.5), st.floats(-math.pi, math.pi))
def test_rotation_orthonormal(yaw, pitch, roll):
    R = SensorPose((0, 0, 0), yaw, pitch, roll).rotation()
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(R) - 1.0) < 1e-9


def test_yaw_turns_forward_to_left():
    d = SensorPose((0, 0, 0), yaw=math.pi / 2).to_world([[1.0, 0.0, 0.0]])
    assert np.allclose(d, [[0.0, 1.0, 0.0]], atol=1e-12)


def test_bundle_even_and_unit():
    b = RayBundle(90.0, 30.0, 9, 3)
    d = b.directions()
    assert d.shape == (b.count, 3) == (27, 3)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)
    az = np.degrees(np.arctan2(d[:9, 1], d[:9, 0]))
    assert np.allclose(np.diff(az), 10.0)
    assert az[0] == pytest.approx(-40.0)


# -- measurement synthesis and insertion ---------------------------------------

def test_first_voxel_occupied():
    Y = GroundTruthMap(line_grid(5), [EMPTY, OCCUPIED, EMPTY, EMPTY, EMPTY])
    m = synthesize_measurement(Y, (0.5, 0.5, 0.5), (1, 0, 0), 10.0)
    assert m.hit == 1 and m.traversed.tolist() == [1]


def test_empty_corridor_has_no_hit():
    Y = GroundTruthMap(line_grid(5), [EMPTY] * 5)
    m = synthesize_measurement(Y, (0.5, 0.5, 0.5), (1, 0, 0), 10.0)
    assert m.hit is None and m.traversed.tolist() == [1, 2, 3, 4]


def test_unknown_does_not_block():
    Y = GroundTruthMap(line_grid(5), [EMPTY, EMPTY, UNKNOWN, OCCUPIED, EMPTY])
    m = synthesize_measurement(Y, (0.5, 0.5, 0.5), (1, 0, 0), 10.0)
    assert m.hit == 3 and m.traversed.tolist() == [1, 2, 3]


def test_sensor_voxel_never_blocks():
    Y = GroundTruthMap(line_grid(3), [OCCUPIED, EMPTY, OCCUPIED])
    assert synthesize_measurement(Y, (0.5, 0.5, 0.5), (1, 0, 0), 10.0).hit == 2


def test_synthesized_hits_are_occupied(rng):
    g = VoxelGrid((10, 10, 10), 0.5)
    Y = GroundTruthMap(g, rng.choice([EMPTY, OCCUPIED, UNKNOWN], g.size, p=[0.9, 0.05, 0.05]))
    d = rng.normal(size=(500, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    ms = synthesize_many(Y, (2.6, 2.4, 2.3), d, 4.0)
    for k, m in enumerate(ms):
        single = synthesize_measurement(Y, (2.6, 2.4, 2.3), d[k], 4.0)
        assert single.hit == m.hit and np.array_equal(single.traversed, m.traversed)
        if m.hit is not None:
            assert Y.labels[m.hit] == OCCUPIED
            assert m.traversed[-1] == m.hit
            assert np.all(Y.labels[m.traversed[:-1]] != OCCUPIED)


def test_apply_hit_and_miss():
    X = EvidenceMap.empty(line_grid(5))
    X1 = apply_measurement(X, Measurement(0, 3, np.array([1, 2, 3])))
    assert X1.codes.tolist() == [0, MEASURED_FREE, MEASURED_FREE, MEASURED_OCCUPIED, 0]
    X2 = apply_measurement(X1, Measurement(1, None, np.array([1, 2, 3, 4])))
    assert np.array_equal(X2.codes, X1.codes)
    X3 = apply_measurement(X1, Measurement(1, None, np.array([1, 2, 3, 4])), freespace_on_miss=True)
    assert X3.codes.tolist() == [0, 1, 1, 2, 1]


def test_occupied_wins_conflicts():
    X = apply_measurement(EvidenceMap.empty(line_grid(5)), Measurement(0, 2, np.array([1, 2])))
    X = apply_measurement(X, Measurement(1, 4, np.array([1, 2, 3, 4])))
    assert X.codes.tolist() == [0, 1, 2, 1, 2]


def test_apply_rejects_inconsistent_hit():
    with pytest.raises(ValueError):
        apply_measurements(EvidenceMap.empty(line_grid(3)), [Measurement(0, 1, np.array([1, 2]))])


# -- coverage ------------------------------------------------------------------

def test_coverage_deterministic_corridor():
    g = line_grid(3)
    for q3 in (0.0, 0.3, 1.0):
        q = np.array([0.0, 1.0, q3])
        p = kernels.get_backend().coverage_batch(q, np.array([0, 3]), np.arange(3), True)
        assert np.allclose(p, [0.0, 0.0, 1.0], atol=1e-15)
    cv = coverage_probability(ConfidenceMap(g, [-100.0, 100.0, 0.0]), [0, 1, 2])
    assert np.allclose(cv.p, [0.0, 0.0, 1.0], atol=1e-40)


def test_coverage_two_voxels_half():
    cv = coverage_probability(ConfidenceMap(line_grid(2), [0.0, 0.0]), [0, 1])
    assert np.allclose(cv.p, [0.25, 0.75], atol=1e-15)
    assert np.allclose(1 - cv.p, enumerate_visibility([0.5, 0.5]), atol=1e-15)


def test_off_ray_voxels_default_to_one():
    cv = CoverageVector([2, 5], [0.3, 0.6])
    assert cv.dense(7).tolist() == [1, 1, 0.3, 1, 1, 0.6, 1]
    with pytest.raises(ValueError):
        CoverageVector([1], [1.5])


@pytest.mark.parametrize("include_self", [True, False])
def test_coverage_matches_enumeration(rng, include_self):
    n_rays = 150
    lengths = rng.integers(1, 11, n_rays)
    c = rng.normal(0, 2, lengths.sum())
    c[rng.random(c.size) < 0.1] = 0.0
    indptr = np.r_[0, np.cumsum(lengths)]
    indices = np.arange(c.size)
    p = coverage_many(c, indptr, indices, include_self)
    q = sigma(c)
    for r in range(n_rays):
        sl = slice(indptr[r], indptr[r + 1])
        vis = enumerate_visibility(q[sl], include_self)
        assert np.max(np.abs((1 - p[sl]) - vis)) <= 1e-12


def test_confident_empty_is_never_covered():
    c = np.full(10, logit(1e-8))
    p = coverage_many(c, np.array([0, 10]), np.arange(10))
    assert np.all(np.abs(p - 1.0) <= 1e-6)


@given(st.lists(st.floats(-6, 6), min_size=3, max_size=9), st.data())
def test_occlusion_is_monotone(cs, data):
    c = np.array(cs)
    n = c.size
    i = data.draw(st.integers(1, n - 1))
    u = data.draw(st.integers(0, i - 1))
    bump = data.draw(st.floats(0.0, 5.0))
    ptr = np.array([0, n])
    before = coverage_many(c, ptr, np.arange(n))[i]
    c2 = c.copy()
    c2[u] += bump
    after = coverage_many(c2, ptr, np.arange(n))[i]
    assert after >= before - 1e-14


def test_coverage_backends_agree(rng):
    if "numba" not in kernels.available_backends():
        pytest.skip("numba backend unavailable")
    lengths = rng.integers(0, 30, 400)
    indptr = np.r_[0, np.cumsum(lengths)].astype(np.int64)
    q = rng.random(500)
    idx = rng.integers(0, 500, indptr[-1]).astype(np.int64)
    for inc in (True, False):
        a = kernels.get_backend("numba").coverage_batch(q, indptr, idx, inc)
        b = kernels.get_backend("numpy").coverage_batch(q, indptr, idx, inc)
        assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_ray_coverages_drop_sensor_voxel():
    g = VoxelGrid((6, 1, 1), 1.0)
    cvs = ray_coverages(ConfidenceMap.zeros(g), SensorPose((0.5, 0.5, 0.5)),
                        np.array([[1.0, 0, 0], [-1.0, 0, 0]]), 10.0)
    assert cvs[0].indices.tolist() == [1, 2, 3, 4, 5]
    assert len(cvs[1]) == 0


# -- ground truth from scans ---------------------------------------------------

def test_single_point_scan():
    g = VoxelGrid((6, 3, 3), 1.0)
    pose = SensorPose((0.5, 1.5, 1.5))
    Y, skipped = build_ground_truth([(pose, [[4.5, 1.5, 1.5]])], g)
    vol = g.volume(Y.labels)
    assert skipped == 0
    assert vol[4, 1, 1] == OCCUPIED
    assert vol[:4, 1, 1].tolist() == [EMPTY] * 4
    assert np.count_nonzero(Y.labels != UNKNOWN) == 5


def test_moving_object_is_voted_out():
    g = VoxelGrid((8, 1, 1), 1.0)
    pose = SensorPose((0.5, 0.5, 0.5))
    scans = [(pose, [[3.5, 0.5, 0.5]])] + [(pose, [[6.5, 0.5, 0.5]])] * 20
    Y, _ = build_ground_truth(scans, g, occupied_fraction=0.1)
    assert Y.labels[3] == EMPTY  # 1 / 21 < 0.1
    assert Y.labels[6] == OCCUPIED
    Y2, _ = build_ground_truth(scans[:3], g, occupied_fraction=0.1)
    assert Y2.labels[3] == OCCUPIED  # 1 / 3 >= 0.1


def test_scan_points_outside_are_counted():
    g = VoxelGrid((4, 4, 4), 1.0)
    _, skipped = build_ground_truth([(SensorPose((0.5, 0.5, 0.5)), [[9.0, 0, 0], [1.5, 0.5, 0.5]])], g)
    assert skipped == 1


def test_no_scans_is_an_error():
    with pytest.raises(ValueError):
        build_ground_truth([], line_grid(2))


def test_read_scans(tmp_path):
    (tmp_path / "poses.txt").write_text("# id x y z yaw pitch roll\na 0.5 1.5 1.5 0 0 0\n")
    (tmp_path / "points.txt").write_text("a 4.5 1.5 1.5\na 2.5 1.5 1.5\n")
    scans = read_scans(tmp_path / "points.txt", tmp_path / "poses.txt")
    assert len(scans) == 1 and scans[0][1].shape == (2, 3)
    Y, _ = build_ground_truth(scans, VoxelGrid((6, 3, 3), 1.0))
    assert Y.labels.tolist().count(OCCUPIED) == 2
