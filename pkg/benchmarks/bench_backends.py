"""numba vs numpy timings for each hot kernel.

    python3 benchmarks/bench_backends.py [--repeat 5] [--size 32]

Both backends get identical inputs; outputs are checked to agree before any
timing is printed. Compilation is excluded by a warm-up call.
"""
import argparse
import time

import numpy as np

from activemap import kernels
from activemap.instances import scene_problem
from activemap.raycast import RayBundle


def best_of(fn, repeat):
    fn()
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def cases(size, seed):
    rng = np.random.default_rng(seed)
    P = scene_problem(seed, n_positions=5, rays_per_position=1000, size=size)
    z, zf = np.zeros(0, np.int64), np.zeros(0)
    plan_args = (P.indptr, P.indices, P.values, P.positions, P.n_positions, P.budget,
                 P.epsilon, z, z, zf)

    dims = np.array([size, size, size], np.int64)
    dirs = RayBundle(h_count=40, v_count=30).directions()
    origins = np.tile([size * 0.125, size * 0.125, size * 0.125], (dirs.shape[0], 1))
    trav_args = (dims, 0.25, np.zeros(3), origins, dirs, np.full(dirs.shape[0], 8.0))

    q = rng.random(P.n_voxels)
    cov_args = (q, P.indptr, P.indices, True)

    codes = rng.integers(0, 3, size=(48, 48, 24)).astype(np.uint8)
    w = rng.normal(size=(125, 3))
    g = rng.normal(size=codes.shape)
    return {
        "traverse_batch": trav_args,
        "coverage_batch": cov_args,
        "greedy": plan_args,
        "prioritized": plan_args,
        "linear_predict": (codes, w, 0.1, 2),
        "linear_grad": (codes, g, 2),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == np.shape(b) and np.allclose(a, b, rtol=1e-9, atol=1e-9)
    return a == b


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args(argv)
    if "numba" not in kernels.available_backends():
        raise SystemExit("numba backend unavailable; nothing to compare")
    nb, npb = kernels.get_backend("numba"), kernels.get_backend("numpy")
    print(f"{'kernel':<16}{'numba_s':>12}{'numpy_s':>12}{'speedup':>10}")
    for name, args in cases(a.size, a.seed).items():
        f1, f2 = getattr(nb, name), getattr(npb, name)
        if not same(f1(*args), f2(*args)):
            raise SystemExit(f"{name}: backends disagree")
        t1 = best_of(lambda: f1(*args), a.repeat)
        t2 = best_of(lambda: f2(*args), a.repeat)
        print(f"{name:<16}{t1:>12.6f}{t2:>12.6f}{t2 / t1:>10.1f}")


if __name__ == "__main__":
    main()
