"""Naive vs prioritized greedy on scene instances, for each kernel backend.

    python3 benchmarks/bench_planner.py [--instances 3] [--rays 1000]

Selections are checked to agree before timings are reported.
"""
import argparse
import time

import numpy as np

from activemap import kernels
from activemap.instances import scene_problem
from activemap.planner import greedy_plan, prioritized_greedy_plan


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--instances", type=int, default=3)
    p.add_argument("--positions", type=int, default=5)
    p.add_argument("--rays", type=int, default=1000)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--budget", type=int, default=50)
    a = p.parse_args(argv)
    probs = [scene_problem(s, a.positions, a.rays, a.size, a.budget) for s in range(a.instances)]
    print(f"{'backend':<8}{'inst':>5}{'evals_naive':>13}{'evals_prio':>12}"
          f"{'naive_s':>10}{'prio_s':>10}{'speedup':>9}")
    for be in kernels.available_backends():
        greedy_plan(probs[0], backend=be)
        prioritized_greedy_plan(probs[0], backend=be)
        speeds = []
        for i, prob in enumerate(probs):
            g, tg = timed(greedy_plan, prob, backend=be)
            q, tq = timed(prioritized_greedy_plan, prob, backend=be)
            if g.selected_sets() != q.selected_sets():
                raise SystemExit(f"{be} instance {i}: planners disagree")
            speeds.append(tg / tq)
            print(f"{be:<8}{i:>5}{g.evaluations:>13}{q.evaluations:>12}"
                  f"{tg:>10.4f}{tq:>10.4f}{tg / tq:>9.1f}")
        print(f"{be}: median speedup {np.median(speeds):.1f}x")


if __name__ == "__main__":
    main()
