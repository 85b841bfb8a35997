"""activemap command line: worlds, episodes, learning, planner benchmarks, bounds, ROC.

Every subcommand takes ``--seed`` and ``--config FILE.json``. Config keys use
the flag names with dashes replaced by underscores; an explicit flag beats
the config value, which beats the built-in default.

Exit codes: 0 ok, 1 usage, 2 invariant breach, 3 I/O.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(x) -> str:
    """Fixed 9-significant-digit numbers; infinity prints as ``unbounded``."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if math.isinf(x):
            return "unbounded" if x > 0 else "-unbounded"
        if math.isnan(x):
            return "nan"
        return format(float(x), ".9g")
    return str(x)


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def write_json(path, obj) -> None:
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _ints(s):
    return [int(v) for v in str(s).split(",") if v.strip()]


def _floats(s):
    return [float(v) for v in str(s).split(",") if v.strip()]


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {s!r}")


# option tables: name -> (type, default, help). Flags default to None so the
# config file can fill whatever the command line left out.
COMMON = {
    "seed": (int, 0, "master seed"),
    "jobs": (int, 1, "parallel workers (output order never depends on it)"),
}
SCENE = {
    "dims": (_ints, [96, 96, 24], "grid size nx,ny,nz"),
    "resolution": (float, 0.25, "voxel edge in meters"),
    "density": (float, 0.02, "objects per square meter"),
    "ground_layer": (int, 2, "z index of the ground plane"),
    "corridor": (float, 2.0, "half-width of the object-free driving corridor (m)"),
}
EPISODE = {
    "budget": (int, 50, "rays fired per position"),
    "h_count": (int, 40, "bundle columns"),
    "v_count": (int, 30, "bundle rows"),
    "h_fov": (float, 120.0, "bundle horizontal field of view (deg)"),
    "v_fov": (float, 60.0, "bundle vertical field of view (deg)"),
    "max_range": (float, 12.0, "ray length in meters"),
    "poses": (int, 10, "trajectory length"),
    "step": (float, 1.5, "distance between poses (m)"),
    "horizon": (int, 5, "positions planned ahead"),
    "freespace_on_miss": (_bool, False, "mark voxels on no-return rays free"),
}
TRAIN = {
    "epochs": (int, 20, "epochs per training round"),
    "lr": (float, 0.05, "initial learning rate"),
    "momentum": (float, 0.9, "SGD momentum"),
    "decay": (float, 0.125, "learning-rate factor per decay period"),
    "decay_every": (int, 10, "epochs per decay period"),
}


def _add(p, table):
    for name, (typ, default, text) in table.items():
        shown = ",".join(map(str, default)) if isinstance(default, list) else default
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None,
                       help=f"{text} (default {shown})")


def _resolve(args, tables):
    """Merge flag > config > default for every option in ``tables``."""
    defaults = {}
    for t in tables:
        defaults.update(t)
    cfg = {}
    if args.config:
        try:
            with open(args.config) as f:
                cfg = json.load(f)
        except OSError as e:
            raise IOError(f"cannot read config {args.config}: {e}") from e
        except json.JSONDecodeError as e:
            raise UsageError(f"--config {args.config}: invalid JSON: {e}") from e
        if not isinstance(cfg, dict):
            raise UsageError(f"--config {args.config}: expected a JSON object")
        fixed = {"config", "command"} | {a.dest for a in args._parser_actions}
        unknown = sorted(set(cfg) - set(defaults) - fixed)
        if unknown:
            raise UsageError(f"--config {args.config}: unknown keys {', '.join(unknown)}")
    for name, (typ, default, _) in defaults.items():
        if getattr(args, name, None) is not None:
            continue
        if name in cfg:
            v = cfg[name]
            if typ in (_ints, _floats) and isinstance(v, list):
                v = typ(",".join(map(str, v)))
            else:
                try:
                    v = typ(v)
                except (TypeError, ValueError, argparse.ArgumentTypeError) as e:
                    raise UsageError(f"--config key {name!r}: {e}") from e
            setattr(args, name, v)
        else:
            setattr(args, name, default)
    for name in ("out", "world", "model", "problem", "timing"):
        if getattr(args, name, None) is None and name in cfg:
            setattr(args, name, cfg[name])
    return args


def _scene_spec(a):
    from .grid import VoxelGrid
    from .world import SceneSpec

    if len(a.dims) != 3:
        raise UsageError("--dims needs three integers")
    return SceneSpec(grid=VoxelGrid(tuple(a.dims), a.resolution), ground_layer=a.ground_layer,
                     object_density=a.density, corridor_halfwidth=a.corridor)


def _episode_cfg(a, planner="prioritized", seed=0):
    from .pipeline import EpisodeConfig
    from .raycast import RayBundle

    try:
        return EpisodeConfig(budget=a.budget,
                             bundle=RayBundle(a.h_fov, a.v_fov, a.h_count, a.v_count),
                             max_range=a.max_range, planner=planner, seed=seed,
                             freespace_on_miss=a.freespace_on_miss)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _trajectory(grid, a):
    from .pipeline import Trajectory
    from .world import straight_trajectory

    return Trajectory(straight_trajectory(grid, a.poses, a.step, ground_layer=a.ground_layer),
                      horizon=a.horizon)


def _train_cfg(a):
    from .reconstruction import TrainConfig

    return TrainConfig(lr=a.lr, decay=a.decay, decay_every=a.decay_every,
                       momentum=a.momentum, epochs=a.epochs, seed=a.seed)


def _world_seeds(seed, n, stream):
    # disjoint seed streams for train / validation / test worlds
    ss = np.random.SeedSequence([seed, stream])
    return [int(s) for s in ss.generate_state(n, np.uint32)] if n else []


def _pmap(fn, items, jobs):
    """Order-preserving map, optionally over worker processes."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _mkdir(path):
    os.makedirs(path, exist_ok=True)
    return path


# -- commands -------------------------------------------------------------------

def cmd_gen_world(a):
    from .grid import EMPTY, OCCUPIED, UNKNOWN, save_map
    from .world import generate_world

    spec = _scene_spec(a)
    world = generate_world(spec, a.seed)
    if a.out:
        save_map(a.out, world)
    lab = world.labels
    write_json(a.summary, {"seed": a.seed, "dims": list(spec.grid.dims),
                           "resolution": spec.grid.resolution,
                           "occupied": int((lab == OCCUPIED).sum()),
                           "empty": int((lab == EMPTY).sum()),
                           "unknown": int((lab == UNKNOWN).sum())})


def _episode_job(job):
    from .evaluation import measurable_mask, roc_curve
    from .pipeline import run_episode

    world, traj, model, cfg = job
    res = run_episode(world, traj, model, cfg)
    mask = measurable_mask(world, traj.poses, cfg.bundle.directions(), cfg.max_range)
    try:
        auc = roc_curve(world, res.confidence, mask).auc
    except ValueError:
        auc = float("nan")
    for planned, prior in zip(res.planned_losses, res.prior_losses):
        if planned > prior + 1e-9 * max(1.0, prior):
            raise InvariantError(f"planned loss {planned} above prior loss {prior}")
    return res, auc


def _read(loader, path):
    """Run ``loader(path)``; malformed files count as I/O failures."""
    try:
        return loader(path)
    except ValueError as e:
        raise OSError(f"{path}: {e}") from e


def _load_world(a):
    from .grid import GroundTruthMap, load_map

    if a.world:
        m = _read(load_map, a.world)
        if not isinstance(m, GroundTruthMap):
            raise UsageError(f"--world {a.world}: not a ground-truth map")
        return m
    from .world import generate_world
    return generate_world(_scene_spec(a), a.seed)


def _load_model(path):
    from .reconstruction import MappingModel, load_model

    return _read(load_model, path) if path else MappingModel.zeros()


def cmd_run_episode(a):
    from .grid import save_map

    if a.episodes < 1:
        raise UsageError("--episodes must be >= 1")
    world = _load_world(a)
    traj = _trajectory(world.grid, a)
    model = _load_model(a.model)
    jobs = [(world, traj, model, _episode_cfg(a, a.planner, a.seed + i))
            for i in range(a.episodes)]
    results = _pmap(_episode_job, jobs, a.jobs)
    out = _mkdir(a.out)
    rows, summaries, timing = [], [], []
    for i, (res, auc) in enumerate(results):
        s = res.summary()
        # the confidence clamp is an implementation choice; record it with the results
        s.update(episode=i, seed=a.seed + i, planner=a.planner, auc=auc,
                 confidence_clamp=jobs[i][3].clamp)
        summaries.append(s)
        rows.append([i, a.seed + i, a.planner, len(res.fired), res.measured_fraction,
                     int(sum(res.evaluations)),
                     res.planned_losses[-1] if res.planned_losses else None, auc])
        timing.append([i, float(sum(res.plan_seconds)), len(res.plan_seconds)])
        save_map(os.path.join(out, f"episode{i}_confidence.avm"), res.confidence)
        save_map(os.path.join(out, f"episode{i}_evidence.avm"), res.evidence)
    write_json(os.path.join(out, "summary.json"), summaries)
    write_csv(os.path.join(out, "metrics.csv"),
              ["episode", "seed", "planner", "steps", "measured_fraction", "evaluations",
               "last_planned_loss", "auc"], rows)
    write_csv(a.timing or os.path.join(out, "timing.csv"),
              ["episode", "plan_seconds", "plan_calls"], timing)


def cmd_learn(a):
    from .learning import learn_active_mapping
    from .reconstruction import save_model
    from .world import generate_world

    if a.train_worlds < 1 or a.val_worlds < 1:
        raise UsageError("--train-worlds and --val-worlds must be >= 1")
    spec = _scene_spec(a)
    cfg = _episode_cfg(a, seed=a.seed)

    def worlds(stream, n):
        out = []
        for s in _world_seeds(a.seed, n, stream):
            w = generate_world(spec, s)
            out.append((w, _trajectory(w.grid, a)))
        return out

    log = (lambda m: print(m, file=sys.stderr)) if a.verbose else None
    res = learn_active_mapping(worlds(1, a.train_worlds), worlds(2, a.val_worlds), cfg,
                               _train_cfg(a), max_iterations=a.max_iterations, verbose=log)
    out = _mkdir(a.out)
    rows = []
    for t, (m, v, tl) in enumerate(zip(res.models, res.val_losses, res.train_losses)):
        save_model(os.path.join(out, f"model{t}.bin"), m)
        rows.append([t, tl[-1] if tl else None, v])
    write_csv(os.path.join(out, "learning.csv"), ["round", "train_loss", "val_loss"], rows)


def cmd_roc(a):
    from .evaluation import DegenerateROCError, measurable_mask, median_auc, roc_curve
    from .grid import ConfidenceMap, load_map
    from .world import generate_world

    if a.compare:
        if a.test_worlds < 1:
            raise UsageError("--test-worlds must be >= 1")
        spec = _scene_spec(a)
        ws = []
        for s in _world_seeds(a.seed, a.test_worlds, 3):
            w = generate_world(spec, s)
            ws.append((w, _trajectory(w.grid, a)))
        rand_m = _load_model(a.random_model)
        coup_m = _load_model(a.model)
        seeds = [a.seed + k for k in range(a.episodes)]
        rows = []
        # one worker per world; each returns its rows in (seed, arm) order
        parts = _pmap(_compare_job, [([w], rand_m, coup_m, _episode_cfg(a), seeds)
                                     for w in ws], a.jobs)
        for i, part in enumerate(parts):
            for r in part:
                r["world"] = i
                rows.append(r)
        write_csv(a.out, ["world", "seed", "arm", "auc", "measured_fraction", "evaluations"],
                  [[r["world"], r["seed"], r["arm"], r["auc"], r["measured_fraction"],
                    r["evaluations"]] for r in rows])
        if a.timing:
            write_csv(a.timing, ["world", "seed", "arm", "plan_seconds"],
                      [[r["world"], r["seed"], r["arm"], r["plan_seconds"]] for r in rows])
        print(f"median_auc random={fmt(median_auc(rows, 'random'))} "
              f"coupled={fmt(median_auc(rows, 'coupled'))}", file=sys.stderr)
        return
    if not a.confidence:
        raise UsageError("--confidence is required unless --compare is given")
    world = _load_world(a)
    conf = _read(load_map, a.confidence)
    if not isinstance(conf, ConfidenceMap):
        raise UsageError(f"--confidence {a.confidence}: not a confidence map")
    cfg = _episode_cfg(a)
    traj = _trajectory(world.grid, a)
    mask = measurable_mask(world, traj.poses, cfg.bundle.directions(), cfg.max_range)
    try:
        roc = roc_curve(world, conf, mask, margin_m=a.margin)
    except DegenerateROCError as e:
        raise InvariantError(str(e)) from e
    if np.any(np.diff(roc.tpr) < 0) or np.any(np.diff(roc.fpr) < 0):
        raise InvariantError("ROC rates not monotone")
    write_csv(a.out, ["threshold", "tpr", "fpr"], roc.rows())
    print(f"auc={fmt(roc.auc)} positives={roc.n_pos} negatives={roc.n_neg}", file=sys.stderr)


def _compare_job(job):
    from .evaluation import compare_policies

    worlds, rand_m, coup_m, cfg, seeds = job
    return compare_policies(worlds, rand_m, coup_m, cfg, seeds)


def _bench_job(job):
    from .instances import scene_problem
    from .planner import greedy_plan, load_problem, prioritized_greedy_plan

    i, seed, a = job
    problem = load_problem(a["problem"]) if a["problem"] else scene_problem(
        seed, a["positions"], a["rays"], a["size"], a["budget"], a["max_range"])
    rows, times = [], []
    for rep in range(a["repeat"]):
        t0 = time.perf_counter()
        g = greedy_plan(problem, backend=a["backend"])
        t1 = time.perf_counter()
        p = prioritized_greedy_plan(problem, backend=a["backend"])
        t2 = time.perf_counter()
        if g.selected_sets() != p.selected_sets() or not np.array_equal(g.trace, p.trace):
            raise InvariantError(f"instance {i}: naive and prioritized plans differ")
        rows.append([i, rep, problem.n_rays, problem.n_voxels, g.evaluations, p.evaluations,
                     p.evaluations / g.evaluations if g.evaluations else None, g.cost])
        times.append([i, rep, t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1) if t2 > t1 else None])
    return rows, times


def cmd_bench_planner(a):
    from . import kernels
    from .instances import tiny_problem
    from .planner import greedy_plan, load_problem, prioritized_greedy_plan

    if a.instances < 1 or a.repeat < 1:
        raise UsageError("--instances and --repeat must be >= 1")
    if a.backend == "auto":
        a.backend = kernels.BACKEND
    if a.backend not in kernels.available_backends():
        raise UsageError(f"--backend {a.backend!r} not available")
    if a.problem:
        _read(load_problem, a.problem)  # surface I/O and parse errors before forking
    # warm the compiled kernels so the first timing does not include compilation
    w = tiny_problem(np.random.default_rng(0))
    greedy_plan(w, backend=a.backend)
    prioritized_greedy_plan(w, backend=a.backend)
    opts = {k: getattr(a, k) for k in ("problem", "positions", "rays", "size", "budget",
                                       "max_range", "repeat", "backend")}
    seeds = _world_seeds(a.seed, a.instances, 4)
    parts = _pmap(_bench_job, [(i, s, opts) for i, s in enumerate(seeds)], a.jobs)
    rows = [r for p in parts for r in p[0]]
    times = [t for p in parts for t in p[1]]
    write_csv(a.out, ["instance", "repeat", "n_rays", "n_voxels", "evals_naive",
                      "evals_prioritized", "count_ratio", "cost"], rows)
    if a.timing:
        write_csv(a.timing, ["instance", "repeat", "naive_s", "prioritized_s", "speedup"], times)
    else:
        sp = [t[4] for t in times if t[4] is not None]
        if sp:
            print(f"median speedup {fmt(float(np.median(sp)))}", file=sys.stderr)


def _bounds_job(job):
    from .bounds import bound_report
    from .instances import tiny_problem
    from .planner import load_problem

    i, seed, path, oracle = job
    problem = load_problem(path) if path else tiny_problem(np.random.default_rng(seed))
    rep = bound_report(problem, oracle=oracle)
    if not rep.sandwich_holds():
        raise InvariantError(f"instance {i}: bound sandwich violated")
    rho = rep.f_greedy / rep.opt if rep.opt else None
    if rho is not None and rep.ub_rho is not None and rho > rep.ub_rho + 1e-9:
        raise InvariantError(f"instance {i}: ratio {rho} above its bound {rep.ub_rho}")
    return [i, problem.n_positions, problem.budget, problem.n_rays, problem.n_voxels, rep.E,
            rep.lb_opt, rep.opt, rep.f_greedy, rep.ub_fK, rep.ub_fLK, rep.ub_rho, rho,
            rep.evals_greedy, rep.evals_prioritized]


def cmd_bounds_report(a):
    from .planner import load_problem

    if a.problem:
        _read(load_problem, a.problem)
        jobs = [(0, 0, a.problem, a.oracle)]
    else:
        if a.instances < 1:
            raise UsageError("--instances must be >= 1")
        jobs = [(i, s, None, a.oracle) for i, s in enumerate(_world_seeds(a.seed, a.instances, 5))]
    rows = _pmap(_bounds_job, jobs, a.jobs)
    write_csv(a.out, ["instance", "L", "K", "n_rays", "n_voxels", "E", "lb_opt", "opt",
                      "f_greedy", "ub_f_K", "ub_f_LK", "ub_rho", "rho", "evals_naive",
                      "evals_prioritized"], rows)


def cmd_fig3_curve(a):
    from .bounds import fig3_curve

    if any(L < 1 for L in a.L):
        raise UsageError("--L values must be >= 1")
    if any(not 0 <= r <= 1 for r in a.ratios):
        raise UsageError("--ratios must lie in [0, 1]")
    rows = list(fig3_curve(a.L, a.ratios, a.voxels_per_loss))
    for L in a.L:
        col = [(r, ub) for LL, r, ub in rows if LL == L]
        col.sort()
        ubs = [ub for _, ub in col]
        if any(y > x + 1e-12 for x, y in zip(ubs, ubs[1:])):
            raise InvariantError(f"L={L}: bound increases with opt/E")
    write_csv(a.out, ["L", "opt_over_E", "ub_rho"], rows)


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="activemap", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def command(name, help, tables, fn):
        s = sub.add_parser(name, help=help, description=help)
        s.add_argument("--config", help="JSON file with option values")
        for t in tables:
            _add(s, t)
        s.set_defaults(_fn=fn, _tables=tables)
        return s

    s = command("gen-world", "generate a procedural world map", [COMMON, SCENE], cmd_gen_world)
    s.add_argument("--out", help="binary map output path")
    s.add_argument("--summary", default="-", help="JSON summary path (default stdout)")

    run_t = {"planner": (str, "prioritized", "random, greedy or prioritized"),
             "episodes": (int, 1, "episodes, seeded seed..seed+N-1")}
    s = command("run-episode", "run measure-reconstruct-plan episodes",
                [COMMON, SCENE, EPISODE, run_t], cmd_run_episode)
    s.add_argument("--world", help="ground-truth map (default: generate from --seed)")
    s.add_argument("--model", help="model file (default: all-zero model)")
    s.add_argument("--out", default="episode_out", help="output directory")
    s.add_argument("--timing", help="timing CSV path (default OUT/timing.csv)")

    learn_t = {"train_worlds": (int, 10, "training worlds"),
               "val_worlds": (int, 3, "validation worlds"),
               "max_iterations": (int, 3, "planning-learning rounds after the first"),
               "verbose": (_bool, False, "log per-round losses to stderr")}
    s = command("learn", "alternate planning and model training",
                [COMMON, SCENE, EPISODE, TRAIN, learn_t], cmd_learn)
    s.add_argument("--out", default="learn_out", help="output directory")

    bench_t = {"positions": (int, 5, "planning positions"),
               "rays": (int, 1000, "candidate rays per position"),
               "size": (int, 32, "cubic grid edge in voxels"),
               "budget": (int, 50, "rays per position"),
               "max_range": (float, 8.0, "ray length (m)"),
               "instances": (int, 1, "generated instances"),
               "repeat": (int, 1, "runs per instance"),
               "backend": (str, "auto", "kernel backend: numba, numpy or auto (the active one)")}
    s = command("bench-planner", "compare naive and prioritized greedy planners",
                [COMMON, bench_t], cmd_bench_planner)
    s.add_argument("--problem", help="planning instance file instead of generated ones")
    s.add_argument("--out", default="-", help="counts CSV (default stdout)")
    s.add_argument("--timing", help="wall-clock CSV")

    bounds_t = {"instances": (int, 20, "random brute-force sized instances"),
                "oracle": (_bool, True, "compute the exact optimum by enumeration")}
    s = command("bounds-report", "greedy cost against the exact optimum and the bounds",
                [COMMON, bounds_t], cmd_bounds_report)
    s.add_argument("--problem", help="planning instance file")
    s.add_argument("--out", default="-", help="CSV output (default stdout)")

    roc_t = {"margin": (float, 1.0, "keep voxels within this distance (m) of measurable ones"),
             "compare": (_bool, False, "run Random vs Coupled episodes instead"),
             "test_worlds": (int, 5, "test worlds for --compare"),
             "episodes": (int, 1, "seeds per world for --compare")}
    s = command("roc", "ROC of a confidence map, or a Random vs Coupled comparison",
                [COMMON, SCENE, EPISODE, roc_t], cmd_roc)
    s.add_argument("--world", help="ground-truth map (default: generate from --seed)")
    s.add_argument("--confidence", help="confidence map to evaluate")
    s.add_argument("--model", help="Coupled-arm model for --compare")
    s.add_argument("--random-model", help="Random-arm model for --compare")
    s.add_argument("--out", default="-", help="CSV output (default stdout)")
    s.add_argument("--timing", help="wall-clock CSV for --compare")

    fig_t = {"L": (_ints, [1, 2, 4, 8, 16, 32, 64], "horizons"),
             "ratios": (_floats, [round(0.05 * k, 2) for k in range(1, 21)], "opt/E values"),
             "voxels_per_loss": (float, 1.0, "V/E, the voxel count per unit of loss")}
    s = command("fig3-curve", "tabulate the approximation-ratio bound against opt/E",
                [COMMON, fig_t], cmd_fig3_curve)
    s.add_argument("--out", default="-", help="CSV output (default stdout)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args._parser_actions = [a for a in parser._subparsers._group_actions[0]
                                .choices[args.command]._actions]
        _resolve(args, args._tables)
        args._fn(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as e:
        print(f"invariant breach: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
