"""Command-line front end: configuration, seeding, experiment orchestration."""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np
from scipy import stats

from . import lerw, probes, report, resistance, treewalk, wilson
from .report import OutputSet, StageTimer
from .srw import RngConfig, run_walk, step_cap
from .ust import SpanningTree

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

DEFAULT_JOBS = max(1, os.cpu_count() or 1)


class UsageError(Exception):
    """Configuration problem detected after argument parsing."""


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse whose usage failures exit 1 instead of the default 2."""

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        sys.exit(EXIT_USAGE if status != 0 else 0)


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("expected a nonempty list")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("expected a nonempty list")
    return vals


def _point(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected 'x,y,z': {text!r}")
    try:
        x, y, z = (int(v) for v in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integer coordinates: {text!r}")
    return (x, y, z)


def _point_list(text: str) -> list[tuple[int, int, int]]:
    return [_point(part) for part in text.split(";") if part.strip()]


def _resolve_rng(args) -> RngConfig:
    """Seed from --seed, falling back to UST3D_SEED; echoed into the manifest."""
    seed = args.seed
    if seed is None:
        env = os.environ.get("UST3D_SEED")
        if env is None:
            raise UsageError("a seed is required: pass --seed or set UST3D_SEED")
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"UST3D_SEED must be an integer, got {env!r}")
    try:
        rng = RngConfig(seed=seed, stream=args.stream)
    except ValueError as exc:
        raise UsageError(str(exc))
    args.seed = seed
    return rng


def _config_echo(args) -> dict:
    cfg = {}
    for key, val in sorted(vars(args).items()):
        if key == "func":
            continue
        if isinstance(val, Path):
            val = str(val)
        elif isinstance(val, tuple):
            val = list(val)
        cfg[key] = val
    return cfg


def _outputs(args) -> OutputSet:
    return OutputSet(Path(args.out))


def _finish(args, command: str, outs: OutputSet, timer: StageTimer,
            header=None, rows=None) -> None:
    """Write the CSV table (if any) and the manifest that every output cites."""
    if header is not None:
        report.write_csv(outs.csv, header, rows, manifest_name=outs.manifest.name)
    report.write_manifest(outs.manifest, command, _config_echo(args),
                          args.seed if hasattr(args, "seed") else None, timer)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    rng = _resolve_rng(args)
    timer = StageTimer()
    outs = _outputs(args)
    cfg = wilson.UstWindowConfig(R=args.radius, K=args.K, ordering=args.ordering)
    with timer.stage("sample"):
        tree = wilson.sample_window_ust(cfg, rng)
    with timer.stage("write"):
        tree.save(outs.tree)
    _finish(args, "sample", outs, timer)
    print(f"window tree R={args.radius} K={args.K}: {tree.n} vertices -> {outs.tree}")
    return EXIT_OK


def cmd_ball(args) -> int:
    timer = StageTimer()
    outs = _outputs(args)
    radii = sorted(set(args.radii))
    if radii[0] < 0:
        raise UsageError("radii must be nonnegative")
    with timer.stage("load"):
        tree = SpanningTree.load(args.tree)
    with timer.stage("measure"):
        ids, cnt = tree.ball_ids(args.center, radii[-1])
        linf_reach = np.maximum.accumulate(np.abs(tree.points[ids]).max(axis=1))
        window_R = tree.meta.R if tree.meta is not None else -1
        rows = []
        for r in radii:
            vol = int(cnt[r])
            clipped = bool(window_R >= 0 and linf_reach[vol - 1] >= window_R)
            rows.append((r, vol, clipped))
    with timer.stage("write"):
        _finish(args, "ball", outs, timer, ("r", "volume", "clipped"), rows)
        positive = [(r, v) for r, v, _ in rows if r >= 1]
        if len(positive) >= 2:
            report.save_series_figure(
                outs.figure, [r for r, _ in positive], [v for _, v in positive],
                "r", "|B(x, r)|", f"intrinsic ball volume at {args.center}",
                loglog=True)
    print("r volume clipped")
    for r, vol, clipped in rows:
        print(f"{r} {vol} {int(clipped)}")
    return EXIT_OK


def cmd_reff(args) -> int:
    timer = StageTimer()
    outs = _outputs(args)
    with timer.stage("load"):
        tree = SpanningTree.load(args.tree)
    with timer.stage("solve"):
        if args.set is not None:
            value = resistance.point_to_set_resistance(tree, args.x, args.set)
            terminals = ";".join(",".join(str(c) for c in p) for p in args.set)
        else:
            if args.y is None:
                raise UsageError("provide --y or --set")
            value = resistance.tree_resistance(tree, args.x, args.y)
            terminals = ",".join(str(c) for c in args.y)
    source = ",".join(str(c) for c in args.x)
    with timer.stage("write"):
        _finish(args, "reff", outs, timer, ("x", "terminals", "resistance"),
                [(source, terminals, value)])
    print(format(float(value), ".12g"))
    return EXIT_OK


def cmd_hk(args) -> int:
    timer = StageTimer()
    outs = _outputs(args)
    ns = sorted(set(args.n))
    if ns[0] < 0:
        raise UsageError("step counts must be nonnegative")
    with timer.stage("load"):
        tree = SpanningTree.load(args.tree)
    rows = []
    if args.mc:
        rng = _resolve_rng(args)
        with timer.stage("mc"):
            for i, n in enumerate(ns):
                est = treewalk.heat_kernel_mc(tree, args.x, n, args.trials,
                                              rng.shifted(i * args.trials))
                rows.append((n, est.value, est.stderr))
    else:
        with timer.stage("exact"):
            for n in ns:
                est = treewalk.heat_kernel_exact(tree, args.x, n)
                rows.append((n, est.value, est.stderr))
    with timer.stage("write"):
        _finish(args, "hk", outs, timer, ("n", "value", "stderr"), rows)
        positive = [(n, v) for n, v, _ in rows if n >= 1 and v > 0]
        if len(positive) >= 2:
            report.save_series_figure(
                outs.figure, [n for n, _ in positive], [v for _, v in positive],
                "n", "p_n(x, x)", f"return kernel at {args.x}", loglog=True)
    print("n value stderr")
    for n, value, stderr in rows:
        print(f"{n} {format(value, '.12g')} {format(stderr, '.12g')}")
    return EXIT_OK


def cmd_beta(args) -> int:
    rng = _resolve_rng(args)
    timer = StageTimer()
    outs = _outputs(args)
    with timer.stage("walks"):
        fit = lerw.estimate_beta(args.radii, args.trials, rng, jobs=args.jobs)
    rows = [(int(n), mean, err, args.trials)
            for n, mean, err in zip(fit.radii, fit.means, fit.stderrs)]
    with timer.stage("write"):
        _finish(args, "beta", outs, timer, ("n", "mean", "stderr", "trials"), rows)
        report.save_series_figure(
            outs.figure, fit.radii, fit.means, "n", "mean M_n",
            f"loop-erasure length exponent (slope {fit.slope:.4f})",
            loglog=True, fit=fit, yerr=fit.stderrs)
    print(f"slope={fit.slope:.6f} intercept={fit.intercept:.6f} "
          f"r_squared={fit.r_squared:.6f}")
    return EXIT_OK


def cmd_tails(args) -> int:
    rng = _resolve_rng(args)
    timer = StageTimer()
    outs = _outputs(args)
    with timer.stage("walks"):
        prof = lerw.tail_profile(args.n, args.trials, args.kappas, rng,
                                 jobs=args.jobs)
    rows = list(zip(prof.kappas, prof.upper, prof.lower))
    with timer.stage("write"):
        _finish(args, "tails", outs, timer,
                ("kappa", "upper_freq", "lower_freq"), rows)
        report.save_series_figure(
            outs.figure, prof.kappas, np.maximum(prof.upper, 1.0 / prof.trials),
            "kappa", "P(M_n >= kappa mean)",
            f"upper tail of M_n at n={args.n} (mean {prof.mean:.1f})", logy=True)
    print(f"n={args.n} trials={args.trials} mean={prof.mean:.4f}")
    return EXIT_OK


def _named_graph(name: str) -> wilson.FiniteGraph:
    if name == "k3":
        return wilson.complete_graph(3)
    if name == "c4":
        return wilson.cycle_graph(4)
    return wilson.grid_graph(3, 3)


def cmd_uniformity(args) -> int:
    rng = _resolve_rng(args)
    timer = StageTimer()
    outs = _outputs(args)
    g = _named_graph(args.graph)
    with timer.stage("count"):
        total = wilson.matrix_tree_count(g)
    with timer.stage("sample"):
        trees = wilson.wilson_finite_many(g, 0, args.samples, rng)
    with timer.stage("tally"):
        tally = Counter(t.edge_key() for t in trees)
    if len(tally) > total:
        raise RuntimeError(
            f"observed {len(tally)} distinct trees, matrix-tree count is {total}")
    labels = ["|".join(f"{u}-{v}" for u, v in key) for key in sorted(tally)]
    counts = [tally[key] for key in sorted(tally)]
    observed = np.array(counts + [0] * (total - len(counts)), dtype=np.float64)
    chi2, pvalue = stats.chisquare(observed)
    rows = list(zip(labels, counts))
    with timer.stage("write"):
        _finish(args, "uniformity", outs, timer, ("tree", "count"), rows)
        report.save_bar_figure(outs.figure, labels, counts,
                               args.samples / total,
                               f"{args.graph}: chi2 p={pvalue:.4g}")
    print(f"{args.graph}: {total} spanning trees, {len(tally)} observed, "
          f"chi2={chi2:.4f}, p={pvalue:.6g}")
    return EXIT_OK


def cmd_spiral(args) -> int:
    timer = StageTimer()
    outs = _outputs(args)
    with timer.stage("generate"):
        seq = probes.spiral_box_sequence(args.N, args.m)
    rows = [(i, x, y, z) for i, (x, y, z) in enumerate(seq.centers.tolist())]
    with timer.stage("write"):
        _finish(args, "spiral", outs, timer, ("index", "x", "y", "z"), rows)
        report.save_boxes_figure(outs.figure, seq.centers, args.m,
                                 f"box sequence N={args.N} m={args.m}")
    print(f"{len(seq)} boxes of side {args.m} -> {outs.csv}")
    return EXIT_OK


def cmd_tube_events(args) -> int:
    rng = _resolve_rng(args)
    timer = StageTimer()
    outs = _outputs(args)
    if args.survey_n is not None:
        rows = []
        with timer.stage("survey"):
            for i, n_boxes in enumerate(args.survey_n):
                geom = probes.TubeGeometry(args.m, n_boxes)
                prob, err = probes.tube_a1_probability(
                    args.m, n_boxes, args.trials, rng.shifted(i * args.trials),
                    jobs=args.jobs)
                rows.append((n_boxes, args.m, geom.q, args.trials, prob, err))
        with timer.stage("write"):
            _finish(args, "tube-events", outs, timer,
                    ("N", "m", "q", "trials", "prob", "stderr"), rows)
        print("N m q trials prob stderr")
        for row in rows:
            print(" ".join(report.format_cell(v) for v in row))
        return EXIT_OK
    geom = probes.TubeGeometry(args.m, args.N)
    boxes = args.boxes if args.boxes is not None else args.N
    steps = args.steps
    if steps is None:
        steps = max(10 ** 4, 12 * (((2 * boxes + 1) * args.m) // 2) ** 2)
    with timer.stage("walk"):
        walk = run_walk((0, 0, 0), step_cap(steps), rng)
    with timer.stage("events"):
        flags = probes.tube_event_check(
            walk.path, geom, args.length_constant, args.eta,
            hit_trials=args.hit_trials, rng=rng.shifted(1), boxes=boxes)
    rows = [(j, flags.crossing[j], flags.cut_point[j], flags.length_ok[j],
             flags.hittable[j], flags.f_prob[j], flags.f_stderr[j])
            for j in range(len(flags.crossing))]
    with timer.stage("write"):
        _finish(args, "tube-events", outs, timer,
                ("j", "crossing", "cut_point", "length_ok", "hittable",
                 "f_prob", "f_stderr"), rows)
    print(f"walk of {steps} steps, boxes 0..{boxes - 1}, q={geom.q}")
    print("j crossing cut_point length_ok hittable f_prob f_stderr")
    for row in rows:
        print(" ".join(report.format_cell(v) for v in row))
    return EXIT_OK


def cmd_vol_scaling(args) -> int:
    rng = _resolve_rng(args)
    timer = StageTimer()
    outs = _outputs(args)
    with timer.stage("experiment"):
        res = probes.volume_scaling_experiment(
            args.R, args.radii, args.samples, rng, K_factor=args.K,
            jobs=args.jobs, checkpoint=args.checkpoint)
    rows = [(int(r), res.medians[i], res.means[i], res.q25[i], res.q75[i],
             int(res.samples - res.clipped[i]), int(res.clipped[i]))
            for i, r in enumerate(res.radii)]
    with timer.stage("write"):
        _finish(args, "vol-scaling", outs, timer,
                ("r", "median", "mean", "q25", "q75", "kept", "clipped"), rows)
        keep = res.clipped < res.samples
        report.save_series_figure(
            outs.figure, res.radii[keep], res.medians[keep], "r",
            "median |B(0, r)|",
            f"volume scaling R={args.R} (slope {res.fit.slope:.4f})",
            loglog=True, fit=res.fit)
    print(f"slope={res.fit.slope:.6f} r_squared={res.fit.r_squared:.6f} "
          f"samples={res.samples}")
    return EXIT_OK


def cmd_hk_scaling(args) -> int:
    rng = _resolve_rng(args)
    timer = StageTimer()
    outs = _outputs(args)
    with timer.stage("experiment"):
        res = probes.heat_kernel_scaling_experiment(
            args.R, args.ns, args.samples, rng, K_factor=args.K,
            jobs=args.jobs, beta=args.beta, checkpoint=args.checkpoint)
    rows = [(int(n), res.medians[i], res.means[i], res.q25[i], res.q75[i],
             res.normalized_median[i], res.normalized_variance[i])
            for i, n in enumerate(res.ns)]
    with timer.stage("write"):
        _finish(args, "hk-scaling", outs, timer,
                ("n", "median", "mean", "q25", "q75", "norm_median",
                 "norm_variance"), rows)
        report.save_series_figure(
            outs.figure, res.ns, res.medians, "n", "median p_2n(0, 0)",
            f"return kernel scaling R={args.R} (slope {res.fit.slope:.4f})",
            loglog=True, fit=res.fit)
    print(f"slope={res.fit.slope:.6f} r_squared={res.fit.r_squared:.6f} "
          f"kept={res.values.shape[0]} rejected={res.rejected} "
          f"max_drift={res.max_drift:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def _add_seed(p) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (fallback: env UST3D_SEED)")
    p.add_argument("--stream", type=int, default=0,
                   help="RNG stream offset (default 0)")


def _add_jobs(p) -> None:
    p.add_argument("--jobs", type=int, default=DEFAULT_JOBS,
                   help=f"worker threads, results independent of the value "
                        f"(default {DEFAULT_JOBS})")


def _add_out(p, stem: str) -> None:
    p.add_argument("--out", default=stem,
                   help=f"output stem; writes <stem>.csv and "
                        f"<stem>.manifest.json (default {stem})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ust3d",
        description="Uniform spanning tree on Z^3: Wilson sampler, "
                    "loop-erased walks, intrinsic-ball and heat-kernel "
                    "experiments. Tables are CSV, manifests JSON, trees "
                    "plain text; figures are rendered next to each table.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("sample", parents=[], help="sample a window tree",
                       description="Sample the spanning tree on the window "
                                   "B(0, R) and write it as plain text.")
    p.add_argument("--radius", "-R", type=int, required=True, help="window radius")
    p.add_argument("--K", type=int, default=4,
                   help="root-branch truncation factor (default 4)")
    p.add_argument("--ordering", choices=("lexicographic", "spiral"),
                   default="lexicographic", help="vertex attachment order")
    _add_seed(p)
    _add_out(p, "sample")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("ball", help="intrinsic ball volumes of a stored tree",
                       description="Volume table of intrinsic balls around a "
                                   "vertex. CSV columns: r, volume, clipped.")
    p.add_argument("--tree", required=True, help="tree file from `sample`")
    p.add_argument("--radii", type=_int_list, required=True,
                   help="comma-separated radii")
    p.add_argument("--center", type=_point, default=(0, 0, 0),
                   help="center vertex 'x,y,z' (default origin)")
    _add_out(p, "ball")
    p.set_defaults(func=cmd_ball, seed=None)

    p = sub.add_parser("reff", help="effective resistance on a stored tree",
                       description="Effective resistance between a vertex and "
                                   "a vertex or set. CSV columns: x, "
                                   "terminals, resistance.")
    p.add_argument("--tree", required=True, help="tree file from `sample`")
    p.add_argument("--x", type=_point, required=True, help="source vertex")
    p.add_argument("--y", type=_point, default=None, help="target vertex")
    p.add_argument("--set", type=_point_list, default=None,
                   help="target set 'x,y,z;x,y,z;...' (overrides --y)")
    _add_out(p, "reff")
    p.set_defaults(func=cmd_reff, seed=None)

    p = sub.add_parser("hk", help="return kernel p_n(x, x) on a stored tree",
                       description="Heat kernel of the walk on the tree. "
                                   "CSV columns: n, value, stderr.")
    p.add_argument("--tree", required=True, help="tree file from `sample`")
    p.add_argument("--x", type=_point, default=(0, 0, 0),
                   help="base vertex (default origin)")
    p.add_argument("--n", type=_int_list, required=True,
                   help="comma-separated step counts")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true",
                      help="exact iteration (default)")
    mode.add_argument("--mc", action="store_true", help="Monte Carlo estimate")
    p.add_argument("--trials", type=int, default=10 ** 5,
                   help="Monte Carlo walks per n (default 1e5)")
    _add_seed(p)
    _add_out(p, "hk")
    p.set_defaults(func=cmd_hk)

    p = sub.add_parser("beta", help="loop-erasure length exponent",
                       description="Mean loop-erasure length at each exit "
                                   "radius and the fitted growth exponent. "
                                   "CSV columns: n, mean, stderr, trials.")
    p.add_argument("--radii", type=_int_list,
                   default=[16, 32, 64, 128, 256, 512, 1024],
                   help="comma-separated exit radii (default 16..1024)")
    p.add_argument("--trials", type=int, default=1000,
                   help="walks per radius (default 1000)")
    _add_seed(p)
    _add_jobs(p)
    _add_out(p, "beta")
    p.set_defaults(func=cmd_beta)

    p = sub.add_parser("tails", help="tail frequencies of the loop-erasure length",
                       description="Empirical upper/lower tail frequencies of "
                                   "M_n at multiples of its mean. CSV "
                                   "columns: kappa, upper_freq, lower_freq.")
    p.add_argument("--n", type=int, default=128, help="exit radius (default 128)")
    p.add_argument("--trials", type=int, default=10 ** 4,
                   help="walks (default 1e4)")
    p.add_argument("--kappas", type=_float_list,
                   default=[1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75,
                            3.0, 3.25, 3.5, 3.75, 4.0],
                   help="comma-separated multipliers >= 1")
    _add_seed(p)
    _add_jobs(p)
    _add_out(p, "tails")
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("uniformity", help="chi-square uniformity of the finite sampler",
                       description="Sample spanning trees of a named graph "
                                   "and tally identities against the "
                                   "matrix-tree count. CSV columns: tree, "
                                   "count.")
    p.add_argument("--graph", choices=("k3", "c4", "grid3"), default="k3",
                   help="test graph (default k3)")
    p.add_argument("--samples", type=int, default=10 ** 5,
                   help="tree samples (default 1e5)")
    _add_seed(p)
    _add_out(p, "uniformity")
    p.set_defaults(func=cmd_uniformity)

    p = sub.add_parser("spiral", help="outward box-center sequence",
                       description="Deterministic spiral covering of the "
                                   "cube of 2N(2N-1)^2 boxes. CSV columns: "
                                   "index, x, y, z.")
    p.add_argument("--N", type=int, required=True, help="box count scale")
    p.add_argument("--m", type=int, required=True, help="box side length")
    _add_out(p, "spiral")
    p.set_defaults(func=cmd_spiral, seed=None)

    p = sub.add_parser("tube-events", help="tube crossing events of one walk",
                       description="Per-box crossing/cut/length/hittability "
                                   "flags on a sampled walk (CSV columns: j, "
                                   "crossing, cut_point, length_ok, hittable, "
                                   "f_prob, f_stderr), or with --survey-n the "
                                   "crossing frequency of box 0+1 (CSV "
                                   "columns: N, m, q, trials, prob, stderr).")
    p.add_argument("--m", type=int, default=64, help="tube width (default 64)")
    p.add_argument("--N", type=int, default=2, help="box count scale (default 2)")
    p.add_argument("--boxes", type=int, default=None,
                   help="boxes to examine (default N)")
    p.add_argument("--steps", type=int, default=None,
                   help="walk length (default scaled to the boxes)")
    p.add_argument("--length-constant", type=float, default=5.0,
                   help="C in the length bound C*m^beta (default 5)")
    p.add_argument("--eta", type=float, default=0.02,
                   help="hittability threshold (default 0.02)")
    p.add_argument("--hit-trials", type=int, default=10 ** 3,
                   help="Monte Carlo walks per hittability flag (default 1e3)")
    p.add_argument("--survey-n", type=_int_list, default=None,
                   help="survey mode: crossing frequency at these N values")
    p.add_argument("--trials", type=int, default=10 ** 5,
                   help="survey walks per N (default 1e5)")
    _add_seed(p)
    _add_jobs(p)
    _add_out(p, "tube-events")
    p.set_defaults(func=cmd_tube_events)

    p = sub.add_parser("vol-scaling", help="ball volume growth across samples",
                       description="Median intrinsic ball volume against the "
                                   "radius over independent window trees. CSV "
                                   "columns: r, median, mean, q25, q75, kept, "
                                   "clipped.")
    p.add_argument("--R", type=int, default=64, help="window radius (default 64)")
    p.add_argument("--K", type=int, default=4,
                   help="root-branch truncation factor (default 4)")
    p.add_argument("--radii", type=_int_list, default=[4, 6, 8, 11, 16, 23, 32],
                   help="ball radii (default 4..32)")
    p.add_argument("--samples", type=int, default=20,
                   help="tree samples (default 20)")
    p.add_argument("--checkpoint", default=None,
                   help="per-sample progress file; reruns resume")
    _add_seed(p)
    _add_jobs(p)
    _add_out(p, "vol-scaling")
    p.set_defaults(func=cmd_vol_scaling)

    p = sub.add_parser("hk-scaling", help="return kernel decay across samples",
                       description="Median p_2n(0, 0) against n over "
                                   "independent window trees, plus the "
                                   "normalized spread diagnostic. CSV "
                                   "columns: n, median, mean, q25, q75, "
                                   "norm_median, norm_variance.")
    p.add_argument("--R", type=int, default=64, help="window radius (default 64)")
    p.add_argument("--K", type=int, default=4,
                   help="root-branch truncation factor (default 4)")
    p.add_argument("--ns", type=_int_list, default=[8, 16, 32, 64, 128],
                   help="half step counts (default 8..128)")
    p.add_argument("--samples", type=int, default=20,
                   help="tree samples (default 20)")
    p.add_argument("--beta", type=float, default=lerw.BETA_POINT_ESTIMATE,
                   help="growth exponent for normalization (default 1.624)")
    p.add_argument("--checkpoint", default=None,
                   help="per-sample progress file; reruns resume")
    _add_seed(p)
    _add_jobs(p)
    _add_out(p, "hk-scaling")
    p.set_defaults(func=cmd_hk_scaling)

    return parser


def dispatch(argv) -> int:
    """Route argv to a subcommand; exit 0 ok, 1 usage error, 2 runtime failure."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
