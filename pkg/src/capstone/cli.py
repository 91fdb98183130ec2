"""Command-line front end: model extraction, baselines, evaluation, synthetic
data, benchmarks, parameter sweeps, and SVG plots.

Exit codes: 0 success, 2 input/usage problems, 1 internal failures.
"""

import argparse
import sys

import numpy as np

from capstone import baselines, evalbench, geocell
from capstone import model as model_mod
from capstone import peaks, signals, spectral, svgplot
from capstone.config import SessionConfig, load_config
from capstone.ingest import (
    TrajectoryError,
    read_csv,
    read_ground_truth,
    read_plt,
    write_csv,
    write_ground_truth,
)
from capstone.pipeline import run_pipeline
from capstone.synth import InfeasibleSchedule, commuter_profile, synth_generate

INPUT_ERRORS = (TrajectoryError, InfeasibleSchedule, FileNotFoundError,
                IsADirectoryError, ValueError, KeyError)


def _session(args):
    cfg = load_config(args.config) if args.config else SessionConfig()
    if args.cell_level is not None:
        cfg.cell_level = args.cell_level
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    return cfg


def _read_trajectory(path, plt=False):
    return read_plt(path) if plt else read_csv(path)


def cmd_model(args):
    cfg = _session(args)
    traj = _read_trajectory(args.input, args.plt)
    result = run_pipeline(traj, cfg)
    doc = model_mod.serialize(result.model)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(doc)
    if args.visits_out:
        peaks.dump_visits_csv(result.visits, args.visits_out)
    if args.signal_out:
        signals.dump_csv(result.segments[0], args.signal_out)
    if args.periods_out:
        sig = result.segments[0]
        off = (sig.values - sig.basecamp_rank).astype(float)
        periods = spectral.candidate_periods(off, cfg.interval_s)
        spectral.dump_periods_csv(periods, args.periods_out)
    if args.plot:
        sig = result.segments[0]
        off = (sig.values - sig.basecamp_rank).astype(float)
        hours = (sig.times - sig.times[0]) / 3600.0
        svgplot.line_plot([(hours.tolist(), off.tolist(), "offset")], args.plot,
                          title="space-time signal", xlabel="hours",
                          ylabel="rank offset")
    print(f"model: {len(result.model.rois)} rois, "
          f"{len(result.model.transitions)} transitions -> {args.output}")
    return 0


def cmd_baseline(args):
    cfg = _session(args)
    traj = _read_trajectory(args.input, args.plt)
    algo = args.algo
    if algo == "dj":
        clusters, _ = baselines.dj_cluster(traj, cfg.cluster)
    elif algo == "dt":
        clusters, _ = baselines.dt_cluster(traj, cfg.cluster)
    elif algo == "zoi":
        clusters, _ = baselines.zoi_detect(traj, cfg.cluster)
    elif algo == "kmeans":
        pts = np.column_stack([traj.lats, traj.lons])
        centers, labels = baselines.kmeans(pts, args.k, seed=cfg.seed)
        clusters = []
        for c in range(args.k):
            members = np.flatnonzero(labels == c)
            lats, lons = traj.lats[members], traj.lons[members]
            radius = float(np.max(baselines.haversine_m(
                lats, lons, centers[c][0], centers[c][1]))) if members.size else 0.0
            clusters.append(baselines.ClusterRoi(
                float(centers[c][0]), float(centers[c][1]), radius,
                int(members.size), float(traj.times[members].min()),
                float(traj.times[members].max())))
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    baselines.write_clusters_csv(clusters, algo, args.output)
    print(f"{algo}: {len(clusters)} clusters -> {args.output}")
    return 0


def _predicted_from_args(args, level):
    if args.model:
        with open(args.model, encoding="utf-8") as fh:
            model = model_mod.deserialize(fh.read())
        if model.level != level:
            raise ValueError(f"model level {model.level} != truth level {level}")
        return evalbench.model_rois_for_scoring(model)
    clusters = []
    with open(args.clusters, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("algo,"):
            raise ValueError("not a cluster CSV")
        for line in fh:
            f = line.strip().split(",")
            clusters.append(baselines.ClusterRoi(
                float(f[1]), float(f[2]), float(f[3]), int(f[4]),
                float(f[5]), float(f[6])))
    return evalbench.clusters_to_cells(clusters, level)


def cmd_eval(args):
    truth = read_ground_truth(args.truth)
    if not truth:
        raise ValueError("empty ground truth")
    level = truth[0].level
    predicted = _predicted_from_args(args, level)
    report = evalbench.score(predicted, truth)
    lines = [
        "metric,value",
        f"tp,{report.tp}",
        f"fp,{report.fp}",
        f"fn,{report.fn}",
        f"precision,{report.precision:.6f}",
        f"recall,{report.recall:.6f}",
        f"accuracy,{report.accuracy:.6f}",
    ]
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"tp={report.tp} fp={report.fp} fn={report.fn} "
          f"precision={report.precision:.3f} recall={report.recall:.3f} "
          f"accuracy={report.accuracy:.3f}"
          + (" [no predictions]" if "no_predictions" in report.flags else ""))
    return 0


def cmd_bench(args):
    sizes = [int(s) for s in args.sizes.split(",")]
    names = args.pipelines.split(",")
    unknown = [n for n in names if n not in evalbench.STANDARD_PIPELINES]
    if unknown:
        raise ValueError(f"unknown pipelines: {', '.join(unknown)}")
    picked = {n: evalbench.STANDARD_PIPELINES[n] for n in names}
    rows, slopes = evalbench.runtime_bench(sizes, picked, repetitions=args.reps,
                                           seed=args.seed or 0)
    evalbench.write_bench_csv(rows, slopes, args.output)
    for name, slope in slopes.items():
        print(f"{name}: slope {'n/a' if slope is None else f'{slope:.3f}'}")
    return 0


def cmd_sweep(args):
    cfg = _session(args)
    traj = _read_trajectory(args.input, args.plt)
    values = _parse_values(args.values)
    curve = baselines.knee_sweep(traj, args.algo, args.param, values, cfg.cluster)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("param,value,count\n")
        for value, count in curve:
            fh.write(f"{args.param},{value:g},{count}\n")
    print(f"sweep {args.algo}.{args.param}: {len(curve)} points -> {args.output}")
    return 0


def _parse_values(text):
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        out = []
        v = lo
        while v <= hi + 1e-9:
            out.append(v)
            v += step
        return out
    return [float(x) for x in text.split(",")]


def cmd_synth(args):
    profile = commuter_profile(days=args.days, interval_s=args.interval,
                               noise_m=args.noise,
                               level=args.cell_level)
    traj, truth = synth_generate(profile, seed=args.seed or 0)
    write_csv(traj, args.out)
    if args.truth_out:
        write_ground_truth(truth.rois, args.truth_out)
    print(f"synth: {len(traj)} points, {len(truth.rois)} truth rois -> {args.out}")
    return 0


def cmd_plot(args):
    if args.kind == "signal":
        xs, ys = [], []
        with open(args.input, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            ti = header.index("timestamp")
            oi = header.index("offset") if "offset" in header else header.index("rank")
            for line in fh:
                f = line.strip().split(",")
                xs.append(float(f[ti]) / 3600.0)
                ys.append(float(f[oi]))
        svgplot.line_plot([(xs, ys, "offset")], args.output,
                          title="space-time signal", xlabel="hours",
                          ylabel="rank offset")
    elif args.kind == "sweep":
        xs, ys = [], []
        with open(args.input, encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                f = line.strip().split(",")
                xs.append(float(f[1]))
                ys.append(float(f[2]))
        svgplot.line_plot([(xs, ys, "count")], args.output, title="knee sweep",
                          xlabel="parameter value", ylabel="count")
    elif args.kind == "bars":
        cats, series = _read_bars(args.input)
        svgplot.bar_chart(cats, series, args.output, title="comparison")
    else:
        raise ValueError(f"unknown plot kind {args.kind!r}")
    print(f"plot -> {args.output}")
    return 0


def _read_bars(path):
    # expects: header `label,<series1>,<series2>...`, one category per row
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        names = header[1:]
        cats = []
        cols = [[] for _ in names]
        for line in fh:
            f = line.strip().split(",")
            cats.append(f[0])
            for k, v in enumerate(f[1:]):
                cols[k].append(float(v))
    return cats, list(zip(names, cols))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="capstone",
        description="Mobility models from GPS trajectories via space-time signals.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key = value config file")
    common.add_argument("--cell-level", type=int, default=None,
                        help=f"grid level (default {geocell.DEFAULT_LEVEL})")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", parents=[common], help="extract a mobility model")
    p.add_argument("--input", required=True)
    p.add_argument("--plt", action="store_true", help="input is Geolife PLT")
    p.add_argument("--output", required=True)
    p.add_argument("--signal-out", default=None)
    p.add_argument("--visits-out", default=None)
    p.add_argument("--periods-out", default=None)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("baseline", parents=[common], help="run a clustering baseline")
    p.add_argument("--algo", required=True, choices=["dj", "dt", "zoi", "kmeans"])
    p.add_argument("--input", required=True)
    p.add_argument("--plt", action="store_true")
    p.add_argument("--k", type=int, default=8, help="clusters for kmeans")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", parents=[common], help="score against ground truth")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model")
    group.add_argument("--clusters")
    p.add_argument("--truth", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="runtime scaling benchmark")
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--pipelines", default="capstone,quadratic,dt,dj,kmeans")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", parents=[common], help="parameter knee sweep")
    p.add_argument("--algo", required=True, choices=["dj", "dt", "zoi"])
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="lo:hi:step or v1,v2,...")
    p.add_argument("--input", required=True)
    p.add_argument("--plt", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic data")
    p.add_argument("--days", type=int, default=14)
    p.add_argument("--interval", type=float, default=5.0)
    p.add_argument("--noise", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot", parents=[common], help="render a CSV as SVG")
    p.add_argument("--kind", required=True, choices=["signal", "sweep", "bars"])
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = getattr(args, "threads", None)
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(threads):
                return args.func(args)
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"capstone {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"capstone {args.command}: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
