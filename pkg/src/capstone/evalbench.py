"""Scoring against planted/attested truth, visit-consistency statistics, and
runtime-scaling benchmarks.

The benchmark's signal-chain workload realizes the smoothing, differentiation
and baseline stages as one dense n-by-n operator applied to the sample vector in single
precision, the matrix formulation a MAC-array DSP executes, so its measured
cost grows quadratically; the production chain
uses the streaming equivalents and is reported alongside for comparison.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import as_strided
from threadpoolctl import threadpool_limits

from capstone import baselines, geocell, peaks
from capstone.model import dice
from capstone.synth import (  # noqa: F401  (re-exported: evaluation owns the generator)
    InfeasibleSchedule,
    PlantedRoi,
    PlantedVisit,
    SynthProfile,
    SynthTruth,
    commuter_profile,
    synth_generate,
)


@dataclass
class ScoreReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    accuracy: float
    matching: list = field(default_factory=list)  # (predicted_id, truth_id, dice)
    flags: set = field(default_factory=set)


def score(predicted, truth):
    """Greedy maximum-Dice matching of predicted ROIs against the truth set.

    `predicted`: iterable of (id, cell set); `truth`: GroundTruthRoi list.
    Any overlap (Dice > 0) makes a valid match. Unmatched predictions are
    false positives, unmatched truths false negatives. Ties in Dice resolve
    by cell content, not by prediction labels, so relabeling predictions
    cannot change the outcome.
    """
    preds = [(pid, set(cells)) for pid, cells in predicted]
    pairs = []
    for pid, cells in preds:
        for t in truth:
            q = dice(cells, t.cells)
            if q > 0:
                anchor = min(cells) if cells else 0
                pairs.append((q, -anchor, pid, t.roi_id, id(t)))
    pairs.sort(key=lambda p: (-p[0], p[1], str(p[3])))
    used_pred, used_truth = set(), set()
    matching = []
    for q, _, pid, tid, tkey in pairs:
        if pid in used_pred or tkey in used_truth:
            continue
        used_pred.add(pid)
        used_truth.add(tkey)
        matching.append((pid, tid, q))
    tp = len(matching)
    fp = len(preds) - tp
    fn = len(truth) - tp
    flags = set()
    if tp + fp == 0:
        precision = 0.0
        flags.add("no_predictions")
    else:
        precision = tp / (tp + fp)
    recall = tp / (tp + fn) if (tp + fn) else 1.0
    accuracy = tp / (tp + fp + fn) if (tp + fp + fn) else 1.0
    return ScoreReport(tp, fp, fn, precision, recall, accuracy, matching, flags)


def model_rois_for_scoring(model):
    """(id, cells) pairs from a mobility model document."""
    return [(r.roi_id, set(r.cells)) for r in model.rois]


def clusters_to_cells(clusters, level):
    """Cover each cluster circle with grid cells for cell-level scoring."""
    out = []
    for ci, c in enumerate(clusters):
        lat_r = (c.radius_m + 1.0) / 111320.0
        lon_r = (c.radius_m + 1.0) / (111320.0 * math.cos(math.radians(c.lat)))
        n_side = max(int(math.ceil(2 * lat_r / _cell_extent_deg(level))) + 1, 3)
        lats = np.linspace(c.lat - lat_r, c.lat + lat_r, n_side)
        lons = np.linspace(c.lon - lon_r, c.lon + lon_r, n_side)
        glat, glon = np.meshgrid(lats, lons)
        d = baselines.haversine_m(glat.ravel(), glon.ravel(), c.lat, c.lon)
        keep = d <= c.radius_m + 1.0
        if not np.any(keep):
            keep = d <= d.min() + 1e-9
        raws = geocell.encode_many(glat.ravel()[keep], glon.ravel()[keep], level)
        out.append((ci, {int(r) for r in raws}))
    return out


def _cell_extent_deg(level):
    side_m = math.sqrt(geocell.average_cell_area_m2(level))
    return side_m / 111320.0


# --- visit consistency ---------------------------------------------------------

VISITS_PER_DAY_BUCKETS = ((2, 5), (6, 9), (10, 12))
MAX_STAY_BUCKETS_H = ((5, 8), (9, 10), (11, 26))
SHORT_VISIT_BUCKETS_MIN = (10, 15, 30)
STAY_TRAVEL_BUCKETS = ("3:2", "4:1", "2:3")


def visit_consistency(visits, total_span_s=None):
    """Distributional statistics over detected visits, bucketed like the
    published consistency tables."""
    if not visits:
        raise ValueError("no visits to summarize")
    entries = np.array([v.entry_time for v in visits])
    exits = np.array([v.exit_time for v in visits])
    stays = exits - entries
    days = np.floor(entries / 86400.0).astype(int)
    per_day = np.bincount(days - days.min())
    per_day = per_day[per_day > 0]

    def bucket_share(counts, lo, hi):
        return float(np.mean((counts >= lo) & (counts <= hi)))

    visits_per_day = {f"{lo}-{hi}": bucket_share(per_day, lo, hi)
                      for lo, hi in VISITS_PER_DAY_BUCKETS}
    max_stay_h = float(stays.max() / 3600.0)
    max_stay = {f"{lo}-{hi}h": float(lo <= max_stay_h <= hi)
                for lo, hi in MAX_STAY_BUCKETS_H}
    short_visits = {f"<{m}min": float(np.mean(stays < m * 60.0))
                    for m in SHORT_VISIT_BUCKETS_MIN}

    stay_total = float(stays.sum())
    if total_span_s is None:
        total_span_s = float(exits.max() - entries.min())
    travel_total = max(total_span_s - stay_total, 0.0)
    stay_frac = stay_total / (stay_total + travel_total) if stay_total + travel_total else 0.0
    return {
        "visits_per_day": visits_per_day,
        "mean_visits_per_day": float(per_day.mean()),
        "max_stay_h": max_stay_h,
        "max_stay_bucket": max_stay,
        "short_visits": short_visits,
        "stay_fraction": stay_frac,
        "stay_travel_ratio": _ratio_bucket(stay_frac),
    }


def _ratio_bucket(stay_frac):
    targets = {"3:2": 3 / 5, "4:1": 4 / 5, "2:3": 2 / 5}
    return min(targets, key=lambda k: abs(targets[k] - stay_frac))


# --- runtime benchmarks --------------------------------------------------------

@dataclass
class BenchRow:
    pipeline: str
    n: int
    median_ms: float | None


def _bench_signal(n, rng):
    """Planted rank-offset signal used by the signal-chain workloads."""
    x = np.zeros(n)
    n_peaks = max(n // 400, 1)
    for k in range(n_peaks):
        c = int(rng.uniform(0.05, 0.95) * n)
        h = rng.uniform(500, 5000) * rng.choice([-1.0, 1.0])
        width = int(rng.uniform(30, 80))
        lo, hi = max(c - width, 0), min(c + width, n)
        x[lo:hi] += h
    return x + rng.normal(0, 20, n)


def _combined_band_kernel(smooth_width=5, baseline_window=720):
    d = np.array([0.5, 0.0, -0.5])
    s = np.ones(smooth_width) / smooth_width
    t = np.zeros(baseline_window + 1)
    t[0] = 1.0
    t[1:] = -1.0 / baseline_window
    kernel = np.convolve(np.convolve(d, s), t)
    center = 1 + smooth_width // 2
    return kernel.astype(np.float32), center


def dense_band_apply(x, kernel, center):
    """Apply the banded chain operator as an explicit dense n-by-n matrix.

    The operator rows are shifted copies of one kernel, so the dense matrix
    is realized as a zero-copy strided view over a single padded buffer; the
    n^2 multiply-accumulates are executed in full, DSP style, in single
    precision.
    """
    n = len(x)
    length = len(kernel)
    x32 = np.ascontiguousarray(x, dtype=np.float32)
    base = n + 2
    padded = np.zeros(base + length + n + 2, dtype=np.float32)
    padded[base:base + length] = kernel
    stride = padded.itemsize
    view = as_strided(padded[base + center:], shape=(n, n), strides=(-stride, stride))
    return np.einsum("ij,j->i", view, x32, optimize=False)


def make_capstone_dense(n, rng):
    x = _bench_signal(n, rng)
    kernel, center = _combined_band_kernel()

    def run():
        d1 = dense_band_apply(x, kernel, center)
        return int(np.count_nonzero(np.diff(np.signbit(d1))))

    return run


def make_capstone_stream(n, rng):
    x = _bench_signal(n, rng)

    def run():
        sm = peaks.mean_filter(x, 5)
        bl = peaks.baseline(sm, 720, 3.0, 1.0, 32)
        d1 = peaks.smooth_derivative(bl.corrected, 5)
        return int(np.count_nonzero(np.diff(np.signbit(d1))))

    return run


def make_quadratic_dummy(n, rng):
    """Calibration workload: a dense all-ones matrix-vector product, i.e. an
    unambiguous n^2 multiply-accumulate count with no other structure."""
    x = rng.normal(0, 1, n).astype(np.float32)
    ones = np.ones(1, dtype=np.float32)

    def run():
        view = as_strided(ones, shape=(n, n), strides=(0, 0))
        return float(np.einsum("ij,j->i", view, x, optimize=False).sum())

    return run


def _bench_trajectory(n, rng):
    from capstone.ingest import Trajectory

    dwell = 46.52 + (np.arange(n) // 600 % 4) * 0.01
    lats = dwell + rng.normal(0, 3e-5, n)
    lons = np.full(n, 6.57) + rng.normal(0, 3e-5, n)
    return Trajectory(lats, lons, np.arange(n) * 5.0)


def make_dt(n, rng):
    traj = _bench_trajectory(n, rng)
    return lambda: len(baselines.dt_cluster(traj)[0])


def make_dj(n, rng):
    traj = _bench_trajectory(n, rng)
    return lambda: len(baselines.dj_cluster(traj)[0])


def make_kmeans(n, rng):
    pts = np.column_stack([rng.normal(0, 1, n), rng.normal(0, 1, n)])
    return lambda: baselines.kmeans(pts, 8, seed=0)[1].sum()


STANDARD_PIPELINES = {
    "capstone": make_capstone_dense,
    "capstone_stream": make_capstone_stream,
    "quadratic": make_quadratic_dummy,
    "dt": make_dt,
    "dj": make_dj,
    "kmeans": make_kmeans,
}


def runtime_bench(sizes, pipelines, repetitions=10, seed=0):
    """Median wall-clock per size (one warm-up discarded) plus a log-log slope.

    `pipelines`: mapping name -> factory(n, rng) returning the zero-argument
    workload to time. The timed region runs on one BLAS thread. Sizes whose
    median lands under 100x the clock resolution are rejected (reported as
    None and excluded from the slope fit).
    """
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    resolution = time.get_clock_info("perf_counter").resolution
    floor = 100.0 * max(resolution, 1e-9)
    rows = []
    slopes = {}
    with threadpool_limits(1):
        for name, factory in pipelines.items():
            pts = []
            for n in sizes:
                rng = np.random.default_rng(seed)
                run = factory(int(n), rng)
                run()  # warm-up, discarded
                times = []
                for _ in range(repetitions):
                    t0 = time.perf_counter()
                    run()
                    times.append(time.perf_counter() - t0)
                med = float(np.median(times))
                if med < floor:
                    rows.append(BenchRow(name, int(n), None))
                    continue
                rows.append(BenchRow(name, int(n), med * 1000.0))
                pts.append((n, med))
            if len(pts) >= 2:
                ln = np.log([p[0] for p in pts])
                lt = np.log([p[1] for p in pts])
                slopes[name] = float(np.polyfit(ln, lt, 1)[0])
            else:
                slopes[name] = None
    return rows, slopes


def write_bench_csv(rows, slopes, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("pipeline,n,median_ms,slope\n")
        for r in rows:
            med = "" if r.median_ms is None else f"{r.median_ms:.3f}"
            slope = slopes.get(r.pipeline)
            fh.write(f"{r.pipeline},{r.n},{med},"
                     f"{'' if slope is None else f'{slope:.3f}'}\n")
