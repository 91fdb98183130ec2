"""Visit detection: streaming baseline correction, iterative curve fitting,
smoothed differentiation, zero-crossing peak detection and slope-based
isolation of each peak into region-of-interest cells and transition cells.

Peaks above the reference are maxima; dwells on the far side of the basecamp
show up as valleys and are handled with mirrored polarity. Detection is
causal: a crossing is confirmed one sample after it happens, and the reported
apex never precedes the last rising sample.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

MAXIMUM = "maximum"
MINIMUM = "minimum"

RECT_GAUSSIAN = "RectGaussian"
RECT_LORENTZIAN = "RectLorentzian"
TRI_GAUSSIAN = "TriGaussian"
SHAPE_VARIANTS = (RECT_GAUSSIAN, RECT_LORENTZIAN, TRI_GAUSSIAN)


@dataclass
class PeakShapeModel:
    """Parametric peak template in sample units: a plateau/triangle core blurred
    by a Gaussian or Lorentzian spread."""

    variant: str = RECT_GAUSSIAN
    center: float = 0.0
    height: float = 1.0
    plateau: float = 1.0   # half-extent of the flat (or triangular) core
    spread: float = 1.0

    def __post_init__(self):
        if self.variant not in SHAPE_VARIANTS:
            raise ValueError(f"unknown peak shape {self.variant}")
        if self.spread <= 0 or self.plateau < 0:
            raise ValueError("spread must be > 0 and plateau >= 0")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        u = x - self.center
        w = max(self.plateau, 1e-6)
        s = self.spread
        if self.variant == RECT_GAUSSIAN:
            num = erf((u + w) / (s * math.sqrt(2))) - erf((u - w) / (s * math.sqrt(2)))
            den = 2.0 * erf(w / (s * math.sqrt(2)))
        elif self.variant == RECT_LORENTZIAN:
            num = np.arctan((u + w) / s) - np.arctan((u - w) / s)
            den = 2.0 * math.atan(w / s)
        else:  # triangle * Gaussian
            num = _gauss_i2(u + w, s) - 2.0 * _gauss_i2(u, s) + _gauss_i2(u - w, s)
            den = _gauss_i2(w, s) - 2.0 * _gauss_i2(0.0, s) + _gauss_i2(-w, s)
        return self.height * num / den


def _gauss_i2(z, s):
    """Second antiderivative of the N(0, s) pdf: z*Phi(z/s) + s*phi(z/s)."""
    t = np.asarray(z, dtype=float) / s
    return np.asarray(z) * 0.5 * (1.0 + erf(t / math.sqrt(2))) \
        + s * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


@dataclass
class FittedPeak:
    apex_idx: int
    polarity: str
    height: float
    detection_idx: int = -1       # the (one late) streaming confirmation index
    start_idx: int = -1
    end_idx: int = -1
    shape: PeakShapeModel | None = None
    region: tuple = (-1, -1)
    noise_band: float = 0.0       # |d1| band used for this peak's bound walk
    flags: set = field(default_factory=set)

    def width(self):
        return max(self.end_idx - self.start_idx, 0)

    def area(self):
        return abs(self.height) * self.width()


@dataclass
class Visit:
    roi_cells: list                 # ordered unique cell ids (raw ints)
    transition_cells_in: list
    transition_cells_out: list
    entry_time: float
    exit_time: float
    apex_time: float
    slope_constant: float
    peak: FittedPeak | None = None
    flags: set = field(default_factory=set)

    def __post_init__(self):
        if not self.roi_cells:
            raise ValueError("visit with empty roi cell set")
        if not self.entry_time < self.exit_time:
            raise ValueError("visit entry must precede exit")


@dataclass
class BaselineResult:
    corrected: np.ndarray
    is_baseline: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def mean_filter(x, width):
    """Boxcar mean, renormalized over available samples at the edges."""
    if width <= 1:
        return np.asarray(x, dtype=float).copy()
    x = np.asarray(x, dtype=float)
    kernel = np.ones(width)
    coverage = np.convolve(np.ones(len(x)), kernel, mode="same")
    return np.convolve(x, kernel, mode="same") / coverage


def baseline(values, window=720, k=3.0, sigma_floor=1.0, warmup=8):
    """Streaming baseline correction with a trailing moving mean and std.

    A sample within k standard deviations of the trailing mean is baseline and
    zeroed in the corrected view; anything else keeps its offset and never
    enters the tracker, so long stays do not get absorbed into the reference.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    corrected = np.zeros(n)
    is_base = np.zeros(n, dtype=bool)
    mean_track = np.zeros(n)
    std_track = np.zeros(n)
    buf = np.empty(window)
    count = 0
    head = 0
    s1 = 0.0
    s2 = 0.0
    for t in range(n):
        if count:
            mu = s1 / count
            var = max(s2 / count - mu * mu, 0.0)
            sd = max(math.sqrt(var), sigma_floor)
        else:
            mu, sd = x[t], sigma_floor
        mean_track[t] = mu
        std_track[t] = sd
        if count >= warmup and abs(x[t] - mu) > k * sd:
            corrected[t] = x[t]
            continue
        is_base[t] = True
        if count == window:
            old = buf[head]
            s1 -= old
            s2 -= old * old
        else:
            count += 1
        buf[head] = x[t]
        s1 += x[t]
        s2 += x[t] * x[t]
        head = (head + 1) % window
    return BaselineResult(corrected, is_base, mean_track, std_track)


def candidate_regions(corrected, min_run=1, merge_gap=0):
    """Contiguous nonzero runs of the corrected signal, short gaps merged."""
    nz = np.flatnonzero(corrected != 0)
    if nz.size == 0:
        return []
    splits = np.flatnonzero(np.diff(nz) > max(merge_gap, 1)) + 1
    runs = [(int(g[0]), int(g[-1]) + 1) for g in np.split(nz, splits)]
    return [(lo, hi) for lo, hi in runs if hi - lo >= min_run]


def fit_spans(corrected, min_region=8, merge_gap=5):
    """Per-peak fitting spans: qualifying nonzero runs, with short fragments
    attached to the nearest qualifying neighbor within `merge_gap`.

    Distinct back-to-back excursions keep separate spans (so one shape model
    never straddles two visits), while noise-induced flank fragments of a
    single excursion rejoin it.
    """
    runs = candidate_regions(corrected, 1, 0)
    spans = [list(r) for r in runs if r[1] - r[0] >= min_region]
    if not spans:
        return []
    for lo, hi in runs:
        if hi - lo >= min_region:
            continue
        best = None
        for span in spans:
            if lo >= span[1]:
                gap = lo - span[1]
            elif hi <= span[0]:
                gap = span[0] - hi
            else:
                gap = 0
            if gap <= merge_gap and (best is None or gap < best[0]):
                best = (gap, span)
        if best is not None:
            span = best[1]
            span[0] = min(span[0], lo)
            span[1] = max(span[1], hi)
    return [tuple(s) for s in spans]


def smooth_derivative(values, width=5):
    """Central-difference first derivative, edge-replicated, then mean filtered."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n < 3:
        return np.zeros(n)
    d1 = np.empty(n)
    d1[1:-1] = (x[2:] - x[:-2]) / 2.0
    d1[0] = d1[1]
    d1[-1] = d1[-2]
    return mean_filter(d1, width)


def second_derivative(d1):
    """Central difference of the (smoothed) first derivative."""
    return smooth_derivative(d1, width=1)


def detect_peaks(corrected, d1, d2, min_region=1, merge_gap=0, literal_curvature=False,
                 min_height=0.0):
    """Apex candidates at smoothed-derivative zero crossings.

    Maxima need a downward crossing and negative second difference; valleys
    the mirrored signs. `literal_curvature` applies the positive-curvature
    test to both polarities instead, for comparison runs. The apex index is
    the more extreme sample of the crossing pair and never precedes the last
    sample on the rising side. Apexes under `min_height` are ignored (the
    engine passes the baseline noise band here).
    """
    corrected = np.asarray(corrected, dtype=float)
    n = len(corrected)
    in_region = np.zeros(n, dtype=bool)
    for lo, hi in candidate_regions(corrected, min_region, merge_gap):
        in_region[lo:hi] = True
    peaks = []
    for i in range(n - 1):
        if d1[i] > 0 >= d1[i + 1]:
            pair = (i, i + 1)
            apex = pair[0] if corrected[pair[0]] > corrected[pair[1]] else pair[1]
            polarity = MAXIMUM
        elif d1[i] < 0 <= d1[i + 1]:
            pair = (i, i + 1)
            apex = pair[0] if corrected[pair[0]] < corrected[pair[1]] else pair[1]
            polarity = MINIMUM
        else:
            continue
        if not in_region[apex]:
            continue
        if abs(corrected[apex]) < min_height:
            continue
        curv_ok = d2[apex] > 0 if literal_curvature else (
            d2[apex] < 0 if polarity == MAXIMUM else d2[apex] > 0)
        if not curv_ok:
            continue
        peaks.append(FittedPeak(
            apex_idx=int(apex), polarity=polarity,
            height=float(corrected[apex]), detection_idx=i + 1))
    return peaks


def peak_bounds(peak, d1, d2, band_d1=1e-9, band_d2=1e-9, limits=None):
    """Start from the first derivative, end from the second (noise-band walk).

    Walking left of the apex skips any flat top, then follows the rising edge
    until |d1| returns into the noise band; mirrored on the right with d2.
    Hitting the signal edge clamps the bound and flags the peak.
    """
    n = len(d1)
    lo_lim, hi_lim = limits if limits is not None else (0, n)
    apex = peak.apex_idx

    i = apex - 1
    while i > lo_lim and abs(d1[i]) <= band_d1:   # flat cap
        i -= 1
    while i > lo_lim and abs(d1[i]) > band_d1:    # rising edge
        i -= 1
    start = i
    if i <= lo_lim and lo_lim == 0 and abs(d1[max(i, 0)]) > band_d1:
        peak.flags.add("edge_clamped")
        start = 0

    j = apex + 1
    while j < hi_lim - 1 and abs(d2[j]) <= band_d2:  # flat cap
        j += 1
    while j < hi_lim - 1 and abs(d2[j]) > band_d2:   # falling curvature lobe
        j += 1
    end = j
    if j >= hi_lim - 1 and hi_lim == n and abs(d2[min(j, n - 1)]) > band_d2:
        peak.flags.add("edge_clamped")
        end = n - 1

    start = max(start, 0)
    end = min(end, n - 1)
    if start >= apex:
        start = max(apex - 1, 0)
    if end <= apex:
        end = min(apex + 1, n - 1)
    peak.start_idx = int(start)
    peak.end_idx = int(end)
    return peak.start_idx, peak.end_idx


def classify_shape(values, peak, d1, d2, band_d1):
    """Pick a shape variant from derivative signatures.

    A near-zero d1 run across the cap (relative to the edge slope) says the
    core is flat, i.e. the rect family; a triangular core crosses zero in a
    point. Among flat caps, heavy blur tails well past the half-height span
    mark the Lorentzian. Thresholds were calibrated on the clean shape grid.
    Falls back to RectGaussian when the span is degenerate.
    """
    lo, hi = peak.start_idx, peak.end_idx
    if lo < 0 or hi <= lo:
        raise ValueError("classify_shape needs peak bounds")
    apex = peak.apex_idx
    values = np.asarray(values, dtype=float)
    sign = 1.0 if peak.polarity == MAXIMUM else -1.0
    h = abs(peak.height)

    # half-height run around the apex
    half_lo = apex
    while half_lo - 1 >= lo and sign * values[half_lo - 1] >= 0.5 * h:
        half_lo -= 1
    half_hi = apex
    while half_hi + 1 <= hi and sign * values[half_hi + 1] >= 0.5 * h:
        half_hi += 1
    w50 = half_hi - half_lo + 1
    if w50 < 2 or h == 0:
        peak.flags.add("shape_ambiguous")
        return RECT_GAUSSIAN

    # cap flatness: zero-d1 run at the apex, measured against the edge slope
    slope_band = 0.15 * float(np.max(np.abs(d1[lo:hi + 1])))
    run_lo = apex
    while run_lo - 1 > lo and abs(d1[run_lo - 1]) <= slope_band:
        run_lo -= 1
    run_hi = apex
    while run_hi + 1 < hi and abs(d1[run_hi + 1]) <= slope_band:
        run_hi += 1
    if (run_hi - run_lo + 1) / w50 < 0.15:
        return TRI_GAUSSIAN

    off = int(round(1.2 * w50))
    left = sign * values[max(apex - off, 0)]
    right = sign * values[min(apex + off, len(values) - 1)]
    return RECT_LORENTZIAN if max(left, right) > 0.005 * h else RECT_GAUSSIAN


_FIT_BOUND_SPREAD = (0.3, None)


def _initial_guess(y, lo, hi):
    seg = y[lo:hi]
    peak_rel = int(np.argmax(np.abs(seg)))
    h = float(seg[peak_rel])
    # center of mass is a steadier anchor than the noisy argmax
    weights = np.abs(seg)
    apex_rel = float(np.sum(np.arange(len(seg)) * weights) / np.sum(weights))
    above = np.flatnonzero(np.abs(seg) >= 0.5 * abs(h))
    w50 = float(above[-1] - above[0] + 1) if above.size else 3.0
    return apex_rel, h, max(w50 / 2.0, 0.5), max(w50 / 4.0, 0.6)


def fit_curve(corrected, models=SHAPE_VARIANTS, regions=None, max_iter=100,
              min_region=1, merge_gap=0):
    """Least-squares fit of the best shape model per candidate region.

    The winning model replaces the raw samples of its region in the returned
    signal; the relative residual is reported per region. The fitted center is
    bounded within two samples of the raw apex so peaks cannot drift. Regions
    where the optimizer fails pass through unfitted with a flag.
    """
    y = np.asarray(corrected, dtype=float)
    fitted = y.copy()
    if regions is None:
        regions = candidate_regions(y, min_region, merge_gap)
    reports = []
    for lo, hi in regions:
        seg = y[lo:hi]
        x = np.arange(hi - lo, dtype=float)
        apex_rel, h, w0, s0 = _initial_guess(y, lo, hi)
        sign = 1.0 if h >= 0 else -1.0
        yy = sign * seg
        best = None
        for variant in models:
            p0 = np.array([apex_rel, abs(h), w0, s0])
            lb = np.array([max(apex_rel - 2.0, 0.0), 0.05 * abs(h), 1e-3, _FIT_BOUND_SPREAD[0]])
            ub = np.array([min(apex_rel + 2.0, len(x) - 1.0), 4.0 * abs(h) + 1e-9,
                           float(len(x)), float(len(x))])
            p0 = np.clip(p0, lb, ub)

            def resid(p, variant=variant):
                m = PeakShapeModel(variant, p[0], p[1], p[2], p[3])
                return m.evaluate(x) - yy

            try:
                res = least_squares(resid, p0, bounds=(lb, ub), method="trf",
                                    max_nfev=max_iter, ftol=1e-6, xtol=1e-10)
            except Exception:
                continue
            if not np.all(np.isfinite(res.fun)):
                continue
            sse = float(np.sum(res.fun ** 2))
            if best is None or sse < best[0]:
                best = (sse, variant, res.x)
        scale = float(np.sum(yy ** 2)) or 1.0
        if best is None:
            reports.append({"region": (lo, hi), "variant": None, "model": None,
                            "rms": None, "flag": "fit_failed"})
            continue
        sse, variant, p = best
        model = PeakShapeModel(variant, lo + p[0], sign * p[1], p[2], p[3])
        fitted[lo:hi] = model.evaluate(np.arange(lo, hi, dtype=float))
        reports.append({"region": (lo, hi), "variant": variant, "model": model,
                        "rms": math.sqrt(sse / len(x)), "rel_residual": math.sqrt(sse / scale),
                        "flag": None})
    return fitted, reports


def estimate_transition_slope(d1, peak, band_d1, trim=0.25):
    """Trimmed mean of |d1| over the rising and falling edges of a peak.

    Edge samples are those carrying at least half the span's maximum |d1|;
    this separates the travel flanks from the near-flat cap regardless of the
    peak's height scale.
    """
    lo, hi, apex = peak.start_idx, peak.end_idx, peak.apex_idx
    span = np.concatenate([np.abs(d1[lo:apex]), np.abs(d1[apex + 1:hi + 1])])
    span = span[span > band_d1]
    if span.size == 0:
        return 0.0
    edges = span[span >= 0.5 * span.max()]
    edges = np.sort(edges)
    k = int(len(edges) * trim)
    core = edges[k:len(edges) - k] if len(edges) > 2 * k else edges
    return float(np.mean(core))


def isolate_visit(cells, times, values, peak, d1, band_d1, slope_tol=0.25):
    """Split a bounded peak into transition cells and the static ROI core.

    Samples whose |d1| sits within `slope_tol` of the estimated transition
    slope m are travel; the contiguous non-travel run around the apex that
    also dwells (a neighbor sample shares its value within the same band) is
    the region of interest. Returns None for pure spikes with no dwell.
    """
    lo, hi, apex = peak.start_idx, peak.end_idx, peak.apex_idx
    m = estimate_transition_slope(d1, peak, band_d1)
    if m <= 0:
        return None
    tol = slope_tol * m
    is_transition = np.abs(np.abs(d1[lo:hi + 1]) - m) <= tol

    # the static element lives at the cap: stay within 70% of the apex level
    # so half-ramp corner samples cannot drag the run into the reference dwell
    sign = 1.0 if peak.polarity == MAXIMUM else -1.0
    cap_floor = 0.7 * sign * values[apex]

    def in_cap(i):
        return sign * values[i] >= cap_floor

    run_lo = apex
    while run_lo - 1 >= lo and not is_transition[run_lo - 1 - lo] and in_cap(run_lo - 1):
        run_lo -= 1
    run_hi = apex
    while run_hi + 1 <= hi and not is_transition[run_hi + 1 - lo] and in_cap(run_hi + 1):
        run_hi += 1

    def dwells(i):
        back = abs(values[i] - values[i - 1]) if i - 1 >= 0 else math.inf
        fwd = abs(values[i + 1] - values[i]) if i + 1 < len(values) else math.inf
        return min(back, fwd) <= tol

    while run_lo <= run_hi and not dwells(run_lo):
        run_lo += 1
    while run_hi >= run_lo and not dwells(run_hi):
        run_hi -= 1
    if run_hi < run_lo:
        return None

    roi_cells = _ordered_unique(cells[run_lo:run_hi + 1])
    roi_set = set(roi_cells)
    t_in = [c for c in _ordered_unique(cells[lo:run_lo]) if c not in roi_set]
    t_out = [c for c in _ordered_unique(cells[run_hi + 1:hi + 1]) if c not in roi_set]
    return Visit(
        roi_cells=roi_cells,
        transition_cells_in=t_in,
        transition_cells_out=t_out,
        entry_time=float(times[run_lo]),
        exit_time=float(times[run_hi]) if run_hi > run_lo else float(times[run_hi]) + 1e-9,
        apex_time=float(times[apex]),
        slope_constant=m,
        peak=peak,
        flags=set(peak.flags),
    )


def _ordered_unique(seq):
    out = []
    last = object()
    seen = set()
    for c in seq:
        c = int(c)
        if c != last and c not in seen:
            out.append(c)
            seen.add(c)
        last = c
    return out


def dump_visits_csv(visits, path):
    """Per-visit debug dump."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("visit_id,entry,apex,exit,shape,height,n_roi_cells,"
                 "n_transition_cells,flags\n")
        for vid, v in enumerate(visits):
            shape = v.peak.shape.variant if v.peak and v.peak.shape else ""
            height = f"{v.peak.height:.6g}" if v.peak else ""
            n_tr = len(v.transition_cells_in) + len(v.transition_cells_out)
            flags = "|".join(sorted(v.flags))
            fh.write(f"{vid},{v.entry_time:.3f},{v.apex_time:.3f},{v.exit_time:.3f},"
                     f"{shape},{height},{len(v.roi_cells)},{n_tr},{flags}\n")


def resolve_overlaps(peaks):
    """Enforce non-adjacency: nested peaks are flagged, partial overlaps keep
    the larger-area peak."""
    peaks = sorted(peaks, key=lambda p: (p.start_idx, p.end_idx))
    kept = []
    for p in peaks:
        drop = False
        for q in kept:
            if p.start_idx > q.end_idx or p.end_idx < q.start_idx:
                continue
            if p.start_idx >= q.start_idx and p.end_idx <= q.end_idx:
                p.flags.add("nested")
                continue
            if p.area() <= q.area():
                drop = True
                break
            q.flags.add("dropped_overlap")
        if not drop:
            kept.append(p)
    return [p for p in kept if "dropped_overlap" not in p.flags]


@dataclass
class EngineConfig:
    smooth_width: int = 5
    baseline_window: int = 720
    baseline_k: float = 3.0
    sigma_floor: float = 1.0
    warmup: int = 32
    min_region: int = 8
    merge_gap: int | None = None
    fit_peaks: bool = True
    max_fit_iter: int = 100
    slope_tol: float = 0.25
    literal_curvature: bool = False


@dataclass
class EngineResult:
    visits: list
    peaks: list
    corrected: np.ndarray
    fitted: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    regions: list
    baseline: BaselineResult
    fit_reports: list
    quiet: np.ndarray = None   # baseline samples clear of any span margin


def detect_visits(signal, config=None):
    """Full per-signal chain from rank offsets to isolated visits."""
    cfg = config or EngineConfig()
    merge_gap = cfg.smooth_width if cfg.merge_gap is None else cfg.merge_gap
    offsets = (signal.values - signal.basecamp_rank).astype(float)
    smoothed = mean_filter(offsets, cfg.smooth_width)
    bl = baseline(smoothed, cfg.baseline_window, cfg.baseline_k, cfg.sigma_floor, cfg.warmup)
    spans = fit_spans(bl.corrected, cfg.min_region, merge_gap)

    if cfg.fit_peaks:
        fitted, fit_reports = fit_curve(bl.corrected, SHAPE_VARIANTS, spans,
                                        cfg.max_fit_iter)
    else:
        fitted, fit_reports = bl.corrected.copy(), []

    d1 = smooth_derivative(fitted, cfg.smooth_width)
    d2 = second_derivative(d1)
    quiet = bl.is_baseline.copy()
    for lo, hi in spans:
        quiet[max(lo - cfg.smooth_width, 0):min(hi + cfg.smooth_width, len(quiet))] = False
    band_d1 = cfg.baseline_k * (float(np.std(d1[quiet])) if np.any(quiet) else 0.0) + 1e-9
    band_d2 = cfg.baseline_k * (float(np.std(d2[quiet])) if np.any(quiet) else 0.0) + 1e-9
    min_height = cfg.baseline_k * float(np.median(bl.std))

    peaks = detect_peaks(fitted, d1, d2, cfg.min_region, merge_gap,
                         cfg.literal_curvature, min_height)
    bounded = []
    for p in peaks:
        si = next((k for k, (lo, hi) in enumerate(spans) if lo <= p.apex_idx < hi), None)
        if si is None:
            continue
        lo, hi = spans[si]
        # the bound walk stays within this span's half-gaps to its neighbors
        margin = 3 * cfg.smooth_width
        left = max(lo - margin, 0)
        right = min(hi + margin, len(fitted))
        if si > 0:
            left = max(left, (spans[si - 1][1] + lo) // 2)
        if si + 1 < len(spans):
            right = min(right, (hi + spans[si + 1][0]) // 2)
        span_edge = float(np.max(np.abs(d1[lo:hi]))) if hi > lo else 0.0
        b1 = max(band_d1, 0.03 * span_edge)
        b2 = max(band_d2, 0.03 * float(np.max(np.abs(d2[lo:hi]))) if hi > lo else band_d2)
        peak_bounds(p, d1, d2, b1, b2, (left, right))
        p.region = (lo, hi)
        p.noise_band = b1
        report = next((r for r in fit_reports if r["region"] == (lo, hi)), None)
        if report and report.get("model") is not None:
            p.shape = report["model"]
        else:
            try:
                p.shape = PeakShapeModel(classify_shape(fitted, p, d1, d2, b1))
            except ValueError:
                p.shape = None
        bounded.append(p)

    times = signal.times
    visits = []
    for p in resolve_overlaps(bounded):
        v = isolate_visit(signal.cells, times, fitted, p, d1,
                          p.noise_band or band_d1, cfg.slope_tol)
        if v is not None:
            visits.append(v)
    visits.sort(key=lambda v: v.entry_time)
    return EngineResult(visits, bounded, bl.corrected, fitted, d1, d2, spans,
                        bl, fit_reports, quiet)
