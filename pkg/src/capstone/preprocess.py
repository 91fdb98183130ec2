"""Trajectory de-noising and uniform resampling ahead of space discretization.

The low-pass stage is a normalized boxcar convolution over lat/lon with edge
renormalization. Resampling emits a strictly uniform grid of timestamps; each
output is an inverse-semivariance weighted mean of the most recently seen
input samples, so the pass stays causal up to the one sample that triggers
each output tick.
"""

from dataclasses import dataclass

import numpy as np

from capstone.ingest import Trajectory

_EPS = 1e-12  # guards the zero-lag semivariance


@dataclass
class ResampleSpec:
    interval_s: float = 5.0
    semivar_window: int = 8

    def __post_init__(self):
        if self.interval_s <= 0:
            raise ValueError("interval must be positive")
        if self.semivar_window < 2:
            raise ValueError("semivariance window must be >= 2")


def lowpass(traj, kernel_width=5):
    """Boxcar low-pass over lat/lon; timestamps unchanged.

    The kernel is renormalized over the available samples near the edges, so
    a constant trajectory passes through exactly.
    """
    if kernel_width < 1 or kernel_width % 2 == 0:
        raise ValueError("kernel width must be odd and >= 1")
    if kernel_width == 1 or len(traj) <= 1:
        return Trajectory(traj.lats.copy(), traj.lons.copy(), traj.times.copy(),
                          None if traj.accuracy is None else traj.accuracy.copy())
    kernel = np.ones(kernel_width)
    coverage = np.convolve(np.ones(len(traj)), kernel, mode="same")
    lats = np.convolve(traj.lats, kernel, mode="same") / coverage
    lons = np.convolve(traj.lons, kernel, mode="same") / coverage
    return Trajectory(lats, lons, traj.times.copy(),
                      None if traj.accuracy is None else traj.accuracy.copy())


def split_gaps(traj, max_gap_s=3600.0):
    """Split into segments at sampling gaps longer than `max_gap_s`."""
    if len(traj) == 0:
        return []
    cuts = np.flatnonzero(np.diff(traj.times) > max_gap_s) + 1
    segments = []
    for lo, hi in zip(np.concatenate([[0], cuts]), np.concatenate([cuts, [len(traj)]])):
        acc = None if traj.accuracy is None else traj.accuracy[lo:hi]
        segments.append(Trajectory(traj.lats[lo:hi], traj.lons[lo:hi], traj.times[lo:hi], acc))
    return segments


def interpolate(traj, spec=None):
    """Resample onto t0, t0+d, t0+2d, ... with inverse-semivariance weights.

    For each output tick the window is the `semivar_window` most recent input
    samples once the tick time has been passed. A linear-through-origin
    semivariance fit over the window's pairwise (lag, squared displacement)
    points yields gamma(h); weights are 1/(gamma+eps), normalized. Ticks that
    land exactly on an input timestamp copy that sample.
    """
    spec = spec or ResampleSpec()
    n = len(traj)
    if n < 2:
        raise ValueError("interpolation needs at least 2 points")
    t0, t_end = traj.times[0], traj.times[-1]
    n_out = int(np.floor((t_end - t0) / spec.interval_s)) + 1
    out_t = t0 + spec.interval_s * np.arange(n_out)

    w = min(spec.semivar_window, n)
    # window = the last w samples at or before each tick's trigger sample
    trigger = np.searchsorted(traj.times, out_t, side="left")
    hi = np.minimum(trigger, n - 1)
    lo = np.maximum(hi - w + 1, 0)
    idx = lo[:, None] + np.arange(w)[None, :]
    idx = np.minimum(idx, hi[:, None])  # clamp short head windows by repetition

    tw = traj.times[idx]
    law = traj.lats[idx]
    low = traj.lons[idx]

    # per-window linear semivariance fit gamma(h) = c * h over all sample pairs
    pa, pb = np.triu_indices(w, k=1)
    lag = np.abs(tw[:, pa] - tw[:, pb])
    gamma = 0.5 * ((law[:, pa] - law[:, pb]) ** 2 + (low[:, pa] - low[:, pb]) ** 2)
    denom = np.sum(lag * lag, axis=1)
    c = np.where(denom > 0, np.sum(lag * gamma, axis=1) / np.where(denom > 0, denom, 1.0), 0.0)

    h = np.abs(out_t[:, None] - tw)
    weights = 1.0 / (c[:, None] * h + _EPS)
    weights /= np.sum(weights, axis=1, keepdims=True)
    lats = np.sum(weights * law, axis=1)
    lons = np.sum(weights * low, axis=1)

    # exact knot hits reproduce the input sample
    knot = traj.times[hi] == out_t
    lats[knot] = traj.lats[hi[knot]]
    lons[knot] = traj.lons[hi[knot]]
    return Trajectory(lats, lons, out_t)


def resample(traj, spec=None, kernel_width=5, max_gap_s=3600.0):
    """Full preprocessing chain: low-pass, gap split, per-segment interpolation.

    Returns the list of uniform segments (segments shorter than 2 points are
    dropped; they cannot anchor an interpolation grid).
    """
    spec = spec or ResampleSpec()
    smooth = lowpass(traj, kernel_width)
    segments = []
    for seg in split_gaps(smooth, max_gap_s):
        if len(seg) >= 2:
            segments.append(interpolate(seg, spec))
    return segments
