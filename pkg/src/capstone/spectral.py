"""Frequency-domain interpretation: lapped MDCT over fixed windows, coefficient
compaction, and candidate visitation periods from autocorrelation + PSD.

The MDCT uses a sine window at 50% overlap with orthonormal scaling, so the
energy summed over all window coefficients equals the signal energy and
inverse + overlap-add reconstructs the input exactly (up to float error).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks


@dataclass
class SpectralDecomposition:
    window_length: int            # samples per analysis window (even)
    hop: int                      # window_length // 2 for the lapped transform
    coefficients: np.ndarray      # (n_windows, window_length // 2)
    n_samples: int                # original signal length
    interval_s: float = 1.0
    level: int | None = None
    window_energy: np.ndarray = field(default=None)  # per-window energy at analysis time

    @property
    def n_windows(self):
        return self.coefficients.shape[0]


@dataclass
class Periodicity:
    period_h: float
    energy: float                  # fraction of signal (non-DC) spectral energy
    harmonic_of: float | None = None

    def __post_init__(self):
        if self.period_h <= 0:
            raise ValueError("period must be positive")
        if not 0.0 <= self.energy <= 1.0:
            raise ValueError("energy fraction out of [0, 1]")


def _basis(window_length):
    n = np.arange(window_length)
    m = window_length // 2
    k = np.arange(m)
    window = np.sin(math.pi * (n + 0.5) / window_length)
    phase = (math.pi / m) * np.outer(n + 0.5 + m / 2.0, k + 0.5)
    return window, math.sqrt(2.0 / m) * np.cos(phase)


def mdct(values, window_length, interval_s=1.0, level=None):
    """Lapped MDCT with sine window and 50% overlap.

    The signal is zero-padded by half a window on both ends (plus tail
    rounding) so that inverse + overlap-add is exact everywhere.
    """
    x = np.asarray(values, dtype=float)
    if window_length % 2 or window_length < 4:
        raise ValueError("window length must be even and >= 4")
    if len(x) < 2 * window_length:
        raise ValueError(f"signal too short for window {window_length}")
    hop = window_length // 2
    n_frames = int(math.ceil(len(x) / hop)) + 1
    padded = np.zeros((n_frames + 1) * hop)
    padded[hop:hop + len(x)] = x
    idx = np.arange(window_length)[None, :] + hop * np.arange(n_frames)[None, :].T
    frames = padded[idx]
    window, basis = _basis(window_length)
    coeffs = (frames * window) @ basis
    return SpectralDecomposition(window_length, hop, coeffs, len(x), interval_s, level,
                                 window_energy=np.sum(coeffs ** 2, axis=1))


def imdct(dec, keep_padding=False):
    """Overlap-add inverse of mdct; returns a signal of the original length.

    `keep_padding` returns the full padded synthesis instead, on which the
    transform is exactly energy preserving (truncation error included).
    """
    window, basis = _basis(dec.window_length)
    frames = (dec.coefficients @ basis.T) * window
    hop = dec.hop
    out = np.zeros((dec.n_windows + 1) * hop)
    for f in range(dec.n_windows):
        out[f * hop:f * hop + dec.window_length] += frames[f]
    if keep_padding:
        return out
    return out[hop:hop + dec.n_samples]


def compact(dec, energy_fraction):
    """Keep, per window, the smallest coefficient set holding the requested
    fraction of that window's analysis-time energy; zero the rest.

    Targets are measured against the energy recorded when the decomposition
    was built, which makes compaction idempotent. Returns (decomposition,
    kept counts per window).
    """
    if not 0.0 < energy_fraction <= 1.0:
        raise ValueError("energy fraction must be in (0, 1]")
    coeffs = dec.coefficients.copy()
    kept_counts = np.zeros(dec.n_windows, dtype=int)
    for wi in range(dec.n_windows):
        row = coeffs[wi]
        target = energy_fraction * dec.window_energy[wi]
        if target <= 0:
            row[:] = 0.0
            continue
        order = np.argsort(row ** 2)[::-1]
        cum = np.cumsum(row[order] ** 2)
        keep = int(np.searchsorted(cum, target * (1 - 1e-12)) + 1)
        keep = min(keep, len(row))
        row[order[keep:]] = 0.0
        kept_counts[wi] = keep
    out = SpectralDecomposition(dec.window_length, dec.hop, coeffs, dec.n_samples,
                                dec.interval_s, dec.level,
                                window_energy=dec.window_energy.copy())
    return out, kept_counts


def circular_autocorrelation(values):
    """FFT-based circular autocorrelation, normalized to lag 0."""
    x = np.asarray(values, dtype=float)
    x = x - x.mean()
    spec = np.abs(np.fft.rfft(x)) ** 2
    r = np.fft.irfft(spec, n=len(x))
    if r[0] <= 0:
        return np.zeros(len(x))
    return r / r[0]


def candidate_periods(values, interval_s, min_days=2.0, prominence=0.1):
    """Candidate visitation periods: autocorrelation peaks cross-checked
    against the power spectral density, harmonics linked to their parent.

    Both statistics are circular, so the result is invariant under circular
    time shifts. Returns Periodicity entries sorted by energy.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n * interval_s < min_days * 86400.0:
        raise ValueError(f"need at least {min_days} days of signal")
    r = circular_autocorrelation(x)
    half = n // 2
    ac_peaks, _ = find_peaks(r[:half], prominence=prominence)
    ac_peaks = [p for p in ac_peaks if p > 0]

    spec = np.abs(np.fft.rfft(x - x.mean())) ** 2
    spec[0] = 0.0
    total = spec.sum()
    if total <= 0:
        return []
    # a gentle gate for corroborating/harmonic maxima; the 0.1 prominence rule
    # applies to the autocorrelation candidates themselves
    psd_peaks, _ = find_peaks(spec, prominence=0.002 * spec.max())
    psd_bins = set(int(b) for b in psd_peaks)

    def bin_energy(b):
        lo, hi = max(b - 1, 0), min(b + 2, len(spec))
        return float(spec[lo:hi].sum() / total)

    candidates = {}
    for lag in ac_peaks:
        b = int(round(n / lag))
        if not any(abs(b - pb) <= 1 for pb in psd_bins):
            continue  # not corroborated by the PSD
        period_h = lag * interval_s / 3600.0
        candidates[round(period_h, 9)] = Periodicity(period_h, bin_energy(b))

    # PSD-only maxima enter only as integer-divisor harmonics of a validated
    # candidate; anything else is treated as noise
    total_h = n * interval_s / 3600.0
    primaries = list(candidates.values())
    for b in sorted(psd_bins):
        period_h = (n / b) * interval_s / 3600.0
        key = round(period_h, 9)
        if key in candidates or bin_energy(b) < 0.005:
            continue
        for parent in primaries:
            if _is_harmonic(period_h, parent.period_h, total_h):
                candidates[key] = Periodicity(period_h, bin_energy(b), parent.period_h)
                break

    ordered = sorted(candidates.values(), key=lambda c: -c.energy)
    for cand in ordered:
        if cand.harmonic_of is not None:
            continue
        for parent in ordered:
            if parent.energy <= cand.energy or parent.period_h <= cand.period_h:
                continue
            if _is_harmonic(cand.period_h, parent.period_h, total_h):
                cand.harmonic_of = parent.period_h
                break
    return ordered


def _is_harmonic(period_h, parent_h, total_h):
    """True when `period_h` divides the parent within one PSD bin at its own
    frequency."""
    ratio = parent_h / period_h
    k = round(ratio)
    if k < 2:
        return False
    tol = period_h * period_h / (total_h + period_h)  # one-bin slack in period
    return abs(parent_h / k - period_h) <= tol


def dominant_period(values, interval_s):
    """Highest-energy non-harmonic candidate period, in hours."""
    cands = [c for c in candidate_periods(values, interval_s) if c.harmonic_of is None]
    if not cands:
        raise ValueError("no dominant period found")
    return cands[0].period_h


def dump_decomposition_csv(dec, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("window_start,coef_index,value\n")
        for wi in range(dec.n_windows):
            start = wi * dec.hop * dec.interval_s
            for ci, v in enumerate(dec.coefficients[wi]):
                if v != 0.0:
                    fh.write(f"{start:.3f},{ci},{v:.12g}\n")


def dump_periods_csv(periods, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("period_h,energy,harmonic_of\n")
        for p in periods:
            parent = "" if p.harmonic_of is None else f"{p.harmonic_of:.12g}"
            fh.write(f"{p.period_h:.12g},{p.energy:.12g},{parent}\n")
