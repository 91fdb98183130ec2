"""Synthetic trajectory generator with planted ground truth.

Profiles describe a home base plus scheduled visits to planted regions; the
generator emits a noisy sampled trajectory together with the exact cells,
visit windows and route cell sequences it planted, so pipelines can be scored
against a known answer.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from capstone import geocell
from capstone.ingest import GroundTruthRoi, Trajectory

_M_PER_DEG_LAT = 111320.0


@dataclass
class PlantedVisit:
    day: int                 # day index from trace start
    hour: float              # entry time of day, hours
    dwell_h: float
    every_days: int = 0      # 0 = single visit; k = repeat every k days
    route: int = -1          # -1 = draw a route from route_probs
    weekdays: tuple | None = None  # restrict to these day-of-week indices (day % 7)


@dataclass
class PlantedRoi:
    name: str
    east_m: float
    north_m: float
    schedule: list
    extent_m: float = 14.0       # dwell wander box side
    speed_mps: float = 9.0
    route_probs: tuple = (1.0,)  # probabilities over route variants
    detour_m: float = 200.0      # lateral offset of alternate routes


@dataclass
class SynthProfile:
    rois: list
    days: int = 14
    interval_s: float = 5.0
    noise_m: float = 5.0
    time_jitter_s: float = 0.0
    home: tuple = (46.5205, 6.5697)
    home_extent_m: float = 8.0
    level: int | None = None


@dataclass
class SynthTruth:
    level: int
    rois: list = field(default_factory=list)            # GroundTruthRoi, home included
    routes: dict = field(default_factory=dict)          # (roi, variant) -> cell id list
    visit_log: list = field(default_factory=list)       # (roi, entry, exit, variant)
    home_cell: int = 0


class InfeasibleSchedule(ValueError):
    """Planted visits (including travel time) overlap."""


def _bounded_walk(rng, n, half_width, step=0.4):
    """Random walk reflected into [-half_width, half_width]."""
    if n <= 0:
        return np.empty(0)
    walk = np.cumsum(rng.normal(0.0, step, n))
    if half_width <= 0:
        return np.zeros(n)
    period = 4.0 * half_width
    folded = np.mod(walk + half_width, period)
    return np.where(folded < 2 * half_width, folded - half_width, 3 * half_width - folded)


def _route_waypoints(roi, variant):
    """Waypoints (east, north) home -> roi for one route variant."""
    if variant == 0:
        return [(0.0, 0.0), (roi.east_m, roi.north_m)]
    # alternates bow out laterally, alternating side per variant
    side = 1.0 if variant % 2 else -1.0
    lateral = side * roi.detour_m * ((variant + 1) // 2)
    dist = math.hypot(roi.east_m, roi.north_m) or 1.0
    perp = (-roi.north_m / dist, roi.east_m / dist)
    mid = (roi.east_m / 2 + perp[0] * lateral, roi.north_m / 2 + perp[1] * lateral)
    return [(0.0, 0.0), mid, (roi.east_m, roi.north_m)]


def _route_length(waypoints):
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(waypoints, waypoints[1:]))


def _sample_polyline(waypoints, fractions):
    """Positions along a polyline at the given length fractions (vectorized)."""
    pts = np.asarray(waypoints, dtype=float)
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1] if cum[-1] > 0 else 1.0
    target = np.clip(fractions, 0.0, 1.0) * total
    idx = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(seg) - 1)
    local = (target - cum[idx]) / np.where(seg_len[idx] > 0, seg_len[idx], 1.0)
    return pts[idx] + seg[idx] * local[:, None]


def _expand_schedule(profile, rng):
    """Resolve the per-day schedule into absolute (roi_idx, entry, exit, variant) tuples."""
    events = []
    for ri, roi in enumerate(profile.rois):
        for pv in roi.schedule:
            days = [pv.day]
            if pv.every_days > 0:
                days = list(range(pv.day, profile.days, pv.every_days))
            if pv.weekdays is not None:
                days = [d for d in days if d % 7 in pv.weekdays]
            for day in days:
                entry = day * 86400.0 + pv.hour * 3600.0
                exit_ = entry + pv.dwell_h * 3600.0
                if exit_ > profile.days * 86400.0:
                    continue
                variant = pv.route
                if variant < 0:
                    variant = int(rng.choice(len(roi.route_probs), p=roi.route_probs))
                events.append((ri, entry, exit_, variant))
    events.sort(key=lambda e: e[1])
    return events


def synth_generate(profile, seed=0):
    """Build (Trajectory, SynthTruth); deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    level = profile.level if profile.level is not None else geocell.DEFAULT_LEVEL
    home_lat, home_lon = profile.home

    events = _expand_schedule(profile, rng)
    legs = []  # (depart, entry, exit, back_home, roi_idx, variant, waypoints, length)
    for ri, entry, exit_, variant in events:
        roi = profile.rois[ri]
        wps = _route_waypoints(roi, variant)
        length = _route_length(wps)
        travel_s = length / roi.speed_mps
        legs.append((entry - travel_s, entry, exit_, exit_ + travel_s, ri, variant, wps, length))
    if legs and legs[0][0] < 0:
        raise InfeasibleSchedule("first departure before trace start")
    for (a, b) in zip(legs, legs[1:]):
        if b[0] < a[3]:
            raise InfeasibleSchedule(
                f"visit to {profile.rois[b[4]].name} departs before return from "
                f"{profile.rois[a[4]].name}"
            )

    n = int(profile.days * 86400.0 / profile.interval_s)
    times = profile.interval_s * np.arange(n)
    if profile.time_jitter_s > 0:
        jitter = rng.uniform(-profile.time_jitter_s, profile.time_jitter_s, n)
        times = np.sort(times + np.clip(jitter, -profile.interval_s / 2 + 0.01,
                                        profile.interval_s / 2 - 0.01))

    east = _bounded_walk(rng, n, profile.home_extent_m / 2)
    north = _bounded_walk(rng, n, profile.home_extent_m / 2)
    lat_scale = 1.0 / _M_PER_DEG_LAT
    lon_scale = 1.0 / (_M_PER_DEG_LAT * math.cos(math.radians(home_lat)))

    truth = SynthTruth(level=level)
    roi_cells = {ri: set() for ri in range(len(profile.rois))}
    roi_windows = {ri: [] for ri in range(len(profile.rois))}

    for depart, entry, exit_, back, ri, variant, wps, length in legs:
        roi = profile.rois[ri]
        out_idx = np.flatnonzero((times >= depart) & (times < entry))
        if out_idx.size:
            frac = (times[out_idx] - depart) / (entry - depart)
            pos = _sample_polyline(wps, frac)
            east[out_idx] = pos[:, 0]
            north[out_idx] = pos[:, 1]
        dwell_idx = np.flatnonzero((times >= entry) & (times < exit_))
        if dwell_idx.size:
            east[dwell_idx] = roi.east_m + _bounded_walk(rng, dwell_idx.size, roi.extent_m / 2)
            north[dwell_idx] = roi.north_m + _bounded_walk(rng, dwell_idx.size, roi.extent_m / 2)
        back_idx = np.flatnonzero((times >= exit_) & (times < back))
        if back_idx.size:
            frac = (times[back_idx] - exit_) / (back - exit_)
            rev = list(reversed(wps))
            pos = _sample_polyline(rev, frac)
            east[back_idx] = pos[:, 0]
            north[back_idx] = pos[:, 1]
        # truth: exact cells occupied by the noise-free dwell samples
        if dwell_idx.size:
            lats = home_lat + north[dwell_idx] * lat_scale
            lons = home_lon + east[dwell_idx] * lon_scale
            raws = geocell.encode_many(lats, lons, level)
            roi_cells[ri].update(int(r) for r in raws)
            roi_windows[ri].append((float(entry), float(exit_)))
        truth.visit_log.append((roi.name, float(entry), float(exit_), variant))

    # noise-free home cells from the samples that stayed home
    home_mask = np.ones(n, dtype=bool)
    for depart, _, _, back, *_ in legs:
        home_mask &= ~((times >= depart) & (times < back))
    clean_lats = home_lat + north * lat_scale
    clean_lons = home_lon + east * lon_scale
    home_raws = geocell.encode_many(clean_lats[home_mask], clean_lons[home_mask], level)
    home_cells = {int(r) for r in home_raws}
    uniq_home, counts_home = np.unique(home_raws, return_counts=True)
    truth.home_cell = int(uniq_home[np.argmax(counts_home)])
    truth.rois.append(GroundTruthRoi(
        "home", level, home_cells, [],
        geocell.average_cell_area_m2(level) * len(home_cells)))

    for ri, roi in enumerate(profile.rois):
        if not roi_cells[ri]:
            continue
        truth.rois.append(GroundTruthRoi(
            roi.name, level, roi_cells[ri], roi_windows[ri],
            geocell.average_cell_area_m2(level) * len(roi_cells[ri])))
        for variant in range(len(roi.route_probs)):
            wps = _route_waypoints(roi, variant)
            frac = np.linspace(0.0, 1.0, max(int(_route_length(wps)), 2))
            pos = _sample_polyline(wps, frac)
            lats = home_lat + pos[:, 1] * lat_scale
            lons = home_lon + pos[:, 0] * lon_scale
            raws = geocell.encode_many(lats, lons, level)
            dedup = [int(raws[0])] + [int(r) for k, r in enumerate(raws[1:], 1) if raws[k] != raws[k - 1]]
            truth.routes[(roi.name, variant)] = dedup

    noisy_lats = clean_lats + rng.normal(0.0, profile.noise_m, n) * lat_scale
    noisy_lons = clean_lons + rng.normal(0.0, profile.noise_m, n) * lon_scale
    traj = Trajectory(np.clip(noisy_lats, -90, 90), np.clip(noisy_lons, -180, 180), times)
    return traj, truth


def commuter_profile(days=14, interval_s=5.0, noise_m=5.0, level=None):
    """Stock home/work weekday commute plus a weekly outing; 24 h rhythm."""
    work = PlantedRoi(
        "work", east_m=2200.0, north_m=900.0, extent_m=18.0, speed_mps=10.0,
        schedule=[PlantedVisit(day=0, hour=9.0, dwell_h=8.0, every_days=1)],
    )
    market = PlantedRoi(
        "market", east_m=-1400.0, north_m=600.0, extent_m=14.0, speed_mps=8.0,
        schedule=[PlantedVisit(day=5, hour=19.5, dwell_h=1.5, every_days=7)],
    )
    return SynthProfile(rois=[work, market], days=days, interval_s=interval_s,
                        noise_m=noise_m, level=level)
