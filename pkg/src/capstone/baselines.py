"""Comparison clustering algorithms: DJ Cluster, DT Cluster, ZOI Detect and a
reference k-means, with the published default thresholds.

These are the conventional parameterized techniques the signal pipeline is
benchmarked against; they consume raw trajectories, not cell ids.
"""

import math
from dataclasses import dataclass

import numpy as np

from capstone.config import ClusterParams

EARTH_RADIUS_M = 6371008.8


@dataclass
class ClusterRoi:
    lat: float
    lon: float
    radius_m: float
    member_count: int
    first_seen: float
    last_seen: float
    episodes: int = 1

    def __post_init__(self):
        if self.radius_m < 0:
            raise ValueError("radius must be non-negative")


def haversine_m(lat1, lon1, lat2, lon2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlam = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(a))


def point_speeds_kmh(traj):
    """Symmetric finite-difference ground speed per point."""
    n = len(traj)
    if n < 2:
        return np.zeros(n)
    v = np.zeros(n)
    d = haversine_m(traj.lats[:-2], traj.lons[:-2], traj.lats[2:], traj.lons[2:])
    dt = traj.times[2:] - traj.times[:-2]
    v[1:-1] = d / dt
    v[0] = haversine_m(traj.lats[0], traj.lons[0], traj.lats[1], traj.lons[1]) / (
        traj.times[1] - traj.times[0])
    v[-1] = haversine_m(traj.lats[-2], traj.lons[-2], traj.lats[-1], traj.lons[-1]) / (
        traj.times[-1] - traj.times[-2])
    return v * 3.6


class _GridIndex:
    """Spatial hash over an equirectangular local projection."""

    def __init__(self, lats, lons, cell_m):
        self.lat0 = float(np.mean(lats))
        self.kx = 111320.0 * math.cos(math.radians(self.lat0))
        self.ky = 111320.0
        self.cell = cell_m
        self.x = lons * self.kx
        self.y = lats * self.ky
        self.buckets = {}
        gx = np.floor(self.x / cell_m).astype(np.int64)
        gy = np.floor(self.y / cell_m).astype(np.int64)
        for i, key in enumerate(zip(gx.tolist(), gy.tolist())):
            self.buckets.setdefault(key, []).append(i)

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _cluster_from_members(traj, members):
    lats = traj.lats[members]
    lons = traj.lons[members]
    clat, clon = float(np.mean(lats)), float(np.mean(lons))
    radius = float(np.max(haversine_m(lats, lons, clat, clon))) if len(members) else 0.0
    times = traj.times[members]
    return ClusterRoi(clat, clon, radius, len(members), float(times.min()), float(times.max()))


def dj_cluster(traj, params=None):
    """Density-joinable clustering over sub-speed samples.

    Neighborhoods of at least `min_points` within `cluster_radius_m` seed
    clusters; clusters sharing any point merge transitively. Distances run
    blockwise per grid bucket; once a core point has merged a fully-covered
    block, later cores covering the same block only need one union.
    """
    params = params or ClusterParams()
    for name in ("cluster_radius_m", "min_points", "min_speed_kmh"):
        if not getattr(params, name):
            raise ValueError(f"dj_cluster requires {name}")
    labels = np.full(len(traj), -1, dtype=np.int64)
    if len(traj) < 2:
        return [], labels
    slow = point_speeds_kmh(traj) <= params.min_speed_kmh
    idx = np.flatnonzero(slow)
    if idx.size == 0:
        return [], labels
    grid = _GridIndex(traj.lats[idx], traj.lons[idx], params.cluster_radius_m)
    uf = _UnionFind(idx.size)
    is_core = np.zeros(idx.size, dtype=bool)
    radius = params.cluster_radius_m
    full_cover_anchor = {}
    for key, members in grid.buckets.items():
        gx, gy = key
        cand = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cand.extend(grid.buckets.get((gx + dx, gy + dy), ()))
        cand = np.asarray(cand)
        mem = np.asarray(members)
        for lo in range(0, mem.size, 256):
            chunk = mem[lo:lo + 256]
            d = np.hypot(grid.x[chunk, None] - grid.x[cand][None, :],
                         grid.y[chunk, None] - grid.y[cand][None, :])
            within = d <= radius
            counts = within.sum(axis=1)
            for row, i in enumerate(chunk):
                if counts[row] < params.min_points:
                    continue
                is_core[i] = True
                if counts[row] == cand.size and key in full_cover_anchor:
                    uf.union(int(i), full_cover_anchor[key])
                    continue
                for j in cand[within[row]]:
                    uf.union(int(i), int(j))
                if counts[row] == cand.size:
                    full_cover_anchor[key] = int(i)
    comps = {}
    for i in range(idx.size):
        comps.setdefault(uf.find(i), []).append(i)
    clusters = []
    for root in sorted(comps):
        members = comps[root]
        if not np.any(is_core[members]):
            continue
        global_members = idx[members]
        roi = _cluster_from_members(traj, global_members)
        labels[global_members] = len(clusters)
        clusters.append(roi)
    return clusters, labels


def dt_cluster(traj, params=None):
    """Density-time scan: a run of points staying within `max_dist_m` of the
    run's (running) centroid for at least `min_time_s` becomes a cluster."""
    params = params or ClusterParams()
    if not params.max_dist_m or not params.min_time_s:
        raise ValueError("dt_cluster requires max_dist_m and min_time_s")
    labels = np.full(len(traj), -1, dtype=np.int64)
    clusters = []
    run = []
    clat = clon = 0.0

    def flush():
        nonlocal run
        if run and traj.times[run[-1]] - traj.times[run[0]] >= params.min_time_s:
            members = np.asarray(run)
            labels[members] = len(clusters)
            clusters.append(_cluster_from_members(traj, members))
        run = []

    for i in range(len(traj)):
        if not run:
            run = [i]
            clat, clon = traj.lats[i], traj.lons[i]
            continue
        if haversine_m(traj.lats[i], traj.lons[i], clat, clon) <= params.max_dist_m:
            run.append(i)
            k = len(run)
            clat += (traj.lats[i] - clat) / k
            clon += (traj.lons[i] - clon) / k
        else:
            flush()
            run = [i]
            clat, clon = traj.lats[i], traj.lons[i]
    flush()
    return clusters, labels


def zoi_detect(traj, params=None):
    """DT clusters merged on circle intersection, then filtered by the
    `min_visit` count of distinct dwell episodes."""
    params = params or ClusterParams()
    if not params.min_visit:
        raise ValueError("zoi_detect requires min_visit")
    base, labels = dt_cluster(traj, params)
    if not base:
        return [], labels
    uf = _UnionFind(len(base))
    changed = True
    merged = list(base)
    while changed:  # iterate circle merging to a fixed point
        changed = False
        roots = sorted({uf.find(i) for i in range(len(base))})
        for ai in range(len(roots)):
            for bi in range(ai + 1, len(roots)):
                a, b = merged[roots[ai]], merged[roots[bi]]
                if a is None or b is None:
                    continue
                d = float(haversine_m(a.lat, a.lon, b.lat, b.lon))
                if d <= a.radius_m + b.radius_m:
                    uf.union(roots[ai], roots[bi])
                    keep = uf.find(roots[ai])
                    drop = roots[bi] if keep == roots[ai] else roots[ai]
                    merged[keep] = _merge_circles(merged[keep], merged[drop])
                    merged[drop] = None
                    changed = True
    out = []
    remap = {}
    for i, roi in enumerate(merged):
        if roi is None or uf.find(i) != i:
            continue
        if roi.episodes >= params.min_visit:
            remap[i] = len(out)
            out.append(roi)
    final_labels = np.full(len(traj), -1, dtype=np.int64)
    for i in range(len(traj)):
        if labels[i] >= 0:
            root = uf.find(int(labels[i]))
            final_labels[i] = remap.get(root, -1)
    return out, final_labels


def _merge_circles(a, b):
    total = a.member_count + b.member_count
    lat = (a.lat * a.member_count + b.lat * b.member_count) / total
    lon = (a.lon * a.member_count + b.lon * b.member_count) / total
    radius = max(
        float(haversine_m(lat, lon, a.lat, a.lon)) + a.radius_m,
        float(haversine_m(lat, lon, b.lat, b.lon)) + b.radius_m,
    )
    return ClusterRoi(lat, lon, radius, total,
                      min(a.first_seen, b.first_seen), max(a.last_seen, b.last_seen),
                      episodes=a.episodes + b.episodes)


def kmeans(points, k, seed=0, max_iter=100):
    """Plain Lloyd iterations on (n, 2) coordinates; deterministic per seed."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds {n} points")
    rng = np.random.default_rng(seed)
    centers = pts[rng.choice(n, size=k, replace=False)]
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(d2, axis=1)
        for c in range(k):
            mask = new_labels == c
            if not np.any(mask):  # reseed an empty cluster deterministically
                far = int(np.argmax(np.min(d2, axis=1)))
                new_labels[far] = c
                mask = new_labels == c
            centers[c] = pts[mask].mean(axis=0)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centers, labels


_SWEEPABLE = {
    "dj": (dj_cluster, {"cluster_radius_m", "min_points", "min_speed_kmh"}),
    "dt": (dt_cluster, {"max_dist_m", "min_time_s"}),
    "zoi": (zoi_detect, {"max_dist_m", "min_time_s", "min_visit"}),
}


def knee_sweep(traj, algorithm, param_name, values, params=None):
    """One clustering run per parameter value; returns [(value, count)]."""
    if algorithm not in _SWEEPABLE:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    func, allowed = _SWEEPABLE[algorithm]
    if param_name not in allowed:
        raise ValueError(f"{algorithm} does not take parameter {param_name!r}")
    base = params or ClusterParams()
    curve = []
    for value in values:
        p = ClusterParams(base.max_dist_m, base.min_time_s, base.max_time_s,
                          base.min_points, base.min_visit, base.min_speed_kmh,
                          base.cluster_radius_m, dict(base.extras))
        setattr(p, param_name, type(getattr(p, param_name))(value))
        clusters, _ = func(traj, p)
        curve.append((value, len(clusters)))
    return curve


def write_clusters_csv(clusters, algo, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("algo,lat,lon,radius_m,members,first_seen,last_seen\n")
        for c in clusters:
            fh.write(f"{algo},{c.lat:.7f},{c.lon:.7f},{c.radius_m:.2f},"
                     f"{c.member_count},{c.first_seen:.3f},{c.last_seen:.3f}\n")
