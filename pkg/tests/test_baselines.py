"""Comparison clustering algorithms and parameter sweeps."""

import numpy as np
import pytest

from capstone import baselines
from capstone.config import ClusterParams
from capstone.ingest import Trajectory
from capstone.synth import commuter_profile, synth_generate


def stationary_traj(n, lat=46.52, lon=6.57, dt=60.0):
    return Trajectory(np.full(n, lat), np.full(n, lon), np.arange(n) * dt)


class TestDjCluster:
    def test_ten_stationary_points_one_cluster(self):
        clusters, labels = baselines.dj_cluster(stationary_traj(10))
        assert len(clusters) == 1
        assert clusters[0].member_count == 10
        assert np.all(labels == 0)

    def test_nine_points_no_cluster(self):
        clusters, labels = baselines.dj_cluster(stationary_traj(9))
        assert clusters == []
        assert np.all(labels == -1)

    def test_fast_movement_excluded(self):
        # 30 m/s leg between two dwells: travel points never cluster
        lats = np.concatenate([np.full(15, 46.52), 46.52 + np.arange(20) * 3e-4,
                               np.full(15, 46.526)])
        lons = np.full(len(lats), 6.57)
        traj = Trajectory(lats, lons, np.arange(len(lats)) * 10.0)
        clusters, labels = baselines.dj_cluster(traj)
        assert len(clusters) == 2
        assert np.all(labels[16:34] == -1)

    def test_members_within_radius_of_centroid(self):
        prof = commuter_profile(days=2, interval_s=60.0)
        traj, _ = synth_generate(prof, seed=9)
        clusters, labels = baselines.dj_cluster(traj)
        for ci, c in enumerate(clusters):
            members = np.flatnonzero(labels == ci)
            d = baselines.haversine_m(traj.lats[members], traj.lons[members], c.lat, c.lon)
            assert np.all(d <= c.radius_m + 1e-6)

    def test_missing_params_rejected(self):
        with pytest.raises(ValueError):
            baselines.dj_cluster(stationary_traj(10), ClusterParams(min_points=0))


class TestDtCluster:
    def test_twenty_minute_dwell_clusters(self):
        clusters, _ = baselines.dt_cluster(stationary_traj(21, dt=60.0))
        assert len(clusters) == 1

    def test_ten_minute_dwell_too_short(self):
        clusters, _ = baselines.dt_cluster(stationary_traj(11, dt=60.0))
        assert clusters == []

    def test_run_splits_outside_max_dist(self):
        lats = np.concatenate([np.full(20, 46.52), np.full(20, 46.53)])  # ~1.1 km apart
        traj = Trajectory(lats, np.full(40, 6.57), np.arange(40) * 60.0)
        clusters, _ = baselines.dt_cluster(traj)
        assert len(clusters) == 2


class TestZoiDetect:
    def dwell_sequence(self, n_dwells, lat=46.52, lon=6.57):
        lats, lons, times = [], [], []
        t = 0.0
        for k in range(n_dwells):
            for i in range(20):
                lats.append(lat)
                lons.append(lon)
                times.append(t)
                t += 60.0
            # hop far away between dwells so runs split
            lats.append(lat + 0.05)
            lons.append(lon)
            times.append(t)
            t += 60.0
        return Trajectory(np.array(lats), np.array(lons), np.array(times))

    def test_six_dwells_pass_min_visit(self):
        clusters, _ = baselines.zoi_detect(self.dwell_sequence(6))
        assert len(clusters) == 1
        assert clusters[0].episodes >= 6

    def test_five_dwells_filtered(self):
        clusters, _ = baselines.zoi_detect(self.dwell_sequence(5))
        assert clusters == []

    def test_fewer_rois_than_dt_on_fixture(self):
        prof = commuter_profile(days=7, interval_s=60.0)
        traj, _ = synth_generate(prof, seed=10)
        dt_rois, _ = baselines.dt_cluster(traj)
        zoi_rois, _ = baselines.zoi_detect(traj)
        assert len(zoi_rois) < len(dt_rois)


class TestKmeans:
    def test_k1_centroid_is_mean(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(0, 1, (40, 2))
        centers, labels = baselines.kmeans(pts, 1, seed=0)
        assert np.allclose(centers[0], pts.mean(axis=0))
        assert np.all(labels == 0)

    def test_k_equals_n_each_point_own_cluster(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        centers, labels = baselines.kmeans(pts, 3, seed=1)
        assert sorted(labels.tolist()) == [0, 1, 2]

    def test_two_blobs_recovered(self):
        rng = np.random.default_rng(4)
        a = rng.normal((0, 0), 0.05, (50, 2))
        b = rng.normal((5, 5), 0.05, (50, 2))
        centers, labels = baselines.kmeans(np.vstack([a, b]), 2, seed=2)
        got = sorted(np.round(centers, 1).tolist())
        assert got[0] == pytest.approx(list(a.mean(axis=0)), abs=0.05)
        assert got[1] == pytest.approx(list(b.mean(axis=0)), abs=0.05)

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(ValueError):
            baselines.kmeans(np.zeros((3, 2)), 4)

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(0, 1, (60, 2))
        c1, l1 = baselines.kmeans(pts, 4, seed=7)
        c2, l2 = baselines.kmeans(pts, 4, seed=7)
        assert np.array_equal(c1, c2)
        assert np.array_equal(l1, l2)


class TestKneeSweep:
    def test_radius_sweep_non_increasing(self):
        prof = commuter_profile(days=3, interval_s=60.0)
        traj, _ = synth_generate(prof, seed=12)
        curve = baselines.knee_sweep(traj, "dj", "cluster_radius_m",
                                     [10, 30, 60, 100, 150, 200])
        counts = [c for _, c in curve]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] >= 1

    def test_min_time_sweep_non_increasing(self):
        prof = commuter_profile(days=3, interval_s=60.0)
        traj, _ = synth_generate(prof, seed=12)
        curve = baselines.knee_sweep(traj, "dt", "min_time_s",
                                     [300, 900, 1800, 3600, 7200])
        counts = [c for _, c in curve]
        assert counts == sorted(counts, reverse=True)

    def test_single_value_single_point(self):
        prof = commuter_profile(days=1, interval_s=120.0)
        traj, _ = synth_generate(prof, seed=13)
        curve = baselines.knee_sweep(traj, "dt", "min_time_s", [900])
        assert len(curve) == 1

    def test_unknown_parameter_rejected(self):
        prof = commuter_profile(days=1, interval_s=120.0)
        traj, _ = synth_generate(prof, seed=13)
        with pytest.raises(ValueError, match="parameter"):
            baselines.knee_sweep(traj, "dt", "banana", [1])
        with pytest.raises(ValueError, match="algorithm"):
            baselines.knee_sweep(traj, "banana", "min_time_s", [1])


def test_algorithms_deterministic_across_reruns():
    prof = commuter_profile(days=2, interval_s=60.0)
    traj, _ = synth_generate(prof, seed=14)
    for fn in (baselines.dj_cluster, baselines.dt_cluster, baselines.zoi_detect):
        c1, l1 = fn(traj)
        c2, l2 = fn(traj)
        assert np.array_equal(l1, l2)
        assert [(c.lat, c.lon, c.member_count) for c in c1] == \
               [(c.lat, c.lon, c.member_count) for c in c2]


def test_cluster_csv_format(tmp_path):
    clusters, _ = baselines.dt_cluster(stationary_traj(25))
    out = tmp_path / "c.csv"
    baselines.write_clusters_csv(clusters, "dt", out)
    lines = out.read_text().splitlines()
    assert lines[0] == "algo,lat,lon,radius_m,members,first_seen,last_seen"
    assert lines[1].startswith("dt,")
