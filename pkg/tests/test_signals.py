"""Space-time signal construction and the basecamp reference."""

import math

import numpy as np
import pytest
from scipy import stats

from capstone import geocell, signals
from capstone.ingest import Trajectory
from capstone.synth import PlantedRoi, PlantedVisit, SynthProfile, synth_generate


def traj_at(lats, lons, dt=5.0):
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    return Trajectory(lats, lons, np.arange(len(lats)) * dt)


class TestToSignal:
    def test_stationary_trajectory_constant_signal(self):
        traj = traj_at([46.5] * 10, [6.5] * 10)
        sig = signals.to_signal(traj, 18)
        assert len(set(sig.values.tolist())) == 1
        assert sig.basecamp_rank == sig.values[0]
        assert sig.basecamp_cell == sig.cells[0]

    def test_mode_wins_at_60_percent(self):
        # alternate between two far-apart places, A on 60% of samples
        lats = [46.5 if k % 5 < 3 else 47.1 for k in range(50)]
        sig = signals.to_signal(traj_at(lats, [6.5] * 50), 15)
        rank_a = geocell.rank(geocell.cell_id(geocell.GeoPoint(46.5, 6.5), 15))
        assert sig.basecamp_rank == rank_a

    def test_mode_tie_breaks_to_earliest(self):
        lats = [46.5, 46.5, 47.1, 47.1]
        sig = signals.to_signal(traj_at(lats, [6.5] * 4), 15)
        assert sig.basecamp_rank == sig.values[0]
        assert signals.basecamp(sig).raw == int(sig.cells[0])

    def test_signal_length_matches_trajectory(self):
        traj = traj_at(46.5 + np.linspace(0, 0.01, 37), [6.5] * 37)
        sig = signals.to_signal(traj, 18)
        assert len(sig) == 37

    def test_rejects_nonuniform(self):
        traj = Trajectory(np.array([46.5, 46.5, 46.5]), np.array([6.5] * 3),
                          np.array([0.0, 5.0, 11.0]))
        with pytest.raises(ValueError, match="uniform"):
            signals.to_signal(traj, 18)

    def test_commute_plateaus_match_planted_cells(self):
        roi = PlantedRoi("work", east_m=1500.0, north_m=0.0, extent_m=6.0,
                         schedule=[PlantedVisit(day=0, hour=9.0, dwell_h=4.0)])
        prof = SynthProfile(rois=[roi], days=1, interval_s=60.0, noise_m=0.0,
                            home_extent_m=2.0)
        traj, truth = synth_generate(prof, seed=1)
        sig = signals.to_signal(traj, truth.level)
        work_truth = next(r for r in truth.rois if r.roi_id == "work")
        dwell = (sig.times >= 9 * 3600) & (sig.times < 13 * 3600)
        assert set(int(c) for c in sig.cells[dwell]) <= work_truth.cells
        home_truth = next(r for r in truth.rois if r.roi_id == "home")
        assert sig.basecamp_cell in home_truth.cells


class TestOffsets:
    def test_constant_signal_zero_view(self):
        sig = signals.to_signal(traj_at([46.5] * 8, [6.5] * 8), 18)
        assert np.all(signals.view_offsets(sig).offsets == 0)

    def test_offset_sum_identity(self):
        lats = 46.5 + np.cumsum(np.random.default_rng(0).normal(0, 1e-4, 40))
        sig = signals.to_signal(traj_at(lats, [6.5] * 40), 18)
        off = signals.view_offsets(sig).offsets
        assert off.sum() == sig.values.sum() - len(sig) * sig.basecamp_rank

    def test_two_roi_trace_has_two_nonzero_plateaus(self):
        a = PlantedRoi("a", east_m=1200.0, north_m=300.0, extent_m=4.0,
                       schedule=[PlantedVisit(day=0, hour=8.0, dwell_h=2.0)])
        b = PlantedRoi("b", east_m=-900.0, north_m=-500.0, extent_m=4.0,
                       schedule=[PlantedVisit(day=0, hour=14.0, dwell_h=2.0)])
        prof = SynthProfile(rois=[a, b], days=1, interval_s=60.0, noise_m=0.0,
                            home_extent_m=0.5)
        traj, truth = synth_generate(prof, seed=2)
        sig = signals.to_signal(traj, truth.level)
        off = signals.view_offsets(sig).offsets
        t = sig.times
        plat_a = off[(t >= 8.2 * 3600) & (t < 9.8 * 3600)]
        plat_b = off[(t >= 14.2 * 3600) & (t < 15.8 * 3600)]
        assert np.all(plat_a != 0) and np.all(plat_b != 0)
        # the two dwells sit at clearly distinct offset levels
        assert abs(np.median(plat_a) - np.median(plat_b)) > 10 * (plat_a.std() + plat_b.std() + 1)

    def test_zero_offset_at_every_basecamp_sample(self):
        lats = [46.5, 46.5, 47.1, 46.5]
        sig = signals.to_signal(traj_at(lats, [6.5] * 4), 15)
        off = signals.view_offsets(sig).offsets
        assert np.all(off[sig.values == sig.basecamp_rank] == 0)


class TestLocalityCorrelate:
    def test_offset_tracks_distance_spearman(self):
        # several dwells at increasing distances, all on one cube face
        rois = [
            PlantedRoi(f"r{k}", east_m=400.0 * (k + 1), north_m=120.0 * k, extent_m=4.0,
                       schedule=[PlantedVisit(day=0, hour=6.0 + 3 * k, dwell_h=1.5)])
            for k in range(5)
        ]
        prof = SynthProfile(rois=rois, days=1, interval_s=60.0, noise_m=2.0,
                            home_extent_m=4.0)
        traj, truth = synth_generate(prof, seed=3)
        sig = signals.to_signal(traj, truth.level)
        off = np.abs(signals.view_offsets(sig).offsets)
        # great-circle distance from the basecamp cell center
        _, _, blat, blon = geocell.decode_many(np.array([sig.basecamp_cell], dtype=np.uint64))
        lat0, lon0 = math.radians(blat[0]), math.radians(blon[0])
        lats, lons = np.radians(traj.lats), np.radians(traj.lons)
        d = 2 * 6371008.8 * np.arcsin(np.sqrt(
            np.sin((lats - lat0) / 2) ** 2
            + math.cos(lat0) * np.cos(lats) * np.sin((lons - lon0) / 2) ** 2))
        rho = stats.spearmanr(off, d).statistic
        assert rho >= 0.8


def test_metric_distance_view_for_plotting():
    lats = [46.5200, 46.5200, 46.5600]  # third point ~4.4 km north
    sig = signals.to_signal(traj_at(lats, [6.5] * 3), 18)
    d = signals.metric_distance_view(sig)
    assert d[0] < 50.0  # within the basecamp cell
    assert 4000.0 < d[2] < 5000.0


def test_dump_csv_format(tmp_path):
    sig = signals.to_signal(traj_at([46.5, 46.5001, 46.5], [6.5] * 3), 18)
    out = tmp_path / "sig.csv"
    signals.dump_csv(sig, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "timestamp,cell_hex,rank,offset"
    assert len(lines) == 4
    fields = lines[1].split(",")
    assert len(fields[1]) == 16
