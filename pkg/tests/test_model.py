"""ROI assembly, Dice overlap, representative paths, Markov transitions."""

import itertools
from pathlib import Path

import numpy as np
import pytest

from capstone import model as M
from capstone.peaks import Visit

DATA = Path(__file__).parent / "data"


def visit(cells, entry, exit_, t_in=(), t_out=(), flags=()):
    return Visit(
        roi_cells=list(cells),
        transition_cells_in=list(t_in),
        transition_cells_out=list(t_out),
        entry_time=entry,
        exit_time=exit_,
        apex_time=(entry + exit_) / 2,
        slope_constant=1.0,
        flags=set(flags),
    )


class TestDice:
    def test_identity_on_nonempty(self):
        assert M.dice({1, 2, 3}, {1, 2, 3}) == 1.0

    def test_disjoint_zero(self):
        assert M.dice({1, 2}, {3, 4}) == 0.0

    def test_hand_value_four_sixths(self):
        assert M.dice({"x", "y", "z"}, {"y", "z", "w"}) == pytest.approx(4 / 6)

    def test_both_empty_zero_by_convention(self):
        assert M.dice(set(), set()) == 0.0

    def test_exhaustive_six_element_universe(self):
        universe = list(range(6))
        subsets = list(itertools.chain.from_iterable(
            itertools.combinations(universe, k) for k in range(7)))
        for a in subsets:
            for b in subsets:
                qa, qb = M.dice(a, b), M.dice(b, a)
                assert qa == qb            # symmetric
                assert 0.0 <= qa <= 1.0    # range
                if a and set(a) == set(b):
                    assert qa == 1.0       # identity
                if not (set(a) & set(b)):
                    assert qa == 0.0


class TestAssemble:
    def test_identical_cells_merge(self):
        visits = [visit({1, 2}, 0, 10), visit({1, 2}, 100, 130)]
        rois, assignment = M.assemble(visits)
        assert len(rois) == 1
        assert rois[0].visit_count == 2
        assert assignment == [0, 0]
        assert rois[0].mean_stay_s == pytest.approx(20.0)

    def test_changed_route_same_roi_via_dice(self):
        # repeated visit entering via a different route but sharing one cell
        first = visit({10, 11, 12}, 0, 10, t_in=(1, 2), t_out=(3, 4))
        second = visit({12, 13, 14}, 100, 130, t_in=(7, 8), t_out=(9,))
        rois, assignment = M.assemble([first, second])
        assert len(rois) == 1
        assert assignment == [0, 0]
        assert rois[0].cells == {10, 11, 12, 13, 14}

    def test_disjoint_visits_separate_rois(self):
        rois, assignment = M.assemble([visit({1}, 0, 10), visit({2}, 20, 30)])
        assert len(rois) == 2
        assert assignment == [0, 1]

    def test_nested_visit_attaches_as_sub_visit(self):
        outer = visit({1, 2, 3}, 0, 1000)
        inner = visit({2, 9}, 200, 300, flags={"nested"})
        rois, assignment = M.assemble([outer, inner])
        assert len(rois) == 1
        assert rois[0].sub_visit_count == 1
        assert assignment == [0, None]
        assert 9 in rois[0].cells

    def test_bridging_visit_merges_rois(self):
        a = visit({1, 2}, 0, 10)
        b = visit({5, 6}, 20, 30)
        bridge = visit({2, 5}, 40, 50)
        rois, assignment = M.assemble([a, b, bridge])
        assert len(rois) == 1
        assert rois[0].cells == {1, 2, 5, 6}
        assert assignment == [0, 0, 0]

    def test_disjointness_invariant_random_streams(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            visits = []
            t = 0.0
            for _ in range(int(rng.integers(3, 20))):
                cells = set(rng.integers(0, 60, rng.integers(1, 6)).tolist())
                visits.append(visit(cells, t, t + 10))
                t += 100
            rois, assignment = M.assemble(visits)
            for ra, rb in itertools.combinations(rois, 2):
                assert not (ra.cells & rb.cells)
            assert len(assignment) == len(visits)
            # determinism across reruns
            rois2, assignment2 = M.assemble(visits)
            assert assignment == assignment2
            assert [(r.roi_id, sorted(r.cells)) for r in rois] == \
                   [(r.roi_id, sorted(r.cells)) for r in rois2]


class TestTransitions:
    def test_alternating_sequence(self):
        probs = M.transition_matrix(["A", "B", "A", "B"])
        assert probs["A"]["B"] == 1.0
        assert probs["B"]["A"] == 1.0

    def test_self_transition(self):
        probs = M.transition_matrix(["A", "A"])
        assert probs["A"]["A"] == 1.0

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        seq = rng.integers(0, 5, 200).tolist()
        probs = M.transition_matrix(seq)
        for src, outs in probs.items():
            assert sum(outs.values()) == pytest.approx(1.0, abs=1e-12)

    def test_planted_branching_recovered_within_binomial_bound(self):
        rng = np.random.default_rng(2)
        seq = []
        for _ in range(100):
            seq.append("home")
            seq.append("a" if rng.random() < 0.7 else "b")
        probs = M.transition_matrix(seq)
        assert probs["home"]["a"] == pytest.approx(0.7, abs=0.1)

    def test_needs_two_visits(self):
        with pytest.raises(ValueError):
            M.transition_matrix(["A"])


class TestRepresentativePath:
    def test_single_path_returned_verbatim(self):
        path = [3, 5, 9, 12]
        assert M.representative_path([path]) == path

    def test_majority_beats_outlier(self):
        common = [1, 2, 3, 4, 5]
        outlier = [9, 8, 7, 6, 0]
        got = M.representative_path([common, common, common, outlier])
        assert got == common

    def test_seventy_thirty_route_split(self):
        route_a = list(range(100, 120))
        route_b = list(range(200, 220))
        paths = [route_a] * 7 + [route_b] * 3
        assert M.representative_path(paths) == route_a

    def test_ties_resolve_to_lowest_cell(self):
        got = M.representative_path([[5], [9]])
        assert got == [5]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            M.representative_path([])

    def test_generator_route_split_station_wise(self):
        from capstone.synth import PlantedRoi, PlantedVisit, SynthProfile, synth_generate

        roi = PlantedRoi("gym", east_m=1500.0, north_m=400.0, extent_m=10.0,
                         speed_mps=10.0, route_probs=(0.7, 0.3), detour_m=250.0,
                         schedule=[PlantedVisit(day=0, hour=7.0, dwell_h=1.0,
                                                every_days=1)])
        prof = SynthProfile(rois=[roi], days=10, interval_s=30.0, noise_m=0.0)
        traj, truth = synth_generate(prof, seed=4)
        variants = [v for (_, _, _, v) in truth.visit_log]
        majority = max(set(variants), key=variants.count)
        observed = [truth.routes[("gym", v)] for v in variants]
        rep = M.representative_path(observed)
        want = truth.routes[("gym", majority)]
        # station-wise recovery of the majority route
        overlap = len(set(rep) & set(want)) / len(set(want))
        assert overlap > 0.9


class TestSerialize:
    def roundtrip_model(self):
        ra = M.Roi(roi_id=0, cells={0x478C30FE32B40000}, visit_count=2,
                   mean_stay_s=100.0, first_entry=5.0, last_exit=500.0)
        rb = M.Roi(roi_id=1, cells={0x478C30FE32D40000, 0x478C30FE32DC0000},
                   visit_count=1, mean_stay_s=60.0, first_entry=50.0, last_exit=110.0)
        return M.MobilityModel(21, [ra, rb],
                               [(0, 1, [0x478C30FE32B40000], 0.5),
                                (0, 0, [], 0.5)], 0, 0x478C30FE32B40000)

    def test_roundtrip_identity(self):
        m = self.roundtrip_model()
        text = M.serialize(m)
        again = M.serialize(M.deserialize(text))
        assert text == again

    def test_empty_model_roundtrips(self):
        m = M.MobilityModel(21, [], [], None, None)
        assert M.serialize(M.deserialize(M.serialize(m))) == M.serialize(m)

    def test_golden_document_stable(self):
        from capstone import geocell

        cells_a = {geocell.cell_id(geocell.GeoPoint(46.52, 6.57), 21).raw,
                   geocell.cell_id(geocell.GeoPoint(46.520045, 6.57), 21).raw}
        cells_b = {geocell.cell_id(geocell.GeoPoint(46.53, 6.58), 21).raw}
        ra = M.Roi(roi_id=0, cells=cells_a, visit_count=3, mean_stay_s=7200.0,
                   first_entry=1000.0, last_exit=90000.0)
        rb = M.Roi(roi_id=1, cells=cells_b, visit_count=1, mean_stay_s=1800.0,
                   first_entry=40000.0, last_exit=41800.0)
        path = sorted(cells_a)[:1] + sorted(cells_b)[:1]
        m = M.MobilityModel(21, [ra, rb],
                            [(0, 1, path, 1.0), (1, 0, list(reversed(path)), 1.0)],
                            basecamp_id=0, basecamp_cell=sorted(cells_a)[0])
        assert M.serialize(m) == (DATA / "golden_model.json").read_text()
