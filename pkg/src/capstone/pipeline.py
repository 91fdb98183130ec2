"""End-to-end chain: trajectory -> uniform signal segments -> visits -> model."""

from dataclasses import dataclass

import numpy as np

from capstone import model as model_mod
from capstone import peaks, preprocess, signals
from capstone.config import SessionConfig


@dataclass
class PipelineResult:
    model: model_mod.MobilityModel
    visits: list
    assignment: list
    segments: list          # SpaceTimeSignal per uniform segment
    engine_results: list


def run_pipeline(traj, cfg=None):
    """Build the mobility model for one trajectory."""
    cfg = cfg or SessionConfig()
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    segments = preprocess.resample(traj, cfg.resample_spec(), cfg.kernel_width,
                                   cfg.max_gap_s)
    if not segments:
        raise ValueError("no usable trajectory segments after preprocessing")
    sigs = [signals.to_signal(seg, cfg.cell_level) for seg in segments]
    signals.set_shared_basecamp(sigs)

    engine_cfg = cfg.engine_config()
    visits = []
    results = []
    seg_of_visit = []
    for si, sig in enumerate(sigs):
        res = peaks.detect_visits(sig, engine_cfg)
        results.append(res)
        for v in res.visits:
            visits.append(v)
            seg_of_visit.append(si)
    order = np.argsort([v.entry_time for v in visits], kind="stable")
    visits = [visits[i] for i in order]
    seg_of_visit = [seg_of_visit[i] for i in order]

    rois, assignment = model_mod.assemble(visits)

    # the basecamp region: cells the baseline tracker classified as reference,
    # away from any excursion margin (ramp samples carry far-away cells)
    base_counts = {}
    for sig, res in zip(sigs, results):
        mask = res.quiet if res.quiet is not None else res.baseline.is_baseline
        for cell in sig.cells[mask]:
            base_counts[int(cell)] = base_counts.get(int(cell), 0) + 1
    basecamp_cell = sigs[0].basecamp_cell
    base_cells_core = _coverage_core(base_counts, 0.95)
    base_cells_core.add(basecamp_cell)

    # fold noise dwells around the reference into one basecamp region
    matched = [r for r in rois if model_mod.dice(r.cells, base_cells_core) > 0]
    if matched:
        holder = matched[0]
        remap = {}
        for extra in matched[1:]:
            holder.cells |= extra.cells
            holder.visit_count += extra.visit_count
            remap[extra.roi_id] = holder.roi_id
            rois.remove(extra)
        holder.cells |= base_cells_core
        assignment = [remap.get(a, a) for a in assignment]
    else:
        holder = model_mod.Roi(
            roi_id=max((r.roi_id for r in rois), default=-1) + 1,
            cells=set(base_cells_core))
        rois.append(holder)

    breaks = _basecamp_breaks(visits, assignment, seg_of_visit, sigs, results)
    mobility = model_mod.build_model(visits, assignment, rois, cfg.cell_level,
                                     basecamp_cell, breaks)
    return PipelineResult(mobility, visits, assignment, sigs, results)


def _coverage_core(counts, fraction):
    """Smallest cell set covering `fraction` of the observed samples."""
    if not counts:
        return set()
    total = sum(counts.values())
    core = set()
    acc = 0
    for cell, cnt in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        core.add(cell)
        acc += cnt
        if acc >= fraction * total:
            break
    return core


def _basecamp_breaks(visits, assignment, seg_of_visit, sigs, results):
    """For each consecutive pair of assigned visits: did the signal return to
    the baseline in between?"""
    order = [i for i, a in enumerate(assignment) if a is not None]
    breaks = []
    for prev_i, next_i in zip(order, order[1:]):
        if seg_of_visit[prev_i] != seg_of_visit[next_i]:
            breaks.append(True)
            continue
        si = seg_of_visit[prev_i]
        times = sigs[si].times
        mask = results[si].baseline.is_baseline
        lo = visits[prev_i].exit_time
        hi = visits[next_i].entry_time
        between = (times > lo) & (times < hi)
        breaks.append(bool(np.any(mask & between)))
    return breaks
