"""Mobility model assembly: ROI identity via Dice overlap, representative
transition paths, and first-order Markov transition probabilities.

ROIs never share a cell: any visit overlapping an existing ROI merges into it
(and transitively merges ROIs it bridges). A peak nested inside an enclosing
visit's time span attaches as a sub-visit rather than splitting off a new
region.
"""

import json
from dataclasses import dataclass, field

from capstone import geocell


def dice(a, b):
    """Dice similarity 2|A∩B| / (|A|+|B|); two empty sets give 0."""
    a, b = set(a), set(b)
    if not a and not b:
        return 0.0
    return 2.0 * len(a & b) / (len(a) + len(b))


@dataclass
class Roi:
    roi_id: int
    cells: set
    visit_count: int = 0
    mean_stay_s: float = 0.0
    sub_visit_count: int = 0
    first_entry: float = 0.0
    last_exit: float = 0.0
    entry_hours: list = field(default_factory=list)
    exit_hours: list = field(default_factory=list)

    def area_m2(self, level):
        return geocell.average_cell_area_m2(level) * len(self.cells)


@dataclass
class MobilityModel:
    level: int
    rois: list
    transitions: list        # (from_id, to_id, path cells, probability)
    basecamp_id: int | None = None
    basecamp_cell: int | None = None


def assemble(visits):
    """Merge time-ordered visits into disjoint ROIs.

    Returns (rois, assignment) where assignment maps each visit index to a
    roi id (or None for nested sub-visits attached to their enclosing ROI).
    """
    rois = []
    assignment = []
    next_id = 0
    redirect = {}  # absorbed roi id -> surviving roi id
    open_span = None  # (entry, exit, roi) of the enclosing in-progress visit

    for vi, visit in enumerate(visits):
        cells = set(visit.roi_cells)
        nested_parent = None
        if "nested" in visit.flags and open_span is not None:
            entry, exit_, parent_roi = open_span
            if entry <= visit.entry_time and visit.exit_time <= exit_:
                nested_parent = parent_roi
        if nested_parent is not None:
            nested_parent.sub_visit_count += 1
            nested_parent.cells |= cells
            assignment.append(None)
            continue

        matched = [r for r in rois if dice(r.cells, cells) > 0]
        if matched:
            target = matched[0]
            for extra in matched[1:]:  # the visit bridges them: one region
                target.cells |= extra.cells
                target.visit_count += extra.visit_count
                target.sub_visit_count += extra.sub_visit_count
                target.entry_hours.extend(extra.entry_hours)
                target.exit_hours.extend(extra.exit_hours)
                target.first_entry = min(target.first_entry, extra.first_entry)
                target.last_exit = max(target.last_exit, extra.last_exit)
                redirect[extra.roi_id] = target.roi_id
                rois.remove(extra)
            target.cells |= cells
        else:
            target = Roi(roi_id=next_id, cells=cells)
            next_id += 1
            rois.append(target)

        stay = visit.exit_time - visit.entry_time
        target.mean_stay_s = (
            (target.mean_stay_s * target.visit_count + stay) / (target.visit_count + 1))
        target.visit_count += 1
        if target.visit_count == 1:
            target.first_entry = visit.entry_time
        target.last_exit = visit.exit_time
        target.entry_hours.append(visit.entry_time % 86400.0 / 3600.0)
        target.exit_hours.append(visit.exit_time % 86400.0 / 3600.0)
        assignment.append(target.roi_id)
        open_span = (visit.entry_time, visit.exit_time, target)

    def resolve(rid):
        while rid in redirect:
            rid = redirect[rid]
        return rid

    assignment = [None if a is None else resolve(a) for a in assignment]
    return rois, assignment


def transition_matrix(assignment):
    """First-order Markov estimates p_ij over consecutive roi ids.

    Skips None entries (nested sub-visits). Rows over observed sources sum
    to one.
    """
    seq = [a for a in assignment if a is not None]
    if len(seq) < 2:
        raise ValueError("need at least 2 assigned visits")
    counts = {}
    for a, b in zip(seq, seq[1:]):
        counts.setdefault(a, {}).setdefault(b, 0)
        counts[a][b] += 1
    probs = {}
    for src, outs in counts.items():
        total = sum(outs.values())
        probs[src] = {dst: c / total for dst, c in outs.items()}
    return probs


def representative_path(paths):
    """Modal cell per fractional-progress station across observed paths.

    The station count is the median observed path length; ties at a station
    resolve to the smallest cell rank (id order at one level). Consecutive
    duplicate stations collapse.
    """
    paths = [list(p) for p in paths if len(p)]
    if not paths:
        raise ValueError("no observed paths")
    lengths = sorted(len(p) for p in paths)
    mid = len(lengths) // 2
    median = lengths[mid] if len(lengths) % 2 else (lengths[mid - 1] + lengths[mid]) / 2
    k = max(int(round(median)), 1)
    if k == 1:
        stations = [0.0]
    else:
        stations = [s / (k - 1) for s in range(k)]
    out = []
    for q in stations:
        votes = {}
        for p in paths:
            cell = p[int(round(q * (len(p) - 1)))]
            votes[cell] = votes.get(cell, 0) + 1
        top = max(votes.values())
        winner = min(c for c, v in votes.items() if v == top)
        if not out or out[-1] != winner:
            out.append(winner)
    return out


def build_model(visits, assignment, rois, level, basecamp_cell=None,
                basecamp_breaks=None):
    """Assemble the full graph: ROIs, representative paths, probabilities.

    `basecamp_breaks[i]` true means the user passed through the basecamp
    between assigned visit i and i+1; the basecamp ROI (holding the basecamp
    cell and any cells not claimed by another ROI) is inserted there, so
    transitions route through it exactly when the signal returned to the
    reference level.
    """
    rois = [Roi(r.roi_id, set(r.cells), r.visit_count, r.mean_stay_s,
                r.sub_visit_count, r.first_entry, r.last_exit,
                list(r.entry_hours), list(r.exit_hours)) for r in rois]
    basecamp_id = None
    if basecamp_cell is not None:
        holder = next((r for r in rois if basecamp_cell in r.cells), None)
        if holder is None:
            holder = Roi(roi_id=max((r.roi_id for r in rois), default=-1) + 1,
                         cells={basecamp_cell})
            rois.append(holder)
        basecamp_id = holder.roi_id

    # roi visit sequence with basecamp dwells interleaved
    seq = []
    obs_paths = {}
    pending = None  # outbound cells of the previous visit
    order = [i for i, a in enumerate(assignment) if a is not None]
    for step, vi in enumerate(order):
        visit, rid = visits[vi], assignment[vi]
        via_base = bool(basecamp_breaks[step - 1]) if (
            basecamp_breaks is not None and step > 0) else False
        if seq:
            prev = seq[-1]
            if via_base and basecamp_id is not None and prev != basecamp_id:
                _note_path(obs_paths, prev, basecamp_id, pending or [])
                seq.append(basecamp_id)
                _note_path(obs_paths, basecamp_id, rid, visit.transition_cells_in)
            else:
                _note_path(obs_paths, prev, rid,
                           (pending or []) + list(visit.transition_cells_in))
        elif basecamp_id is not None and visit.transition_cells_in:
            seq.append(basecamp_id)
            _note_path(obs_paths, basecamp_id, rid, visit.transition_cells_in)
        seq.append(rid)
        pending = list(visit.transition_cells_out)
    if pending and basecamp_id is not None and seq and seq[-1] != basecamp_id:
        _note_path(obs_paths, seq[-1], basecamp_id, pending)
        seq.append(basecamp_id)

    transitions = []
    if len(seq) >= 2:
        probs = transition_matrix(seq)
        for src in sorted(probs):
            for dst in sorted(probs[src]):
                observed = obs_paths.get((src, dst), [])
                observed = [p for p in observed if p]
                path = representative_path(observed) if observed else []
                transitions.append((src, dst, path, probs[src][dst]))

    rois.sort(key=lambda r: r.roi_id)
    return MobilityModel(level, rois, transitions, basecamp_id, basecamp_cell)


def _note_path(obs_paths, src, dst, cells):
    obs_paths.setdefault((src, dst), []).append(list(cells))


# --- serialization -----------------------------------------------------------

def _round12(x):
    return float(f"{x:.12g}")


def serialize(model):
    """Stable JSON document; numbers at 12 significant digits."""
    doc = {
        "level": model.level,
        "basecamp": None if model.basecamp_cell is None else format(model.basecamp_cell, "016x"),
        "basecamp_roi": model.basecamp_id,
        "rois": [
            {
                "id": r.roi_id,
                "cells": [format(c, "016x") for c in sorted(r.cells)],
                "visit_count": r.visit_count,
                "sub_visit_count": r.sub_visit_count,
                "mean_stay_s": _round12(r.mean_stay_s),
                "area_m2": _round12(r.area_m2(model.level)),
                "first_entry": _round12(r.first_entry),
                "last_exit": _round12(r.last_exit),
            }
            for r in model.rois
        ],
        "transitions": [
            {
                "from": src,
                "to": dst,
                "path": [format(c, "016x") for c in path],
                "p": _round12(p),
            }
            for src, dst, path, p in model.transitions
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def deserialize(text):
    doc = json.loads(text)
    rois = []
    for rd in doc["rois"]:
        roi = Roi(
            roi_id=rd["id"],
            cells={int(h, 16) for h in rd["cells"]},
            visit_count=rd["visit_count"],
            sub_visit_count=rd["sub_visit_count"],
            mean_stay_s=rd["mean_stay_s"],
            first_entry=rd["first_entry"],
            last_exit=rd["last_exit"],
        )
        rois.append(roi)
    transitions = [
        (t["from"], t["to"], [int(h, 16) for h in t["path"]], t["p"])
        for t in doc["transitions"]
    ]
    basecamp_cell = None if doc["basecamp"] is None else int(doc["basecamp"], 16)
    return MobilityModel(doc["level"], rois, transitions, doc["basecamp_roi"], basecamp_cell)
