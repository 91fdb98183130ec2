"""Space-time signals: uniform trajectories become 1-D sequences of cell ranks.

The ordinate is the integer Hilbert rank of each sample's cell, keeping all
downstream arithmetic integral. The signal's reference level (the "basecamp")
is the mode cell: the most frequent location.
"""

from dataclasses import dataclass, field

import numpy as np

from capstone import geocell


@dataclass
class SpaceTimeSignal:
    level: int
    start_time: float
    interval_s: float
    values: np.ndarray          # int64 ranks, one per sample
    cells: np.ndarray           # parallel uint64 cell ids
    basecamp_rank: int = 0
    basecamp_cell: int = 0

    def __len__(self):
        return len(self.values)

    @property
    def times(self):
        return self.start_time + self.interval_s * np.arange(len(self.values))


@dataclass
class SignalView:
    """Signed rank offsets from the basecamp; zero wherever the user is home."""

    signal: SpaceTimeSignal
    offsets: np.ndarray = field(init=False)

    def __post_init__(self):
        self.offsets = self.signal.values - self.signal.basecamp_rank


def _mode_with_earliest_tiebreak(values):
    uniq, first_idx, counts = np.unique(values, return_index=True, return_counts=True)
    top = counts == counts.max()
    candidates = first_idx[top]
    return uniq[top][np.argmin(candidates)]


def to_signal(traj, level=None):
    """Encode a uniformly sampled trajectory into a SpaceTimeSignal."""
    level = geocell.DEFAULT_LEVEL if level is None else level
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if len(traj) > 1:
        steps = np.diff(traj.times)
        if np.max(np.abs(steps - steps[0])) > 1e-9:
            raise ValueError("trajectory is not uniformly sampled")
        interval = float(steps[0])
    else:
        interval = 0.0
    cells = geocell.encode_many(traj.lats, traj.lons, level)
    values = geocell.ranks_many(cells)
    sig = SpaceTimeSignal(level, float(traj.times[0]), interval, values, cells)
    mode_rank = int(_mode_with_earliest_tiebreak(values))
    sig.basecamp_rank = mode_rank
    sig.basecamp_cell = int(cells[np.flatnonzero(values == mode_rank)[0]])
    return sig


def basecamp(signal):
    """The mode cell of the signal; ties break toward the earliest first occurrence."""
    if len(signal) == 0:
        raise ValueError("empty signal")
    mode_rank = int(_mode_with_earliest_tiebreak(signal.values))
    return geocell.CellId(int(signal.cells[np.flatnonzero(signal.values == mode_rank)[0]]))


def set_shared_basecamp(segments):
    """Recompute one basecamp across several signal segments (gap-split input)."""
    if not segments:
        return
    values = np.concatenate([s.values for s in segments])
    cells = np.concatenate([s.cells for s in segments])
    mode_rank = int(_mode_with_earliest_tiebreak(values))
    mode_cell = int(cells[np.flatnonzero(values == mode_rank)[0]])
    for s in segments:
        s.basecamp_rank = mode_rank
        s.basecamp_cell = mode_cell


def view_offsets(signal):
    return SignalView(signal)


def metric_distance_view(signal):
    """Great-circle distance (meters) from the basecamp cell center, per sample.

    For plotting only; all signal arithmetic stays on integer ranks.
    """
    cells = np.concatenate([signal.cells, np.array([signal.basecamp_cell], dtype=np.uint64)])
    _, _, lats, lons = geocell.decode_many(cells)
    lat0, lon0 = np.radians(lats[-1]), np.radians(lons[-1])
    lat, lon = np.radians(lats[:-1]), np.radians(lons[:-1])
    a = np.sin((lat - lat0) / 2) ** 2 + np.cos(lat0) * np.cos(lat) * np.sin((lon - lon0) / 2) ** 2
    return 2.0 * geocell.EARTH_RADIUS_M * np.arcsin(np.sqrt(a))


def dump_csv(signal, path):
    """Write `timestamp,cell_hex,rank,offset` rows for plotting and debugging."""
    view = view_offsets(signal)
    times = signal.times
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("timestamp,cell_hex,rank,offset\n")
        for k in range(len(signal)):
            fh.write(
                f"{times[k]:.3f},{int(signal.cells[k]):016x},"
                f"{int(signal.values[k])},{int(view.offsets[k])}\n"
            )
