"""Trajectory and ground-truth readers for the canonical CSV, Geolife PLT and ROI formats."""

import datetime as _dt
import warnings
from dataclasses import dataclass, field

import numpy as np

from capstone.geocell import CellId

COORD_DECIMALS = 7  # ~1 cm, beyond GPS accuracy

# Geolife day-number epoch (days since 1899-12-30) offset to the Unix epoch.
_DAYS_1899_TO_UNIX = 25569.0


class TrajectoryError(ValueError):
    """Malformed trajectory input."""


@dataclass
class Trajectory:
    """Temporally ordered positions: parallel arrays of lat, lon (degrees) and unix seconds."""

    lats: np.ndarray
    lons: np.ndarray
    times: np.ndarray
    accuracy: np.ndarray | None = None

    def __post_init__(self):
        self.lats = np.asarray(self.lats, dtype=float)
        self.lons = np.asarray(self.lons, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        if not (len(self.lats) == len(self.lons) == len(self.times)):
            raise TrajectoryError("lat/lon/time arrays differ in length")
        if self.accuracy is not None:
            self.accuracy = np.asarray(self.accuracy, dtype=float)
            if len(self.accuracy) != len(self.times):
                raise TrajectoryError("accuracy array length mismatch")
        if len(self.times) and np.any(np.diff(self.times) <= 0):
            raise TrajectoryError("timestamps must be strictly increasing")
        bad = ~(
            np.isfinite(self.lats) & np.isfinite(self.lons) & np.isfinite(self.times)
            & (np.abs(self.lats) <= 90.0) & (np.abs(self.lons) <= 180.0)
        )
        if np.any(bad):
            row = int(np.flatnonzero(bad)[0])
            raise TrajectoryError(f"invalid coordinate at point {row}")

    def __len__(self):
        return len(self.times)


@dataclass
class GroundTruthRoi:
    """An attested region: its cells at a working level plus visit windows."""

    roi_id: str
    level: int
    cells: set = field(default_factory=set)  # raw uint64 cell ids
    visit_windows: list = field(default_factory=list)  # (entry, exit) unix seconds
    area_estimate_m2: float = 0.0

    def __post_init__(self):
        if not self.cells:
            raise ValueError(f"roi {self.roi_id}: empty cell set")
        windows = sorted(self.visit_windows)
        for (a0, a1), (b0, b1) in zip(windows, windows[1:]):
            if b0 < a1:
                raise ValueError(f"roi {self.roi_id}: overlapping visit windows")
        for entry, exit_ in windows:
            if exit_ < entry:
                raise ValueError(f"roi {self.roi_id}: window exit before entry")


def read_csv(path, column_spec=None, strict=True):
    """Read the canonical `lat,lon,timestamp[,accuracy]` CSV.

    `column_spec` maps those names to 0-based columns for nonstandard files.
    Duplicate timestamps keep the first row; out-of-order rows raise in strict
    mode and are dropped (with a warning) otherwise.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise TrajectoryError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if column_spec is None:
        try:
            column_spec = {name: header.index(name) for name in ("lat", "lon", "timestamp")}
        except ValueError as exc:
            raise TrajectoryError(f"{path}: header missing required column ({exc})") from None
        if "accuracy" in header:
            column_spec["accuracy"] = header.index("accuracy")
    has_acc = "accuracy" in column_spec
    lats, lons, times, accs = [], [], [], []
    dropped_dups = 0
    for rowno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            lat = float(fields[column_spec["lat"]])
            lon = float(fields[column_spec["lon"]])
            ts = float(fields[column_spec["timestamp"]])
            acc = float(fields[column_spec["accuracy"]]) if has_acc else None
        except (ValueError, IndexError):
            raise TrajectoryError(f"{path}: parse failure at row {rowno}") from None
        if not -90.0 <= lat <= 90.0:
            raise TrajectoryError(f"{path}: latitude {lat} out of range at row {rowno}")
        if not -180.0 <= lon <= 180.0:
            raise TrajectoryError(f"{path}: longitude {lon} out of range at row {rowno}")
        if times:
            if ts == times[-1]:
                dropped_dups += 1
                continue
            if ts < times[-1]:
                if strict:
                    raise TrajectoryError(f"{path}: non-monotonic timestamp at row {rowno}")
                dropped_dups += 1
                continue
        lats.append(lat)
        lons.append(lon)
        times.append(ts)
        if has_acc:
            accs.append(acc)
    if not times:
        raise TrajectoryError(f"{path}: no data rows")
    if dropped_dups:
        warnings.warn(f"{path}: dropped {dropped_dups} duplicate/out-of-order rows", stacklevel=2)
    traj = Trajectory(np.array(lats), np.array(lons), np.array(times),
                      np.array(accs) if has_acc else None)
    traj.dropped_rows = dropped_dups
    return traj


def write_csv(traj, path):
    """Write the canonical CSV with fixed 7-decimal coordinate precision."""
    has_acc = traj.accuracy is not None
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("lat,lon,timestamp,accuracy\n" if has_acc else "lat,lon,timestamp\n")
        for k in range(len(traj)):
            row = f"{traj.lats[k]:.7f},{traj.lons[k]:.7f},{traj.times[k]:.3f}"
            if has_acc:
                row += f",{traj.accuracy[k]:.2f}"
            fh.write(row + "\n")


def read_plt(path):
    """Read a Geolife PLT file: 6 header lines then lat,lon,0,alt,day-number,date,time."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if len(lines) < 6:
        raise TrajectoryError(f"{path}: PLT header shorter than 6 lines")
    lats, lons, times = [], [], []
    for rowno, line in enumerate(lines[6:], start=7):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) < 7:
            raise TrajectoryError(f"{path}: short PLT row {rowno}")
        try:
            lat = float(fields[0])
            lon = float(fields[1])
            days = float(fields[4])
        except ValueError:
            raise TrajectoryError(f"{path}: malformed numeric field at row {rowno}") from None
        ts = (days - _DAYS_1899_TO_UNIX) * 86400.0
        lats.append(lat)
        lons.append(lon)
        times.append(round(ts, 3))  # day numbers carry ~ms precision at best
    if not times:
        raise TrajectoryError(f"{path}: no data rows")
    order = np.argsort(times, kind="stable")
    lats = np.array(lats)[order]
    lons = np.array(lons)[order]
    times = np.array(times)[order]
    keep = np.concatenate([[True], np.diff(times) > 0])
    return Trajectory(lats[keep], lons[keep], times[keep])


def plt_datetime_to_unix(date_str, time_str):
    """Unix seconds from the PLT date/time text fields (UTC), for cross-checking."""
    dt = _dt.datetime.strptime(f"{date_str} {time_str}", "%Y-%m-%d %H:%M:%S")
    return dt.replace(tzinfo=_dt.timezone.utc).timestamp()


def _parse_iso(ts):
    return _dt.datetime.fromisoformat(ts).replace(tzinfo=_dt.timezone.utc).timestamp()


def read_ground_truth(path, expected_level=None):
    """Read attested ROIs from the line-oriented ground-truth format.

    Blocks are blank-line separated::

        roi home level=21
        cells: 2a61...f1,2a61...f3
        window: 2024-01-01T08:00:00 2024-01-01T17:00:00
    """
    rois = []
    current = None
    seen_cells = {}

    def flush():
        nonlocal current
        if current is None:
            return
        roi = GroundTruthRoi(**current)
        for cell in roi.cells:
            if cell in seen_cells:
                warnings.warn(
                    f"{path}: rois {seen_cells[cell]} and {roi.roi_id} share cell {cell:016x}",
                    stacklevel=3,
                )
            seen_cells[cell] = roi.roi_id
        rois.append(roi)
        current = None

    with open(path, encoding="utf-8") as fh:
        for lineno, raw_line in enumerate(fh, start=1):
            line = raw_line.strip()
            if not line or line.startswith("#"):
                if not line:
                    flush()
                continue
            if line.startswith("roi "):
                flush()
                parts = line.split()
                if len(parts) != 3 or not parts[2].startswith("level="):
                    raise ValueError(f"{path}:{lineno}: expected 'roi <id> level=<L>'")
                level = int(parts[2].split("=", 1)[1])
                if expected_level is not None and level != expected_level:
                    raise ValueError(
                        f"{path}:{lineno}: roi level {level} != session level {expected_level}"
                    )
                current = {"roi_id": parts[1], "level": level, "cells": set(),
                           "visit_windows": [], "area_estimate_m2": 0.0}
            elif line.startswith("cells:"):
                if current is None:
                    raise ValueError(f"{path}:{lineno}: cells outside a roi block")
                for token in line[len("cells:"):].split(","):
                    token = token.strip()
                    if token:
                        cid = CellId.from_hex(token)  # validates the id
                        if cid.level != current["level"]:
                            raise ValueError(
                                f"{path}:{lineno}: cell {token} not at level {current['level']}"
                            )
                        current["cells"].add(cid.raw)
            elif line.startswith("window:"):
                if current is None:
                    raise ValueError(f"{path}:{lineno}: window outside a roi block")
                parts = line[len("window:"):].split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'window: <entry> <exit>'")
                entry, exit_ = _parse_iso(parts[0]), _parse_iso(parts[1])
                if exit_ < entry:
                    raise ValueError(f"{path}:{lineno}: window exit before entry")
                current["visit_windows"].append((entry, exit_))
            elif line.startswith("area_m2:"):
                if current is None:
                    raise ValueError(f"{path}:{lineno}: area outside a roi block")
                current["area_estimate_m2"] = float(line[len("area_m2:"):])
            else:
                raise ValueError(f"{path}:{lineno}: unrecognized line {line!r}")
    flush()
    return rois


def write_ground_truth(rois, path):
    """Write ROIs in the same line-oriented format read_ground_truth consumes."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for roi in rois:
            fh.write(f"roi {roi.roi_id} level={roi.level}\n")
            hexes = ",".join(format(c, "016x") for c in sorted(roi.cells))
            fh.write(f"cells: {hexes}\n")
            for entry, exit_ in roi.visit_windows:
                e = _dt.datetime.fromtimestamp(entry, _dt.timezone.utc)
                x = _dt.datetime.fromtimestamp(exit_, _dt.timezone.utc)
                fh.write(f"window: {e:%Y-%m-%dT%H:%M:%S} {x:%Y-%m-%dT%H:%M:%S}\n")
            if roi.area_estimate_m2:
                fh.write(f"area_m2: {roi.area_estimate_m2:.1f}\n")
            fh.write("\n")
