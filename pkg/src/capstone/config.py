"""Session configuration: dotted `key = value` files plus CLI overrides."""

from dataclasses import dataclass, field

from capstone import geocell
from capstone.peaks import EngineConfig
from capstone.preprocess import ResampleSpec


@dataclass
class ClusterParams:
    """Thresholds for the comparison clustering algorithms.

    The `extras` map carries catalogued parameters consumed by techniques
    outside this artifact (eigenvector counts, scan-statistic p-values and so
    on); they are recorded for completeness but drive nothing here.
    """

    max_dist_m: float = 60.0
    min_time_s: float = 900.0
    max_time_s: float = 0.0
    min_points: int = 10
    min_visit: int = 6
    min_speed_kmh: float = 0.4
    cluster_radius_m: float = 60.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for f in ("max_dist_m", "min_time_s", "min_points", "min_visit",
                  "min_speed_kmh", "cluster_radius_m"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be non-negative")


@dataclass
class SessionConfig:
    cell_level: int = geocell.DEFAULT_LEVEL
    interval_s: float = 5.0
    kernel_width: int = 5
    semivar_window: int = 8
    max_gap_s: float = 3600.0
    smooth_width: int = 5
    baseline_window_s: float = 3600.0
    baseline_k: float = 3.0
    slope_tol: float = 0.25
    min_region: int = 8
    fit_peaks: bool = True
    literal_curvature: bool = False
    spectral_window_h: float = 24.0
    cluster: ClusterParams = field(default_factory=ClusterParams)
    seed: int = 0
    threads: int = 1

    def resample_spec(self):
        return ResampleSpec(self.interval_s, self.semivar_window)

    def engine_config(self):
        return EngineConfig(
            smooth_width=self.smooth_width,
            baseline_window=max(int(round(self.baseline_window_s / self.interval_s)), 8),
            baseline_k=self.baseline_k,
            min_region=self.min_region,
            fit_peaks=self.fit_peaks,
            slope_tol=self.slope_tol,
            literal_curvature=self.literal_curvature,
        )

    def spectral_window_samples(self):
        w = int(round(self.spectral_window_h * 3600.0 / self.interval_s))
        return w + (w % 2)


_KEY_MAP = {
    "cell.level": ("cell_level", int),
    "preprocess.interval_s": ("interval_s", float),
    "preprocess.kernel_width": ("kernel_width", int),
    "preprocess.semivar_window": ("semivar_window", int),
    "preprocess.max_gap_s": ("max_gap_s", float),
    "peaks.smooth_width": ("smooth_width", int),
    "peaks.baseline_window_s": ("baseline_window_s", float),
    "peaks.baseline_k": ("baseline_k", float),
    "peaks.slope_tol": ("slope_tol", float),
    "peaks.min_region": ("min_region", int),
    "peaks.fit": ("fit_peaks", lambda v: v.lower() in ("1", "true", "yes", "on")),
    "peaks.literal_curvature": ("literal_curvature",
                                lambda v: v.lower() in ("1", "true", "yes", "on")),
    "spectral.window_h": ("spectral_window_h", float),
    "seed": ("seed", int),
    "threads": ("threads", int),
}

_CLUSTER_KEYS = {
    "cluster.max_dist_m": ("max_dist_m", float),
    "cluster.min_time_s": ("min_time_s", float),
    "cluster.max_time_s": ("max_time_s", float),
    "cluster.min_points": ("min_points", int),
    "cluster.min_visit": ("min_visit", int),
    "cluster.min_speed_kmh": ("min_speed_kmh", float),
    "cluster.radius_m": ("cluster_radius_m", float),
}


def load_config(path):
    """Parse a line-oriented config: `key = value`, `#` comments, blank lines."""
    cfg = SessionConfig()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in _KEY_MAP:
                attr, conv = _KEY_MAP[key]
                setattr(cfg, attr, conv(value))
            elif key in _CLUSTER_KEYS:
                attr, conv = _CLUSTER_KEYS[key]
                setattr(cfg.cluster, attr, conv(value))
            elif key.startswith("cluster.extra."):
                cfg.cluster.extras[key[len("cluster.extra."):]] = float(value)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return cfg


def dump_config(cfg):
    """The config back in file form (defaults written explicitly)."""
    lines = []
    for filekey, (attr, _) in _KEY_MAP.items():
        lines.append(f"{filekey} = {getattr(cfg, attr)}")
    for filekey, (attr, _) in _CLUSTER_KEYS.items():
        lines.append(f"{filekey} = {getattr(cfg.cluster, attr)}")
    for name, val in sorted(cfg.cluster.extras.items()):
        lines.append(f"cluster.extra.{name} = {val}")
    return "\n".join(lines) + "\n"
