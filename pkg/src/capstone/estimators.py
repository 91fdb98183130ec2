"""Scikit-learn style wrappers so the pipeline composes with the usual
fit/transform tooling: estimators expose `get_params`/`set_params`, learn
attributes with trailing underscores, and validate their inputs up front.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from capstone import baselines, evalbench, geocell, peaks, pipeline, preprocess, signals
from capstone.config import ClusterParams, SessionConfig
from capstone.ingest import Trajectory


def check_trajectory(X):
    """Coerce input into a validated Trajectory.

    Accepts a Trajectory or an (n, 3) array-like of [lat, lon, unix seconds]
    rows in time order.
    """
    if isinstance(X, Trajectory):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 3:
        raise ValueError("expected an (n, 3) array of lat, lon, timestamp")
    return Trajectory(arr[:, 0], arr[:, 1], arr[:, 2])


def _require_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet")


class TrajectoryResampler(BaseEstimator, TransformerMixin):
    """Low-pass filter plus uniform semivariance resampling; emits the list of
    gap-free uniform segments."""

    def __init__(self, interval_s=5.0, kernel_width=5, semivar_window=8,
                 max_gap_s=3600.0):
        self.interval_s = interval_s
        self.kernel_width = kernel_width
        self.semivar_window = semivar_window
        self.max_gap_s = max_gap_s

    def fit(self, X, y=None):
        check_trajectory(X)
        return self

    def transform(self, X):
        traj = check_trajectory(X)
        spec = preprocess.ResampleSpec(self.interval_s, self.semivar_window)
        return preprocess.resample(traj, spec, self.kernel_width, self.max_gap_s)


class SignalEncoder(BaseEstimator, TransformerMixin):
    """Uniform trajectory segments -> space-time signals with one shared
    basecamp."""

    def __init__(self, level=None):
        self.level = level

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        segments = X if isinstance(X, (list, tuple)) else [X]
        level = geocell.DEFAULT_LEVEL if self.level is None else self.level
        sigs = [signals.to_signal(seg, level) for seg in segments]
        signals.set_shared_basecamp(sigs)
        return sigs


class VisitDetector(BaseEstimator):
    """Peak-engine front end; `fit` extracts visits from encoded signals."""

    def __init__(self, smooth_width=5, baseline_window=720, baseline_k=3.0,
                 min_region=8, fit_peaks=True, slope_tol=0.25,
                 literal_curvature=False):
        self.smooth_width = smooth_width
        self.baseline_window = baseline_window
        self.baseline_k = baseline_k
        self.min_region = min_region
        self.fit_peaks = fit_peaks
        self.slope_tol = slope_tol
        self.literal_curvature = literal_curvature

    def _config(self):
        return peaks.EngineConfig(
            smooth_width=self.smooth_width,
            baseline_window=self.baseline_window,
            baseline_k=self.baseline_k,
            min_region=self.min_region,
            fit_peaks=self.fit_peaks,
            slope_tol=self.slope_tol,
            literal_curvature=self.literal_curvature,
        )

    def fit(self, X, y=None):
        sigs = X if isinstance(X, (list, tuple)) else [X]
        cfg = self._config()
        self.results_ = [peaks.detect_visits(sig, cfg) for sig in sigs]
        visits = [v for res in self.results_ for v in res.visits]
        visits.sort(key=lambda v: v.entry_time)
        self.visits_ = visits
        return self

    def transform(self, X):
        self.fit(X)
        return self.visits_


class MobilityModelEstimator(BaseEstimator):
    """Full chain estimator: fit on a trajectory, read off the mobility model.

    After `fit`: `model_` (the graph document object), `rois_`, `visits_`,
    `segments_` (encoded signals). `score(X, truth)` returns the overlap
    accuracy TP/(TP+FP+FN) against attested regions.
    """

    def __init__(self, level=None, interval_s=5.0, kernel_width=5,
                 semivar_window=8, max_gap_s=3600.0, smooth_width=5,
                 baseline_window_s=3600.0, baseline_k=3.0, min_region=8,
                 fit_peaks=True, slope_tol=0.25):
        self.level = level
        self.interval_s = interval_s
        self.kernel_width = kernel_width
        self.semivar_window = semivar_window
        self.max_gap_s = max_gap_s
        self.smooth_width = smooth_width
        self.baseline_window_s = baseline_window_s
        self.baseline_k = baseline_k
        self.min_region = min_region
        self.fit_peaks = fit_peaks
        self.slope_tol = slope_tol

    def _session(self):
        return SessionConfig(
            cell_level=geocell.DEFAULT_LEVEL if self.level is None else self.level,
            interval_s=self.interval_s,
            kernel_width=self.kernel_width,
            semivar_window=self.semivar_window,
            max_gap_s=self.max_gap_s,
            smooth_width=self.smooth_width,
            baseline_window_s=self.baseline_window_s,
            baseline_k=self.baseline_k,
            min_region=self.min_region,
            fit_peaks=self.fit_peaks,
            slope_tol=self.slope_tol,
        )

    def fit(self, X, y=None):
        traj = check_trajectory(X)
        result = pipeline.run_pipeline(traj, self._session())
        self.model_ = result.model
        self.visits_ = result.visits
        self.rois_ = result.model.rois
        self.segments_ = result.segments
        self.assignment_ = result.assignment
        return self

    def fit_predict(self, X, y=None):
        """Visit -> roi id assignment for the trajectory's detected visits."""
        self.fit(X)
        return self.assignment_

    def score(self, X, y):
        """Overlap accuracy TP/(TP+FP+FN) of fitted ROIs against truth ROIs."""
        _require_fitted(self, "model_")
        report = evalbench.score(evalbench.model_rois_for_scoring(self.model_), y)
        return report.accuracy


class _BaseClusterer(BaseEstimator, ClusterMixin):
    def fit(self, X, y=None):
        traj = check_trajectory(X)
        clusters, labels = self._run(traj)
        self.clusters_ = clusters
        self.labels_ = labels
        return self


class DJCluster(_BaseClusterer):
    """Density-joinable clustering (speed-gated neighborhoods, merge on
    shared points)."""

    def __init__(self, cluster_radius_m=60.0, min_points=10, min_speed_kmh=0.4):
        self.cluster_radius_m = cluster_radius_m
        self.min_points = min_points
        self.min_speed_kmh = min_speed_kmh

    def _run(self, traj):
        params = ClusterParams(cluster_radius_m=self.cluster_radius_m,
                               min_points=self.min_points,
                               min_speed_kmh=self.min_speed_kmh)
        return baselines.dj_cluster(traj, params)


class DTCluster(_BaseClusterer):
    """Density-time scan clustering."""

    def __init__(self, max_dist_m=60.0, min_time_s=900.0):
        self.max_dist_m = max_dist_m
        self.min_time_s = min_time_s

    def _run(self, traj):
        params = ClusterParams(max_dist_m=self.max_dist_m, min_time_s=self.min_time_s)
        return baselines.dt_cluster(traj, params)


class ZOIDetect(_BaseClusterer):
    """DT clusters merged on intersection and filtered by visit count."""

    def __init__(self, max_dist_m=60.0, min_time_s=900.0, min_visit=6):
        self.max_dist_m = max_dist_m
        self.min_time_s = min_time_s
        self.min_visit = min_visit

    def _run(self, traj):
        params = ClusterParams(max_dist_m=self.max_dist_m, min_time_s=self.min_time_s,
                               min_visit=self.min_visit)
        return baselines.zoi_detect(traj, params)
