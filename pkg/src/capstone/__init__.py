"""Mobility modeling from GPS trajectories treated as space-time signals."""

from capstone.geocell import CellId, GeoPoint

__version__ = "0.1.0"

__all__ = ["CellId", "GeoPoint", "__version__"]
