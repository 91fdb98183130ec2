"""Hierarchical spherical cell grid: cube-face projection + Hilbert-curve cell ids.

The sphere is wrapped in a cube; each face carries a quadtree enumerated on a
Hilbert curve. A cell id packs into 64 bits: 3 high bits for the face, then
2 bits per level of Hilbert position, then a single marker bit whose position
encodes the level (lowest set bit). Integer order of ids equals Hilbert order.
"""

import math
from dataclasses import dataclass

import numpy as np

MAX_LEVEL = 30
NUM_FACES = 6
POS_BITS = 2 * MAX_LEVEL + 1  # 61 payload bits below the face bits

EARTH_RADIUS_M = 6371008.8
EARTH_AREA_M2 = 4.0 * math.pi * EARTH_RADIUS_M ** 2

# 4-state Hilbert automaton (states are swap/invert flags).
_SWAP = 1
_INVERT = 2
_POS_TO_IJ = np.array(
    [[0, 1, 3, 2],
     [0, 2, 3, 1],
     [3, 2, 0, 1],
     [3, 1, 0, 2]], dtype=np.uint64)
_IJ_TO_POS = np.zeros((4, 4), dtype=np.uint64)
for _o in range(4):
    for _p in range(4):
        _IJ_TO_POS[_o, _POS_TO_IJ[_o, _p]] = _p
_POS_TO_ORIENT = np.array([_SWAP, 0, 0, _INVERT | _SWAP], dtype=np.uint64)


@dataclass(frozen=True)
class GeoPoint:
    """A WGS-style coordinate pair in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of [-180, 180]")


@dataclass(frozen=True)
class CellId:
    """64-bit cell identifier; validated on construction."""

    raw: int

    def __post_init__(self):
        _split_raw(self.raw)  # raises on malformed ids

    @property
    def face(self):
        return _split_raw(self.raw)[0]

    @property
    def level(self):
        return _split_raw(self.raw)[1]

    @property
    def pos(self):
        return _split_raw(self.raw)[2]

    def to_hex(self):
        return format(self.raw, "016x")

    @classmethod
    def from_hex(cls, text):
        return cls(int(text, 16))


def _split_raw(raw):
    """Return (face, level, hilbert position) or raise on a malformed id."""
    raw = int(raw)
    if not 0 < raw < (1 << 64):
        raise ValueError(f"cell id {raw:#x} out of 64-bit range or zero")
    face = raw >> POS_BITS
    if face >= NUM_FACES:
        raise ValueError(f"cell id {raw:#x} has face {face} > 5")
    payload = raw & ((1 << POS_BITS) - 1)
    if payload == 0:
        raise ValueError(f"cell id {raw:#x} has no marker bit")
    marker = payload & (-payload)
    shift = marker.bit_length() - 1
    if shift % 2 != 0:
        raise ValueError(f"cell id {raw:#x} marker bit at odd offset")
    level = (POS_BITS - 1 - shift) // 2
    pos = payload >> (shift + 1)
    return face, level, pos


def _pack(face, level, pos):
    shift = POS_BITS - 1 - 2 * level
    return (face << POS_BITS) | (pos << (shift + 1)) | (1 << shift)


# --- unit sphere <-> cube face (u, v) ---------------------------------------

def _ll_to_xyz(lat_deg, lon_deg):
    lat = np.deg2rad(lat_deg)
    lon = np.deg2rad(lon_deg)
    cos_lat = np.cos(lat)
    return cos_lat * np.cos(lon), cos_lat * np.sin(lon), np.sin(lat)


def _xyz_to_face_uv(x, y, z):
    ax, ay, az = np.abs(x), np.abs(y), np.abs(z)
    axis = np.where(ax >= ay, np.where(ax >= az, 0, 2), np.where(ay >= az, 1, 2))
    major = np.choose(axis, [x, y, z])
    face = np.where(major < 0, axis + 3, axis)
    u = np.choose(face, [y, -x, -x, z, z, -y]) / major
    v = np.choose(face, [z, z, -y, y, -x, -x]) / major
    return face, u, v


def _face_uv_to_xyz(face, u, v):
    one = np.ones_like(u)
    x = np.choose(face, [one, -u, -u, -one, v, v])
    y = np.choose(face, [u, one, -v, -v, -one, u])
    z = np.choose(face, [v, v, one, -u, -u, -one])
    return x, y, z


def _xyz_to_ll(x, y, z):
    hyp = np.hypot(x, y)
    lat = np.rad2deg(np.arctan2(z, hyp))
    lon = np.rad2deg(np.arctan2(y, x))
    return lat, lon


def project_to_face(p: GeoPoint):
    """Project a point onto its cube face; returns (face, u, v) with u, v in [-1, 1]."""
    face, u, v = _xyz_to_face_uv(*_ll_to_xyz(p.lat, p.lon))
    return int(face), float(u), float(v)


def face_uv_to_point(face, u, v):
    """Inverse of project_to_face."""
    lat, lon = _xyz_to_ll(*_face_uv_to_xyz(np.asarray(face), np.asarray(u), np.asarray(v)))
    return GeoPoint(float(lat), float(lon))


# --- (u, v) <-> (s, t) quadratic transform ----------------------------------
#
# s = sqrt(1 + 3u) / 2 on u >= 0 with the odd reflection below, a cheap
# strictly monotone bijection [-1, 1] -> [0, 1] that roughly equalizes cell
# areas on the sphere.

def uv_to_st(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < -1.0) or np.any(u > 1.0):
        raise ValueError("u component outside [-1, 1]")
    r = 0.5 * np.sqrt(1.0 + 3.0 * np.abs(u))
    out = np.where(u >= 0, r, 1.0 - r)
    return out if out.ndim else float(out)


def st_to_uv(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("s component outside [0, 1]")
    out = np.where(
        s >= 0.5,
        (4.0 * s * s - 1.0) / 3.0,
        (1.0 - 4.0 * (1.0 - s) ** 2) / 3.0,
    )
    return out if out.ndim else float(out)


# --- Hilbert position <-> quadtree (i, j) -----------------------------------

def _ij_to_pos(face, i, j, level):
    """Vectorized Hilbert encoding of quadtree coordinates at `level`."""
    orient = face.astype(np.uint64) & np.uint64(_SWAP)
    pos = np.zeros_like(i, dtype=np.uint64)
    for k in range(level - 1, -1, -1):
        ij = (((i >> np.uint64(k)) & np.uint64(1)) << np.uint64(1)) | ((j >> np.uint64(k)) & np.uint64(1))
        p = _IJ_TO_POS[orient, ij]
        pos = (pos << np.uint64(2)) | p
        orient = orient ^ _POS_TO_ORIENT[p]
    return pos


def _pos_to_ij(face, pos, level):
    """Vectorized inverse of _ij_to_pos."""
    orient = face.astype(np.uint64) & np.uint64(_SWAP)
    i = np.zeros_like(pos, dtype=np.uint64)
    j = np.zeros_like(pos, dtype=np.uint64)
    for k in range(level - 1, -1, -1):
        p = (pos >> np.uint64(2 * k)) & np.uint64(3)
        ij = _POS_TO_IJ[orient, p]
        i = (i << np.uint64(1)) | (ij >> np.uint64(1))
        j = (j << np.uint64(1)) | (ij & np.uint64(1))
        orient = orient ^ _POS_TO_ORIENT[p]
    return i, j


# --- public encode / decode ---------------------------------------------------

def encode_many(lats, lons, level):
    """Cell ids (uint64 array) containing each point at `level`."""
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level {level} out of [0, {MAX_LEVEL}]")
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    face, u, v = _xyz_to_face_uv(*_ll_to_xyz(lats, lons))
    # division can nudge |u| past 1 by an ulp
    u = np.clip(u, -1.0, 1.0)
    v = np.clip(v, -1.0, 1.0)
    n = 1 << level
    i = np.clip((uv_to_st(u) * n).astype(np.int64), 0, n - 1).astype(np.uint64)
    j = np.clip((uv_to_st(v) * n).astype(np.int64), 0, n - 1).astype(np.uint64)
    pos = _ij_to_pos(face.astype(np.uint64), i, j, level)
    shift = np.uint64(POS_BITS - 1 - 2 * level)
    return (
        (face.astype(np.uint64) << np.uint64(POS_BITS))
        | (pos << (shift + np.uint64(1)))
        | (np.uint64(1) << shift)
    )


def cell_id(p: GeoPoint, level) -> CellId:
    """The cell containing `p` at the requested level."""
    raw = encode_many(np.array([p.lat]), np.array([p.lon]), level)[0]
    return CellId(int(raw))


def decode(c: CellId):
    """Return (face, level, center GeoPoint) of a cell."""
    face, level, pos = _split_raw(c.raw)
    fa = np.array([face], dtype=np.uint64)
    i, j = _pos_to_ij(fa, np.array([pos], dtype=np.uint64), level)
    n = 1 << level
    s = (np.float64(i[0]) + 0.5) / n
    t = (np.float64(j[0]) + 0.5) / n
    center = face_uv_to_point(face, st_to_uv(s), st_to_uv(t))
    return face, level, center


def decode_many(raws):
    """Vectorized decode to (faces, levels, lats, lons) for same-level ids."""
    raws = np.asarray(raws, dtype=np.uint64)
    faces = (raws >> np.uint64(POS_BITS)).astype(np.uint64)
    payload = raws & np.uint64((1 << POS_BITS) - 1)
    shift = np.log2(payload & (~payload + np.uint64(1))).astype(np.uint64)
    levels = (np.uint64(POS_BITS - 1) - shift) >> np.uint64(1)
    level = int(levels[0]) if raws.size else 0
    if raws.size and not np.all(levels == levels[0]):
        raise ValueError("decode_many requires ids at one level")
    pos = payload >> (shift + np.uint64(1))
    i, j = _pos_to_ij(faces, pos, level)
    n = 1 << level
    s = (i.astype(float) + 0.5) / n
    t = (j.astype(float) + 0.5) / n
    x, y, z = _face_uv_to_xyz(faces.astype(np.int64), st_to_uv(s), st_to_uv(t))
    lats, lons = _xyz_to_ll(x, y, z)
    return faces, levels, lats, lons


def cell_bounds(c: CellId):
    """(s_lo, s_hi, t_lo, t_hi) extent of the cell on its face."""
    face, level, pos = _split_raw(c.raw)
    i, j = _pos_to_ij(np.array([face], dtype=np.uint64), np.array([pos], dtype=np.uint64), level)
    n = 1 << level
    i0, j0 = int(i[0]), int(j[0])
    return i0 / n, (i0 + 1) / n, j0 / n, (j0 + 1) / n


def parent(c: CellId, level) -> CellId:
    """Ancestor of `c` at a coarser (or equal) level."""
    face, clevel, pos = _split_raw(c.raw)
    if level > clevel:
        raise ValueError(f"requested level {level} finer than cell level {clevel}")
    return CellId(_pack(face, level, pos >> (2 * (clevel - level))))


def rank(c: CellId) -> int:
    """Position of the cell in the face-major Hilbert traversal at its level."""
    face, level, pos = _split_raw(c.raw)
    return (face << (2 * level)) | pos


def ranks_many(raws):
    """Vectorized rank for uint64 ids at one shared level."""
    raws = np.asarray(raws, dtype=np.uint64)
    faces = raws >> np.uint64(POS_BITS)
    payload = raws & np.uint64((1 << POS_BITS) - 1)
    shift = np.log2(payload & (~payload + np.uint64(1))).astype(np.uint64)
    levels = (np.uint64(POS_BITS - 1) - shift) >> np.uint64(1)
    if raws.size and not np.all(levels == levels[0]):
        raise ValueError("ranks_many requires ids at one level")
    pos = payload >> (shift + np.uint64(1))
    return ((faces << (np.uint64(2) * levels)) | pos).astype(np.int64)


def from_rank(r, level) -> CellId:
    """Inverse of rank at a fixed level."""
    face = r >> (2 * level)
    if face >= NUM_FACES:
        raise ValueError(f"rank {r} out of range for level {level}")
    return CellId(_pack(face, level, r & ((1 << (2 * level)) - 1)))


# --- resolution selection ----------------------------------------------------

def average_cell_area_m2(level):
    """Mean cell area at a level: sphere area split over 6 * 4**level cells."""
    return EARTH_AREA_M2 / (NUM_FACES * 4 ** level)


def default_level(target_area_m2=38.0):
    """Level whose average cell area is nearest the target."""
    return min(range(MAX_LEVEL + 1), key=lambda lv: abs(average_cell_area_m2(lv) - target_area_m2))


DEFAULT_LEVEL = default_level()
