"""Geodesy and mesh-cell arithmetic.

Distances are great-circle (haversine) on a sphere of radius 6,371 km.
The city region is flattened with a local equirectangular projection
anchored at the bounding box's south-west corner, using the cosine of the
box's mid latitude; at 100m cell scale the planar error stays below 0.5%.

Conventions: the bounding box is half-open ([south-west, north-east)),
and cells are half-open squares [k*s, (k+1)*s) so a point exactly on a
cell boundary belongs to the upper cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfBounds

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_MILE = 1609.344
DEG = math.pi / 180.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned geographic box, south-west corner exclusive of north-east."""

    south_west: GeoPoint
    north_east: GeoPoint

    def __post_init__(self) -> None:
        if not (self.south_west.lat < self.north_east.lat
                and self.south_west.lon < self.north_east.lon):
            raise ValueError("south_west must lie strictly south-west of north_east")

    def contains(self, lat: float, lon: float) -> bool:
        """Half-open membership: the south/west edges are in, north/east out."""
        return (self.south_west.lat <= lat < self.north_east.lat
                and self.south_west.lon <= lon < self.north_east.lon)

    @property
    def mid_lat(self) -> float:
        return 0.5 * (self.south_west.lat + self.north_east.lat)

    def to_dict(self) -> dict:
        return {
            "south_west": {"lat": self.south_west.lat, "lon": self.south_west.lon},
            "north_east": {"lat": self.north_east.lat, "lon": self.north_east.lon},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundingBox":
        return cls(
            GeoPoint(d["south_west"]["lat"], d["south_west"]["lon"]),
            GeoPoint(d["north_east"]["lat"], d["north_east"]["lon"]),
        )


#: Default region: the five boroughs, with margin.
NYC_BBOX = BoundingBox(GeoPoint(40.49, -74.27), GeoPoint(40.92, -73.68))


class CellId(tuple):
    """Integer grid coordinates of a mesh cell: (ix east, iy north)."""

    __slots__ = ()

    def __new__(cls, ix: int, iy: int):
        return super().__new__(cls, (int(ix), int(iy)))

    @property
    def ix(self) -> int:
        return self[0]

    @property
    def iy(self) -> int:
        return self[1]

    def __repr__(self) -> str:
        return f"CellId(ix={self[0]}, iy={self[1]})"


@dataclass(frozen=True)
class MeshSpec:
    """Geometry of the city mesh: bounding box plus cell size in meters."""

    bbox: BoundingBox = NYC_BBOX
    cell_size: float = 100.0
    earth_radius: float = EARTH_RADIUS_M
    ref_cos: float = field(default=0.0)

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.ref_cos == 0.0:
            object.__setattr__(self, "ref_cos", math.cos(self.bbox.mid_lat * DEG))
        if not (0.0 < self.ref_cos <= 1.0):
            raise ValueError("ref_cos must be in (0, 1]")

    @property
    def width_m(self) -> float:
        sw, ne = self.bbox.south_west, self.bbox.north_east
        return self.earth_radius * self.ref_cos * (ne.lon - sw.lon) * DEG

    @property
    def height_m(self) -> float:
        sw, ne = self.bbox.south_west, self.bbox.north_east
        return self.earth_radius * (ne.lat - sw.lat) * DEG

    @property
    def nx(self) -> int:
        return max(1, math.ceil(self.width_m / self.cell_size))

    @property
    def ny(self) -> int:
        return max(1, math.ceil(self.height_m / self.cell_size))

    def to_dict(self) -> dict:
        return {
            "bbox": self.bbox.to_dict(),
            "cell_size": self.cell_size,
            "earth_radius": self.earth_radius,
            "ref_cos": self.ref_cos,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeshSpec":
        return cls(
            bbox=BoundingBox.from_dict(d["bbox"]),
            cell_size=float(d.get("cell_size", 100.0)),
            earth_radius=float(d.get("earth_radius", EARTH_RADIUS_M)),
            ref_cos=float(d.get("ref_cos", 0.0)),
        )


def haversine(a: GeoPoint, b: GeoPoint, radius: float = EARTH_RADIUS_M) -> float:
    """Great-circle distance between two points, in meters."""
    p1 = a.lat * DEG
    p2 = b.lat * DEG
    dp = (b.lat - a.lat) * DEG
    dl = (b.lon - a.lon) * DEG
    s = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * radius * math.atan2(math.sqrt(s), math.sqrt(1.0 - s))


def haversine_arrays(lat1, lon1, lat2, lon2, radius: float = EARTH_RADIUS_M) -> np.ndarray:
    """Vectorized haversine over degree arrays; broadcasts like numpy."""
    p1 = np.multiply(lat1, DEG)
    p2 = np.multiply(lat2, DEG)
    dp = np.subtract(lat2, lat1) * DEG
    dl = np.subtract(lon2, lon1) * DEG
    s = np.sin(dp / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2.0) ** 2
    return 2.0 * radius * np.arctan2(np.sqrt(s), np.sqrt(1.0 - s))


def project(p: GeoPoint, spec: MeshSpec) -> tuple[float, float]:
    """Planar offsets (x east, y north) in meters from the box's SW corner.

    Raises OutOfBounds for points outside the half-open bbox.
    """
    if not spec.bbox.contains(p.lat, p.lon):
        raise OutOfBounds(f"point ({p.lat}, {p.lon}) outside bbox")
    sw = spec.bbox.south_west
    x = spec.earth_radius * spec.ref_cos * (p.lon - sw.lon) * DEG
    y = spec.earth_radius * (p.lat - sw.lat) * DEG
    return x, y


def project_arrays(lats, lons, spec: MeshSpec) -> tuple[np.ndarray, np.ndarray]:
    """Array form of project(); no bounds check (callers validate)."""
    sw = spec.bbox.south_west
    x = spec.earth_radius * spec.ref_cos * (np.asarray(lons, dtype=np.float64) - sw.lon) * DEG
    y = spec.earth_radius * (np.asarray(lats, dtype=np.float64) - sw.lat) * DEG
    return x, y


def unproject(x: float, y: float, spec: MeshSpec) -> GeoPoint:
    """Inverse of project(); exact up to float rounding."""
    sw = spec.bbox.south_west
    lon = sw.lon + x / (spec.earth_radius * spec.ref_cos * DEG)
    lat = sw.lat + y / (spec.earth_radius * DEG)
    return GeoPoint(lat, lon)


def cell_of(p: GeoPoint, spec: MeshSpec) -> CellId:
    """Mesh cell containing a point (floor convention on half-open cells)."""
    x, y = project(p, spec)
    return CellId(int(x // spec.cell_size), int(y // spec.cell_size))


def cells_of_arrays(lats, lons, spec: MeshSpec) -> tuple[np.ndarray, np.ndarray]:
    """Array form of cell_of(); returns (ix, iy) int64 arrays, no bounds check."""
    x, y = project_arrays(lats, lons, spec)
    ix = np.floor_divide(x, spec.cell_size).astype(np.int64)
    iy = np.floor_divide(y, spec.cell_size).astype(np.int64)
    return ix, iy


def cell_center(c: CellId, spec: MeshSpec) -> GeoPoint:
    """Geographic center of a cell (back-projected)."""
    s = spec.cell_size
    return unproject((c.ix + 0.5) * s, (c.iy + 0.5) * s, spec)


def chebyshev(a: CellId, b: CellId) -> int:
    return max(abs(a.ix - b.ix), abs(a.iy - b.iy))


def neighbors(c: CellId, ring: int, spec: MeshSpec) -> set[CellId]:
    """All in-bounds cells within Chebyshev distance `ring` of c.

    Ring 0 is {c}; ring 1 is the 3x3 block. Cells falling outside the
    mesh extent are silently clipped.
    """
    if ring < 0:
        raise ValueError("ring must be >= 0")
    nx, ny = spec.nx, spec.ny
    out: set[CellId] = set()
    for iy in range(max(0, c.iy - ring), min(ny - 1, c.iy + ring) + 1):
        for ix in range(max(0, c.ix - ring), min(nx - 1, c.ix + ring) + 1):
            out.add(CellId(ix, iy))
    return out
