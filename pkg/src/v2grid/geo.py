"""Spatial primitives: regular analysis grid, planning-area polygons, and the
assignment of grid cells to areas.

Coordinates are WGS84 degrees. Binning uses an equirectangular local
projection anchored at the grid origin (adequate at city scale); distances
between cells use the haversine great-circle formula on cell centroids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidGeometryError, InvalidInputError

EARTH_RADIUS_M = 6371008.8


class CellId(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GridSpec:
    """Regular square grid anchored at its south-west corner.

    Rows count northward from ``origin_lat``, columns eastward from
    ``origin_lon``. Cell extents are half-open, so a point exactly on the
    northern or eastern boundary of the grid is out of bounds.
    """

    origin_lat: float
    origin_lon: float
    cell_size_m: float = 250.0
    n_rows: int = 1
    n_cols: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.origin_lat) and math.isfinite(self.origin_lon)):
            raise InvalidInputError("grid origin coordinates must be finite")
        if not self.cell_size_m > 0:
            raise InvalidInputError("cell_size_m must be positive")
        if self.n_rows < 1 or self.n_cols < 1:
            raise InvalidInputError("grid needs at least one row and one column")

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    def project(self, lat: float, lon: float) -> tuple[float, float]:
        """Meters east (x) and north (y) of the grid origin."""
        x = EARTH_RADIUS_M * math.radians(lon - self.origin_lon) * math.cos(
            math.radians(self.origin_lat)
        )
        y = EARTH_RADIUS_M * math.radians(lat - self.origin_lat)
        return x, y

    def unproject(self, x: float, y: float) -> tuple[float, float]:
        """Inverse of :meth:`project`; returns (lat, lon)."""
        lat = self.origin_lat + math.degrees(y / EARTH_RADIUS_M)
        lon = self.origin_lon + math.degrees(
            x / (EARTH_RADIUS_M * math.cos(math.radians(self.origin_lat)))
        )
        return lat, lon

    def contains(self, cell: CellId) -> bool:
        return 0 <= cell.row < self.n_rows and 0 <= cell.col < self.n_cols

    def cell_centroid(self, cell: CellId) -> tuple[float, float]:
        if not self.contains(cell):
            raise InvalidInputError(f"cell {cell} outside grid bounds")
        x = (cell.col + 0.5) * self.cell_size_m
        y = (cell.row + 0.5) * self.cell_size_m
        return self.unproject(x, y)

    def bounds_projected(self) -> tuple[float, float]:
        """Grid extent in meters (width east, height north)."""
        return self.n_cols * self.cell_size_m, self.n_rows * self.cell_size_m


def locate(lat: float, lon: float, grid: GridSpec) -> Optional[CellId]:
    """Cell containing a point, or None when the point falls outside the grid.

    Each cell covers the half-open square [origin + i*cell, origin + (i+1)*cell)
    in projected meters.
    """
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise InvalidInputError(f"non-finite coordinates ({lat}, {lon})")
    x, y = grid.project(lat, lon)
    col = math.floor(x / grid.cell_size_m)
    row = math.floor(y / grid.cell_size_m)
    if 0 <= row < grid.n_rows and 0 <= col < grid.n_cols:
        return CellId(int(row), int(col))
    return None


def locate_many(
    lats: np.ndarray, lons: np.ndarray, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`locate`. Returns (rows, cols); out-of-grid entries are -1."""
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    if not (np.all(np.isfinite(lats)) and np.all(np.isfinite(lons))):
        raise InvalidInputError("non-finite coordinates in input")
    cos0 = math.cos(math.radians(grid.origin_lat))
    x = EARTH_RADIUS_M * np.radians(lons - grid.origin_lon) * cos0
    y = EARTH_RADIUS_M * np.radians(lats - grid.origin_lat)
    cols = np.floor(x / grid.cell_size_m).astype(np.int64)
    rows = np.floor(y / grid.cell_size_m).astype(np.int64)
    bad = (rows < 0) | (rows >= grid.n_rows) | (cols < 0) | (cols >= grid.n_cols)
    rows[bad] = -1
    cols[bad] = -1
    return rows, cols


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def cell_distance_m(a: CellId, b: CellId, grid: GridSpec) -> float:
    """Great-circle distance between two cell centroids. Zero iff a == b."""
    if not (grid.contains(a) and grid.contains(b)):
        raise InvalidInputError("cells must lie inside the grid")
    if a == b:
        return 0.0
    lat1, lon1 = grid.cell_centroid(a)
    lat2, lon2 = grid.cell_centroid(b)
    return haversine_m(lat1, lon1, lat2, lon2)


# ---------------------------------------------------------------------------
# Planning areas
# ---------------------------------------------------------------------------

# Polygon layout: tuple of parts (a MultiPolygon has several), each part a
# tuple of rings (exterior first, holes after), each ring an (k, 2) float
# array of (lat, lon) rows with the first row repeated at the end.
Ring = np.ndarray
PolygonParts = tuple[tuple[Ring, ...], ...]


def _normalise_ring(ring: Sequence[Sequence[float]]) -> Ring:
    arr = np.asarray(ring, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidGeometryError("ring must be a sequence of (lat, lon) pairs")
    if len(arr) >= 2 and bool(np.all(arr[0] == arr[-1])):
        closed = arr
    else:
        closed = np.vstack([arr, arr[:1]])
    # distinct vertices excluding the closing repeat
    if len(np.unique(closed[:-1], axis=0)) < 3:
        raise InvalidGeometryError("degenerate polygon ring (fewer than 3 vertices)")
    return closed


@dataclass(frozen=True)
class PlanningArea:
    """Urban planning polygon used as the aggregation unit."""

    area_id: str
    name: str
    polygon: PolygonParts
    area_m2: float
    households: Optional[int] = None
    monthly_kwh_per_household: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.area_id:
            raise InvalidInputError("area_id must be non-empty")
        if not self.area_m2 > 0:
            raise InvalidInputError(f"area {self.area_id}: area_m2 must be positive")
        if self.households is not None and self.households < 0:
            raise InvalidInputError(f"area {self.area_id}: households must be >= 0")
        if (
            self.monthly_kwh_per_household is not None
            and self.monthly_kwh_per_household < 0
        ):
            raise InvalidInputError(
                f"area {self.area_id}: monthly_kwh_per_household must be >= 0"
            )
        parts = tuple(
            tuple(_normalise_ring(ring) for ring in part) for part in self.polygon
        )
        if not parts or any(len(part) == 0 for part in parts):
            raise InvalidGeometryError(f"area {self.area_id}: empty polygon")
        object.__setattr__(self, "polygon", parts)

    @property
    def has_household_data(self) -> bool:
        return (
            self.households is not None and self.monthly_kwh_per_household is not None
        )


def make_rect_area(
    area_id: str,
    lat_min: float,
    lat_max: float,
    lon_min: float,
    lon_max: float,
    area_m2: float,
    **kwargs,
) -> PlanningArea:
    """Convenience constructor for an axis-aligned rectangular area."""
    ring = [
        (lat_min, lon_min),
        (lat_min, lon_max),
        (lat_max, lon_max),
        (lat_max, lon_min),
        (lat_min, lon_min),
    ]
    return PlanningArea(area_id=area_id, name=kwargs.pop("name", area_id),
                        polygon=((ring,),), area_m2=area_m2, **kwargs)


def _ring_even_odd(lats: np.ndarray, lons: np.ndarray, ring: Ring) -> np.ndarray:
    """Even-odd crossing flags for each point against one ring."""
    y0, x0 = ring[:-1, 0], ring[:-1, 1]
    y1, x1 = ring[1:, 0], ring[1:, 1]
    inside = np.zeros(lats.shape, dtype=bool)
    for j in range(len(y0)):
        if y0[j] == y1[j]:
            continue  # horizontal edge never crosses the horizontal ray test
        cond = (y0[j] > lats) != (y1[j] > lats)
        if not np.any(cond):
            continue
        x_at = x0[j] + (lats - y0[j]) * (x1[j] - x0[j]) / (y1[j] - y0[j])
        inside ^= cond & (lons < x_at)
    return inside


def _ring_boundary(
    lats: np.ndarray, lons: np.ndarray, ring: Ring, eps: float = 1e-12
) -> np.ndarray:
    """Flags points lying on any edge of the ring (within eps, degree units)."""
    on = np.zeros(lats.shape, dtype=bool)
    y0, x0 = ring[:-1, 0], ring[:-1, 1]
    y1, x1 = ring[1:, 0], ring[1:, 1]
    for j in range(len(y0)):
        dy, dx = y1[j] - y0[j], x1[j] - x0[j]
        cross = dx * (lats - y0[j]) - dy * (lons - x0[j])
        lo_y, hi_y = min(y0[j], y1[j]) - eps, max(y0[j], y1[j]) + eps
        lo_x, hi_x = min(x0[j], x1[j]) - eps, max(x0[j], x1[j]) + eps
        on |= (
            (np.abs(cross) <= eps)
            & (lats >= lo_y) & (lats <= hi_y)
            & (lons >= lo_x) & (lons <= hi_x)
        )
    return on


def points_in_polygon(
    lats: np.ndarray, lons: np.ndarray, polygon: PolygonParts
) -> np.ndarray:
    """Boundary-inclusive even-odd point-in-polygon test, vectorised over points."""
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    result = np.zeros(lats.shape, dtype=bool)
    for part in polygon:
        inside = np.zeros(lats.shape, dtype=bool)
        for ring in part:
            inside ^= _ring_even_odd(lats, lons, ring)
        for ring in part:
            inside |= _ring_boundary(lats, lons, ring)
        result |= inside
    return result


class AreaIndex:
    """Mapping from grid cells to planning-area ids.

    Each cell is assigned by testing its centroid against the area polygons in
    lexicographic area_id order, so centroids on shared boundaries land in the
    lexicographically lowest area. Cells outside every polygon map to None.
    """

    def __init__(self, grid: GridSpec, codes: np.ndarray, area_ids: list[str]):
        self.grid = grid
        self._codes = codes
        self._area_ids = area_ids

    def area_of(self, cell: CellId) -> Optional[str]:
        if not self.grid.contains(cell):
            raise InvalidInputError(f"cell {cell} outside grid bounds")
        code = self._codes[cell.row, cell.col]
        return None if code < 0 else self._area_ids[code]

    @property
    def area_ids(self) -> list[str]:
        return list(self._area_ids)

    @property
    def n_unassigned(self) -> int:
        return int(np.count_nonzero(self._codes < 0))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, AreaIndex)
            and self.grid == other.grid
            and self._area_ids == other._area_ids
            and bool(np.array_equal(self._codes, other._codes))
        )


def build_area_index(grid: GridSpec, areas: Iterable[PlanningArea]) -> AreaIndex:
    """Assign every cell centroid to a planning area (or none)."""
    ordered = sorted(areas, key=lambda a: a.area_id)
    ids = [a.area_id for a in ordered]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("duplicate area_id in planning areas")
    rows = np.arange(grid.n_rows, dtype=np.float64)
    cols = np.arange(grid.n_cols, dtype=np.float64)
    y = (rows + 0.5) * grid.cell_size_m
    x = (cols + 0.5) * grid.cell_size_m
    lat = grid.origin_lat + np.degrees(y / EARTH_RADIUS_M)
    lon = grid.origin_lon + np.degrees(
        x / (EARTH_RADIUS_M * math.cos(math.radians(grid.origin_lat)))
    )
    lat_g, lon_g = np.meshgrid(lat, lon, indexing="ij")
    lats, lons = lat_g.ravel(), lon_g.ravel()
    codes = np.full(lats.shape, -1, dtype=np.int32)
    for i, area in enumerate(ordered):
        open_mask = codes < 0
        if not np.any(open_mask):
            break
        hit = points_in_polygon(lats, lons, area.polygon)
        codes[open_mask & hit] = i
    return AreaIndex(grid, codes.reshape(grid.n_rows, grid.n_cols), ids)


# ---------------------------------------------------------------------------
# GeoJSON planning-area interchange
# ---------------------------------------------------------------------------

def _geojson_polygon_parts(geometry: dict) -> PolygonParts:
    gtype = geometry.get("type")
    if gtype == "Polygon":
        raw_parts = [geometry["coordinates"]]
    elif gtype == "MultiPolygon":
        raw_parts = geometry["coordinates"]
    else:
        raise InvalidGeometryError(f"unsupported geometry type {gtype!r}")
    # GeoJSON positions are (lon, lat); flip to internal (lat, lon)
    return tuple(
        tuple(np.asarray([(pt[1], pt[0]) for pt in ring], dtype=np.float64) for ring in part)
        for part in raw_parts
    )


def load_planning_areas(path) -> list[PlanningArea]:
    """Read a GeoJSON FeatureCollection of planning areas.

    Required feature properties: area_id (string), area_m2 (number).
    Optional: name, households, monthly_kwh_per_household.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise InvalidInputError("planning areas file must be a FeatureCollection")
    areas = []
    for feat in doc.get("features", []):
        props = feat.get("properties") or {}
        if "area_id" not in props or "area_m2" not in props:
            raise InvalidInputError(
                "each planning-area feature needs area_id and area_m2 properties"
            )
        households = props.get("households")
        areas.append(
            PlanningArea(
                area_id=str(props["area_id"]),
                name=str(props.get("name", props["area_id"])),
                polygon=_geojson_polygon_parts(feat.get("geometry") or {}),
                area_m2=float(props["area_m2"]),
                households=None if households is None else int(households),
                monthly_kwh_per_household=(
                    None
                    if props.get("monthly_kwh_per_household") is None
                    else float(props["monthly_kwh_per_household"])
                ),
            )
        )
    return areas


def planning_area_feature(area: PlanningArea, extra_properties: Optional[dict] = None) -> dict:
    """GeoJSON Feature for one area (geometry echoed back in lon/lat order)."""
    parts = [
        [[[float(lon), float(lat)] for lat, lon in ring] for ring in part]
        for part in area.polygon
    ]
    geometry = (
        {"type": "Polygon", "coordinates": parts[0]}
        if len(parts) == 1
        else {"type": "MultiPolygon", "coordinates": parts}
    )
    props = {
        "area_id": area.area_id,
        "name": area.name,
        "area_m2": area.area_m2,
    }
    if area.households is not None:
        props["households"] = area.households
    if area.monthly_kwh_per_household is not None:
        props["monthly_kwh_per_household"] = area.monthly_kwh_per_household
    if extra_properties:
        props.update(extra_properties)
    return {"type": "Feature", "geometry": geometry, "properties": props}


def write_planning_areas_geojson(areas: Iterable[PlanningArea], path) -> None:
    doc = {
        "type": "FeatureCollection",
        "features": [planning_area_feature(a) for a in sorted(areas, key=lambda a: a.area_id)],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
