"""Immutable mesh index: cell of each pickup point -> trip ordinals.

Built once from a TripStore, then queried concurrently without locks.
Cell lists hold ordinals ascending, and every ordinal appears in exactly
one list (the cell of its pickup point), so query results are fully
deterministic given record order.

File layout (little-endian, magic "CABMESHI", version 1):

    header: magic 8s | version u32 | header_size u32 | n_trips u64 |
            n_cells u64 | nx u32 | ny u32 | cell_size f64 |
            sw_lat f64 | sw_lon f64 | ne_lat f64 | ne_lon f64 |
            ref_cos f64 | earth_radius f64 | built_at i64 |
            payload_crc32 u32 | pad u32
    payload:
        cell_ix u32[n_cells], cell_iy u32[n_cells]   sorted by iy*nx+ix
        cell_start u64[n_cells], cell_len u32[n_cells]
        ordinals u64[n_trips]                        grouped by cell
        trip columns, same order and dtypes as the trips file

The trip columns are the store payload verbatim, so a loaded index
memory-maps them in place.
"""

from __future__ import annotations

import struct
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptFile, NoTripsFound, OutOfBounds, VersionMismatch
from .geo import (BoundingBox, CellId, GeoPoint, MeshSpec, cell_of,
                  cells_of_arrays)
from .store import _COLUMNS, TripStore
from .store import _crc32_file  # shared streaming checksum

INDEX_MAGIC = b"CABMESHI"
INDEX_VERSION = 1
_HEADER = struct.Struct("<8sIIQQIIdddddddqII")

_EMPTY_ORDINALS = np.empty(0, dtype=np.uint64)
_EMPTY_ORDINALS.flags.writeable = False


@dataclass
class MeshIndex:
    """Read-only mapping from mesh cells to the trips picked up in them."""

    spec: MeshSpec
    store: TripStore
    cell_ix: np.ndarray      # u32, ascending by linear key iy*nx+ix
    cell_iy: np.ndarray      # u32
    cell_start: np.ndarray   # u64, offsets into ordinals
    cell_len: np.ndarray     # u32
    ordinals: np.ndarray     # u64, grouped by cell, ascending within a cell
    built_at: int            # epoch seconds

    def __post_init__(self) -> None:
        nx = self.spec.nx
        self._keys = self.cell_iy.astype(np.int64) * nx + self.cell_ix.astype(np.int64)
        for arr in (self.cell_ix, self.cell_iy, self.cell_start,
                    self.cell_len, self.ordinals):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.store)

    @property
    def n_cells(self) -> int:
        return len(self.cell_ix)

    def trips_in(self, cell: CellId) -> np.ndarray:
        """Ascending trip ordinals picked up in a cell; empty if none/unknown."""
        if not (0 <= cell.ix < self.spec.nx and 0 <= cell.iy < self.spec.ny):
            return _EMPTY_ORDINALS
        key = cell.iy * self.spec.nx + cell.ix
        i = int(np.searchsorted(self._keys, key))
        if i >= len(self._keys) or self._keys[i] != key:
            return _EMPTY_ORDINALS
        start = int(self.cell_start[i])
        return self.ordinals[start:start + int(self.cell_len[i])]

    def _gather_keys(self, keys: np.ndarray) -> list[np.ndarray]:
        idx = np.searchsorted(self._keys, keys)
        idx_c = np.minimum(idx, len(self._keys) - 1) if len(self._keys) else idx
        hit = (idx < len(self._keys)) & (self._keys[idx_c] == keys) if len(self._keys) else \
            np.zeros(len(keys), dtype=bool)
        parts = []
        for i in idx[hit]:
            start = int(self.cell_start[i])
            parts.append(self.ordinals[start:start + int(self.cell_len[i])])
        return parts

    def _shell_keys(self, c: CellId, r: int) -> np.ndarray:
        """Linear keys of in-bounds cells at Chebyshev distance exactly r."""
        nx, ny = self.spec.nx, self.spec.ny
        if r == 0:
            if 0 <= c.ix < nx and 0 <= c.iy < ny:
                return np.array([c.iy * nx + c.ix], dtype=np.int64)
            return np.empty(0, dtype=np.int64)
        keys = []
        x0, x1 = c.ix - r, c.ix + r
        y0, y1 = c.iy - r, c.iy + r
        for iy in (y0, y1):                       # top and bottom edges
            if 0 <= iy < ny:
                xs = np.arange(max(0, x0), min(nx - 1, x1) + 1, dtype=np.int64)
                keys.append(iy * nx + xs)
        x_span = []
        for ix in (x0, x1):                       # side edges, corners excluded
            if 0 <= ix < nx:
                ys = np.arange(max(0, y0 + 1), min(ny - 1, y1 - 1) + 1, dtype=np.int64)
                x_span.append(ys * nx + ix)
        keys.extend(x_span)
        if not keys:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(keys))

    def trips_near(self, origin: GeoPoint, max_ring: int) -> tuple[int, np.ndarray]:
        """Expand rings around the origin cell until trips are found.

        Starts at ring 1 (the 3x3 neighborhood) and grows whole rings, so
        the result is the union of all cell lists within Chebyshev
        distance ring_used, with ordinals ascending. Raises NoTripsFound
        when max_ring is exhausted.
        """
        if max_ring < 1:
            raise ValueError("max_ring must be >= 1")
        c = cell_of(origin, self.spec)
        parts = self._gather_keys(self._shell_keys(c, 0))
        total = sum(len(p) for p in parts)
        for ring in range(1, max_ring + 1):
            parts.extend(self._gather_keys(self._shell_keys(c, ring)))
            total = sum(len(p) for p in parts)
            if total:
                merged = np.sort(np.concatenate(parts)) if len(parts) > 1 else parts[0]
                return ring, merged
        raise NoTripsFound(
            f"no trips within {max_ring} rings of cell ({c.ix}, {c.iy})")

    def equals(self, other: "MeshIndex") -> bool:
        return (self.spec == other.spec
                and self.built_at == other.built_at
                and self.store.equals(other.store)
                and all(np.array_equal(getattr(self, a), getattr(other, a))
                        for a in ("cell_ix", "cell_iy", "cell_start",
                                  "cell_len", "ordinals")))


def build(store: TripStore, spec: MeshSpec, built_at: int | None = None) -> MeshIndex:
    """Index a trip store on its pickup cells.

    Raises OutOfBounds if any pickup escapes the mesh, which signals an
    ingest/config mismatch rather than bad data.
    """
    n = len(store)
    ix, iy = cells_of_arrays(store.pickup_lat, store.pickup_lon, spec)
    nx, ny = spec.nx, spec.ny
    bad = (ix < 0) | (ix >= nx) | (iy < 0) | (iy >= ny)
    if bad.any():
        i = int(np.argmax(bad))
        raise OutOfBounds(
            f"trip ordinal {i} pickup ({store.pickup_lat[i]:.6f}, "
            f"{store.pickup_lon[i]:.6f}) outside the mesh")
    keys = iy * nx + ix
    order = np.lexsort((np.arange(n, dtype=np.uint64), keys))
    sorted_keys = keys[order]
    uniq_keys, first, counts = np.unique(sorted_keys, return_index=True,
                                         return_counts=True)
    return MeshIndex(
        spec=spec,
        store=store,
        cell_ix=(uniq_keys % nx).astype(np.uint32),
        cell_iy=(uniq_keys // nx).astype(np.uint32),
        cell_start=first.astype(np.uint64),
        cell_len=counts.astype(np.uint32),
        ordinals=order.astype(np.uint64),
        built_at=int(time.time()) if built_at is None else int(built_at),
    )


def save(index: MeshIndex, path: str | Path) -> None:
    """Write the documented index file; byte-identical for equal indexes."""
    path = Path(path)
    payload_arrays = [
        np.ascontiguousarray(index.cell_ix, dtype="<u4"),
        np.ascontiguousarray(index.cell_iy, dtype="<u4"),
        np.ascontiguousarray(index.cell_start, dtype="<u8"),
        np.ascontiguousarray(index.cell_len, dtype="<u4"),
        np.ascontiguousarray(index.ordinals, dtype="<u8"),
    ] + [getattr(index.store, name) for name, _ in _COLUMNS]
    crc = 0
    for arr in payload_arrays:
        crc = zlib.crc32(arr.tobytes(), crc)
    bbox = index.spec.bbox
    header = _HEADER.pack(
        INDEX_MAGIC, INDEX_VERSION, _HEADER.size,
        len(index.store), index.n_cells,
        index.spec.nx, index.spec.ny, index.spec.cell_size,
        bbox.south_west.lat, bbox.south_west.lon,
        bbox.north_east.lat, bbox.north_east.lon,
        index.spec.ref_cos, index.spec.earth_radius,
        index.built_at, crc & 0xFFFFFFFF, 0,
    )
    with open(path, "wb") as f:
        f.write(header)
        for arr in payload_arrays:
            f.write(arr.tobytes())


def load(path: str | Path, mmap: bool = True) -> MeshIndex:
    """Read an index file, verifying magic, version, size, and checksum."""
    path = Path(path)
    size = path.stat().st_size
    if size < _HEADER.size:
        raise CorruptFile(f"{path}: shorter than header")
    with open(path, "rb") as f:
        (magic, version, header_size, n_trips, n_cells, nx, ny, cell_size,
         sw_lat, sw_lon, ne_lat, ne_lon, ref_cos, earth_radius,
         built_at, crc_expect, _pad) = _HEADER.unpack(f.read(_HEADER.size))
        if magic != INDEX_MAGIC:
            raise CorruptFile(f"{path}: bad magic {magic!r}")
        if version != INDEX_VERSION:
            raise VersionMismatch(f"{path}: version {version}, expected {INDEX_VERSION}")
        layout = [("cell_ix", np.dtype("<u4"), n_cells),
                  ("cell_iy", np.dtype("<u4"), n_cells),
                  ("cell_start", np.dtype("<u8"), n_cells),
                  ("cell_len", np.dtype("<u4"), n_cells),
                  ("ordinals", np.dtype("<u8"), n_trips)]
        layout += [(name, dtype, n_trips) for name, dtype in _COLUMNS]
        payload = sum(int(count) * dtype.itemsize for _, dtype, count in layout)
        if size != header_size + payload:
            raise CorruptFile(f"{path}: size {size}, expected {header_size + payload}")
        if _crc32_file(f, header_size, payload) != crc_expect:
            raise CorruptFile(f"{path}: checksum mismatch")

    spec = MeshSpec(
        bbox=BoundingBox(GeoPoint(sw_lat, sw_lon), GeoPoint(ne_lat, ne_lon)),
        cell_size=cell_size, earth_radius=earth_radius, ref_cos=ref_cos,
    )
    if (spec.nx, spec.ny) != (nx, ny):
        raise CorruptFile(f"{path}: grid extent mismatch")
    arrays = {}
    offset = header_size
    for name, dtype, count in layout:
        if count == 0:
            arrays[name] = np.empty(0, dtype=dtype)  # mmap rejects size 0
        elif mmap:
            arrays[name] = np.memmap(path, dtype=dtype, mode="r",
                                     offset=offset, shape=(int(count),))
        else:
            with open(path, "rb") as f:
                f.seek(offset)
                arrays[name] = np.fromfile(f, dtype=dtype, count=int(count))
        offset += int(count) * dtype.itemsize
    store = TripStore(**{name: arrays[name] for name, _ in _COLUMNS})
    return MeshIndex(
        spec=spec, store=store,
        cell_ix=arrays["cell_ix"], cell_iy=arrays["cell_iy"],
        cell_start=arrays["cell_start"], cell_len=arrays["cell_len"],
        ordinals=arrays["ordinals"], built_at=built_at,
    )
