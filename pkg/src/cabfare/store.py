"""Columnar trip storage and its on-disk binary format.

Coordinates are canonically held as 1e-6-degree integers, timestamps as
epoch seconds, fares as integer cents, meter distances as milli-miles
(-1 when the meter value is missing). Every computation downstream reads
the quantized values, so results are identical whether a corpus came from
CSV, a binary file, or a synthetic generator.

Degrees are reconstructed as ``e6 * 1e-6`` everywhere. The multiplied and
divided forms differ in the last bit for roughly a third of coordinate
values, so mixing them would make independently computed distances
disagree bitwise. Stick to the multiplication.

File layout (little-endian, magic "CABTRIPS", version 1):

    header: magic 8s | version u32 | pad u32 | n u64 | payload_crc32 u32 | pad u32
    payload, one contiguous column after another, n elements each:
        row_id u64, pickup_lat_e6 i32, pickup_lon_e6 i32,
        dropoff_lat_e6 i32, dropoff_lon_e6 i32, pickup_ts i64,
        dropoff_ts i64, fare_cents i64, distance_mmi i32

The payload CRC32 is zlib.crc32 over all column bytes in order.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptFile, VersionMismatch

TRIPS_MAGIC = b"CABTRIPS"
TRIPS_VERSION = 1
_HEADER = struct.Struct("<8sIIQII")

#: Sentinel for an absent timestamp (epoch seconds column).
MISSING_TS = np.iinfo(np.int64).min
#: Sentinel for an absent meter distance (milli-miles column).
MISSING_DISTANCE = -1

_COLUMNS = (
    ("row_id", np.dtype("<u8")),
    ("pickup_lat_e6", np.dtype("<i4")),
    ("pickup_lon_e6", np.dtype("<i4")),
    ("dropoff_lat_e6", np.dtype("<i4")),
    ("dropoff_lon_e6", np.dtype("<i4")),
    ("pickup_ts", np.dtype("<i8")),
    ("dropoff_ts", np.dtype("<i8")),
    ("fare_cents", np.dtype("<i8")),
    ("distance_mmi", np.dtype("<i4")),
)


def _crc32_file(f, start: int, length: int, chunk: int = 1 << 20) -> int:
    f.seek(start)
    crc = 0
    remaining = length
    while remaining > 0:
        block = f.read(min(chunk, remaining))
        if not block:
            raise CorruptFile("unexpected end of file")
        crc = zlib.crc32(block, crc)
        remaining -= len(block)
    return crc & 0xFFFFFFFF


@dataclass
class TripStore:
    """Ordinal-addressed trip columns; ordinal i is the i-th ingested trip."""

    row_id: np.ndarray
    pickup_lat_e6: np.ndarray
    pickup_lon_e6: np.ndarray
    dropoff_lat_e6: np.ndarray
    dropoff_lon_e6: np.ndarray
    pickup_ts: np.ndarray
    dropoff_ts: np.ndarray
    fare_cents: np.ndarray
    distance_mmi: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.row_id)
        for name, dtype in _COLUMNS:
            col = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            if len(col) != n:
                raise ValueError(f"column {name} has length {len(col)}, expected {n}")
            col.flags.writeable = False
            object.__setattr__(self, name, col)

    def __len__(self) -> int:
        return len(self.row_id)

    # Degree views (float64) over the canonical integer columns.
    @property
    def pickup_lat(self) -> np.ndarray:
        return self.pickup_lat_e6 * 1e-6

    @property
    def pickup_lon(self) -> np.ndarray:
        return self.pickup_lon_e6 * 1e-6

    @property
    def dropoff_lat(self) -> np.ndarray:
        return self.dropoff_lat_e6 * 1e-6

    @property
    def dropoff_lon(self) -> np.ndarray:
        return self.dropoff_lon_e6 * 1e-6

    @classmethod
    def from_degrees(cls, pickup_lat, pickup_lon, dropoff_lat, dropoff_lon,
                     fare_usd, pickup_ts=None, dropoff_ts=None,
                     distance_mi=None, row_id=None) -> "TripStore":
        """Build a store from float columns, quantizing to the canonical units."""
        plat = np.asarray(pickup_lat, dtype=np.float64)
        n = len(plat)

        def e6(a):
            return np.round(np.asarray(a, dtype=np.float64) * 1e6).astype(np.int64)

        def ts(a):
            if a is None:
                return np.full(n, MISSING_TS, dtype=np.int64)
            return np.asarray(a, dtype=np.int64)

        if distance_mi is None:
            dist = np.full(n, MISSING_DISTANCE, dtype=np.int64)
        else:
            d = np.asarray(distance_mi, dtype=np.float64)
            dist = np.where(np.isnan(d), MISSING_DISTANCE,
                            np.round(d * 1000.0)).astype(np.int64)
        return cls(
            row_id=np.arange(n, dtype=np.uint64) if row_id is None else row_id,
            pickup_lat_e6=e6(plat),
            pickup_lon_e6=e6(pickup_lon),
            dropoff_lat_e6=e6(dropoff_lat),
            dropoff_lon_e6=e6(dropoff_lon),
            pickup_ts=ts(pickup_ts),
            dropoff_ts=ts(dropoff_ts),
            fare_cents=np.round(np.asarray(fare_usd, dtype=np.float64) * 100.0).astype(np.int64),
            distance_mmi=dist,
        )

    def equals(self, other: "TripStore") -> bool:
        return len(self) == len(other) and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name, _ in _COLUMNS
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        crc = 0
        for name, dtype in _COLUMNS:
            crc = zlib.crc32(getattr(self, name).tobytes(), crc)
        header = _HEADER.pack(TRIPS_MAGIC, TRIPS_VERSION, 0, len(self),
                              crc & 0xFFFFFFFF, 0)
        with open(path, "wb") as f:
            f.write(header)
            for name, _ in _COLUMNS:
                f.write(getattr(self, name).tobytes())

    @classmethod
    def load(cls, path: str | Path, mmap: bool = True) -> "TripStore":
        """Read a trips file, verifying magic, version, size, and checksum."""
        path = Path(path)
        size = path.stat().st_size
        if size < _HEADER.size:
            raise CorruptFile(f"{path}: shorter than header")
        with open(path, "rb") as f:
            magic, version, _, n, crc_expect, _ = _HEADER.unpack(f.read(_HEADER.size))
            if magic != TRIPS_MAGIC:
                raise CorruptFile(f"{path}: bad magic {magic!r}")
            if version != TRIPS_VERSION:
                raise VersionMismatch(f"{path}: version {version}, expected {TRIPS_VERSION}")
            payload = sum(d.itemsize for _, d in _COLUMNS) * n
            if size != _HEADER.size + payload:
                raise CorruptFile(f"{path}: size {size}, expected {_HEADER.size + payload}")
            if _crc32_file(f, _HEADER.size, payload) != crc_expect:
                raise CorruptFile(f"{path}: checksum mismatch")
        cols = {}
        offset = _HEADER.size
        for name, dtype in _COLUMNS:
            if n == 0:
                cols[name] = np.empty(0, dtype=dtype)  # mmap rejects size 0
            elif mmap:
                cols[name] = np.memmap(path, dtype=dtype, mode="r", offset=offset, shape=(n,))
            else:
                with open(path, "rb") as f:
                    f.seek(offset)
                    cols[name] = np.fromfile(f, dtype=dtype, count=n)
            offset += dtype.itemsize * int(n)
        return cls(**cols)


class TripStoreBuilder:
    """Accumulates validated records row by row into a TripStore."""

    def __init__(self) -> None:
        self._rows: list[tuple] = []

    def append(self, row_id: int, pickup_lat: float, pickup_lon: float,
               dropoff_lat: float, dropoff_lon: float,
               pickup_ts: int | None, dropoff_ts: int | None,
               fare_cents: int, distance_mmi: int) -> None:
        self._rows.append((
            row_id,
            round(pickup_lat * 1e6), round(pickup_lon * 1e6),
            round(dropoff_lat * 1e6), round(dropoff_lon * 1e6),
            MISSING_TS if pickup_ts is None else pickup_ts,
            MISSING_TS if dropoff_ts is None else dropoff_ts,
            fare_cents, distance_mmi,
        ))

    def __len__(self) -> int:
        return len(self._rows)

    def build(self) -> TripStore:
        if self._rows:
            cols = list(zip(*self._rows))
        else:
            cols = [[] for _ in _COLUMNS]
        return TripStore(**{
            name: np.asarray(col, dtype=dtype)
            for (name, dtype), col in zip(_COLUMNS, cols)
        })
