"""CSV ingestion: parse, validate, and filter raw trip rows.

The canonical logical schema is decoupled from any particular file layout
through a user-supplied column mapping, so sample files and synthetic
fixtures flow through the same path as the public 2013 trip release
(which splits geometry and fares into two files joined on medallion +
license + pickup time).

Validation applies the first failing rule and tags the reject with it:
``malformed-number`` (any unparseable field, including timestamps),
``zero-island`` (a coordinate pair exactly (0, 0)), ``out-of-bbox``,
``nonpositive-fare``, ``time-inverted``. The join path adds
``unmatched`` and ``duplicate-key``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import CabfareError
from .geo import BoundingBox, GeoPoint

#: Canonical column names understood by the parser. total_amount may be
#: replaced by the fare_amount + tip_amount pair; datetime and distance
#: columns are optional.
CANONICAL_COLUMNS = (
    "pickup_latitude", "pickup_longitude",
    "dropoff_latitude", "dropoff_longitude",
    "pickup_datetime", "dropoff_datetime",
    "total_amount", "trip_distance",
)

_REQUIRED = ("pickup_latitude", "pickup_longitude",
             "dropoff_latitude", "dropoff_longitude")


@dataclass(frozen=True)
class TripRecord:
    """One validated historical taxi journey."""

    trip_id: int
    pickup: GeoPoint
    dropoff: GeoPoint
    pickup_time: int | None     # epoch seconds, UTC
    dropoff_time: int | None
    total_fare_usd: float       # fare + surcharges + tip
    trip_distance_mi: float | None = None

    @property
    def fare_cents(self) -> int:
        return round(self.total_fare_usd * 100)


@dataclass(frozen=True)
class Reject:
    """A dropped row, tagged with the first validation rule it failed."""

    reason: str
    row_id: int = -1


@dataclass
class IngestReport:
    """Accounting for one ingest run: rows_read = rows_kept + sum(rejects)."""

    rows_read: int = 0
    rows_kept: int = 0
    rejects_by_reason: dict[str, int] = field(default_factory=dict)

    def reject(self, reason: str) -> None:
        self.rows_read += 1
        self.rejects_by_reason[reason] = self.rejects_by_reason.get(reason, 0) + 1

    def keep(self) -> None:
        self.rows_read += 1
        self.rows_kept += 1

    @property
    def rows_rejected(self) -> int:
        return sum(self.rejects_by_reason.values())

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rejects_by_reason": dict(sorted(self.rejects_by_reason.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class SchemaError(CabfareError):
    """Column mapping cannot be resolved against the input header."""


@dataclass(frozen=True)
class ColumnSchema:
    """Maps canonical column names to source columns (header names or positions).

    When ``total_amount`` is absent, the pair ``fare_amount`` + ``tip_amount``
    may be mapped instead; the two are summed.
    """

    mapping: dict[str, str | int]

    @classmethod
    def identity(cls) -> "ColumnSchema":
        """Source headers already use the canonical names."""
        names = CANONICAL_COLUMNS + ("fare_amount", "tip_amount")
        return cls({name: name for name in names})

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ColumnSchema":
        with open(path) as f:
            return cls(json.load(f))

    def resolve(self, header: Sequence[str] | None) -> dict[str, int]:
        """Turn the mapping into column positions against a header row.

        Optional columns whose mapped name is absent from the header are
        simply left unresolved; required columns raise SchemaError.
        """
        positions: dict[str, int] = {}
        for canonical, source in self.mapping.items():
            if isinstance(source, int):
                positions[canonical] = source
            else:
                if header is None:
                    raise SchemaError("name-based mapping requires a header row")
                try:
                    positions[canonical] = header.index(source)
                except ValueError:
                    if canonical in _REQUIRED:
                        raise SchemaError(
                            f"column {source!r} not in header") from None
        missing = [c for c in _REQUIRED if c not in positions]
        if missing:
            raise SchemaError(f"schema missing required columns: {missing}")
        if "total_amount" not in positions and not (
                "fare_amount" in positions and "tip_amount" in positions):
            raise SchemaError("schema needs total_amount, or fare_amount + tip_amount")
        return positions


def _parse_ts(text: str) -> int | None:
    text = text.strip()
    if not text:
        return None
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_row(row: Sequence[str], positions: dict[str, int],
              bbox: BoundingBox, row_id: int = 0) -> TripRecord | Reject:
    """Validate one CSV record; returns the record or the first failed rule."""

    def cell(name: str) -> str:
        i = positions[name]
        if i >= len(row):
            raise ValueError(f"row too short for column {name}")
        return row[i]

    try:
        plat = float(cell("pickup_latitude"))
        plon = float(cell("pickup_longitude"))
        dlat = float(cell("dropoff_latitude"))
        dlon = float(cell("dropoff_longitude"))
        if "total_amount" in positions:
            fare = float(cell("total_amount"))
        else:
            fare = float(cell("fare_amount")) + float(cell("tip_amount"))
        pickup_ts = _parse_ts(cell("pickup_datetime")) if "pickup_datetime" in positions else None
        dropoff_ts = _parse_ts(cell("dropoff_datetime")) if "dropoff_datetime" in positions else None
        distance = None
        if "trip_distance" in positions:
            text = cell("trip_distance").strip()
            distance = float(text) if text else None
    except (ValueError, IndexError):
        return Reject("malformed-number", row_id)

    if (plat == 0.0 and plon == 0.0) or (dlat == 0.0 and dlon == 0.0):
        return Reject("zero-island", row_id)
    if not (bbox.contains(plat, plon) and bbox.contains(dlat, dlon)):
        return Reject("out-of-bbox", row_id)
    if fare <= 0.0 or round(fare * 100) <= 0:  # must survive cent quantization
        return Reject("nonpositive-fare", row_id)
    if pickup_ts is not None and dropoff_ts is not None and pickup_ts > dropoff_ts:
        return Reject("time-inverted", row_id)
    if distance is not None and distance < 0:
        return Reject("malformed-number", row_id)

    return TripRecord(
        trip_id=row_id,
        pickup=GeoPoint(plat, plon),
        dropoff=GeoPoint(dlat, dlon),
        pickup_time=pickup_ts,
        dropoff_time=dropoff_ts,
        total_fare_usd=fare,
        trip_distance_mi=distance,
    )


def ingest_file(path: str | Path, schema: ColumnSchema,
                bbox: BoundingBox) -> tuple[Iterator[TripRecord], IngestReport]:
    """Stream validated records from a headered CSV file.

    The report is updated as the stream is consumed and is complete once
    the iterator is exhausted. An IO failure mid-file propagates, leaving
    the report with partial counts.
    """
    report = IngestReport()

    def records() -> Iterator[TripRecord]:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None:
                return
            positions = schema.resolve(header)
            for row_id, row in enumerate(reader):
                result = parse_row(row, positions, bbox, row_id)
                if isinstance(result, TripRecord):
                    report.keep()
                    yield result
                else:
                    report.reject(result.reason)

    return records(), report


def join_fare(trip_rows: Iterable[dict[str, str]],
              fare_rows: Iterable[dict[str, str]],
              key: Sequence[str],
              schema: ColumnSchema,
              bbox: BoundingBox) -> tuple[Iterator[TripRecord], IngestReport]:
    """Join geometry rows with fare rows on a composite key, then validate.

    The first fare row wins for each key; each surplus fare row sharing a
    key counts as one ``duplicate-key`` reject, and a trip row with no
    fare row counts as ``unmatched``. rows_read therefore totals trip rows
    plus surplus fare rows, keeping the report arithmetic exact.
    """
    report = IngestReport()

    def records() -> Iterator[TripRecord]:
        fares: dict[tuple, dict[str, str]] = {}
        for fare_row in fare_rows:
            k = tuple(fare_row[c] for c in key)
            if k in fares:
                report.reject("duplicate-key")
            else:
                fares[k] = fare_row
        for row_id, trip_row in enumerate(trip_rows):
            k = tuple(trip_row[c] for c in key)
            fare_row = fares.get(k)
            if fare_row is None:
                report.reject("unmatched")
                continue
            merged = dict(trip_row)
            merged.update(fare_row)
            header = list(merged.keys())
            positions = schema.resolve(header)
            values = list(merged.values())
            result = parse_row(values, positions, bbox, row_id)
            if isinstance(result, TripRecord):
                report.keep()
                yield result
            else:
                report.reject(result.reason)

    return records(), report


def join_fare_files(trip_path: str | Path, fare_path: str | Path,
                    key: str | Sequence[str], schema: ColumnSchema,
                    bbox: BoundingBox) -> tuple[Iterator[TripRecord], IngestReport]:
    """join_fare over two headered CSV files; key may be comma-separated."""
    if isinstance(key, str):
        key = [c.strip() for c in key.split(",")]

    def rows(path):
        with open(path, newline="") as f:
            yield from csv.DictReader(f)

    return join_fare(rows(trip_path), rows(fare_path), key, schema, bbox)


def records_to_store(records: Iterable[TripRecord]):
    """Materialize a record stream into a columnar TripStore."""
    from .store import MISSING_DISTANCE, TripStoreBuilder

    builder = TripStoreBuilder()
    for r in records:
        builder.append(
            r.trip_id, r.pickup.lat, r.pickup.lon, r.dropoff.lat, r.dropoff.lon,
            r.pickup_time, r.dropoff_time, r.fare_cents,
            MISSING_DISTANCE if r.trip_distance_mi is None else round(r.trip_distance_mi * 1000),
        )
    return builder.build()
