"""Synthetic trip corpora for tests, benchmarks, and demos.

Everything here is driven by a seeded generator, so the same arguments
always produce the same store (and, via write_trips_csv, the same
bytes on disk).
"""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .geo import NYC_BBOX, BoundingBox, haversine_arrays
from .store import MISSING_DISTANCE, MISSING_TS, TripStore

#: Degrees trimmed off each bbox edge so quantization never lands a
#: point on the half-open NE boundary.
EDGE_MARGIN_DEG = 1e-4


def make_trips(n: int, seed: int = 0, bbox: BoundingBox = NYC_BBOX,
               base_usd: float = 2.5, per_mile_usd: float = 2.5,
               fare_noise_usd: float = 1.0,
               start_epoch: int = 1357016400) -> TripStore:
    """Uniform random trips over `bbox` with distance-correlated fares.

    start_epoch defaults to 2013-01-01 05:00 UTC (midnight Eastern).
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    lat_lo = bbox.south_west.lat + EDGE_MARGIN_DEG
    lat_hi = bbox.north_east.lat - EDGE_MARGIN_DEG
    lon_lo = bbox.south_west.lon + EDGE_MARGIN_DEG
    lon_hi = bbox.north_east.lon - EDGE_MARGIN_DEG

    plat = rng.uniform(lat_lo, lat_hi, n)
    plon = rng.uniform(lon_lo, lon_hi, n)
    dlat = rng.uniform(lat_lo, lat_hi, n)
    dlon = rng.uniform(lon_lo, lon_hi, n)

    miles = haversine_arrays(plat, plon, dlat, dlon) / 1609.344
    fare = base_usd + per_mile_usd * miles + rng.uniform(0.0, fare_noise_usd, n)
    fare_cents = np.maximum(np.round(fare * 100.0).astype(np.int64), 250)

    pickup_ts = start_epoch + rng.integers(0, 365 * 86400, n, dtype=np.int64)
    # 2 min flagfall plus ~12 mph progress, jittered.
    duration = (120 + miles / 12.0 * 3600.0 * rng.uniform(0.8, 1.3, n)).astype(np.int64)
    dropoff_ts = pickup_ts + duration

    meter_mmi = np.round(miles * rng.uniform(1.0, 1.35, n) * 1000.0).astype(np.int64)

    return TripStore(
        row_id=np.arange(n, dtype=np.uint64),
        pickup_lat_e6=np.round(plat * 1e6).astype(np.int64),
        pickup_lon_e6=np.round(plon * 1e6).astype(np.int64),
        dropoff_lat_e6=np.round(dlat * 1e6).astype(np.int64),
        dropoff_lon_e6=np.round(dlon * 1e6).astype(np.int64),
        pickup_ts=pickup_ts,
        dropoff_ts=dropoff_ts,
        fare_cents=fare_cents,
        distance_mmi=meter_mmi,
    )


def _iso(ts: int) -> str:
    if ts == MISSING_TS:
        return ""
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%d %H:%M:%S")


def write_trips_csv(store: TripStore, path: str | Path) -> None:
    """Dump a store as an ingestable CSV with the canonical headers."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["pickup_datetime", "dropoff_datetime", "pickup_latitude",
                    "pickup_longitude", "dropoff_latitude", "dropoff_longitude",
                    "total_amount", "trip_distance"])
        for i in range(len(store)):
            dist = int(store.distance_mmi[i])
            w.writerow([
                _iso(int(store.pickup_ts[i])),
                _iso(int(store.dropoff_ts[i])),
                "%.6f" % (int(store.pickup_lat_e6[i]) * 1e-6),
                "%.6f" % (int(store.pickup_lon_e6[i]) * 1e-6),
                "%.6f" % (int(store.dropoff_lat_e6[i]) * 1e-6),
                "%.6f" % (int(store.dropoff_lon_e6[i]) * 1e-6),
                "%.2f" % (int(store.fare_cents[i]) / 100.0),
                "" if dist == MISSING_DISTANCE else "%.3f" % (dist / 1000.0),
            ])
