"""Batch statistics over an ingested corpus.

Everything here is deterministic under a fixed sampling seed, and money
math happens on integer cents: medians use the lower median for even
counts, and a ride-hail pair price is the range mean floored to a whole
cent when the range lands on a half cent.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import EmptyInput
from .geo import METERS_PER_MILE, CellId, GeoPoint, MeshSpec, cells_of_arrays, haversine_arrays
from .pricing import PricingProvider
from .store import MISSING_DISTANCE, TripStore

VERDICT_BLACK = "BLACK"
VERDICT_YELLOW = "YELLOW"
VERDICT_NODATA = "NODATA"


@dataclass
class Histogram:
    """Counts over ascending bin edges; out-of-range values land in the end bins."""

    bin_edges: np.ndarray
    counts: np.ndarray
    total: int

    @classmethod
    def from_values(cls, values: np.ndarray, bin_edges: np.ndarray) -> "Histogram":
        edges = np.asarray(bin_edges, dtype=np.float64)
        if len(edges) < 2 or not np.all(np.diff(edges) > 0):
            raise ValueError("bin_edges must be strictly ascending, length >= 2")
        values = np.asarray(values, dtype=np.float64)
        # Right-open bins [e_i, e_{i+1}); clip puts under/overflow in bins 0 / -1.
        idx = np.clip(np.searchsorted(edges, values, side="right") - 1,
                      0, len(edges) - 2)
        counts = np.bincount(idx, minlength=len(edges) - 1).astype(np.int64)
        return cls(bin_edges=edges, counts=counts, total=int(len(values)))


@dataclass
class MedianCurve:
    """Per-yellow-price-bin median ride-hail price (NaN below min support)."""

    x_bins: np.ndarray        # bin edges, USD
    median_uber: np.ndarray   # per-bin, USD; NaN where support < minimum
    support: np.ndarray


@dataclass
class RasterCell:
    uber_cheaper_count: int
    yellow_cheaper_count: int
    verdict: str


@dataclass
class MajorityRaster:
    """Per-cell verdict: BLACK needs a strict ride-hail majority."""

    spec: MeshSpec
    cells: dict[CellId, RasterCell]

    def verdict(self, cell: CellId) -> str:
        entry = self.cells.get(cell)
        return entry.verdict if entry else VERDICT_NODATA


@dataclass
class PairSet:
    """Columnar per-trip price pairs produced by run_experiment."""

    ordinal: np.ndarray         # u64, trip ordinal in the source store
    yellow_cents: np.ndarray    # i64
    uber_cents: np.ndarray      # i64
    pickup_lat_e6: np.ndarray   # i32
    pickup_lon_e6: np.ndarray   # i32

    def __len__(self) -> int:
        return len(self.ordinal)

    @property
    def yellow_usd(self) -> np.ndarray:
        return self.yellow_cents / 100.0

    @property
    def uber_usd(self) -> np.ndarray:
        return self.uber_cents / 100.0


@dataclass
class RunReport:
    trips_total: int
    trips_sampled: int
    pairs: int
    provider_failures: int
    seed: int
    sample: float

    def to_dict(self) -> dict:
        return {
            "trips_total": self.trips_total, "trips_sampled": self.trips_sampled,
            "pairs": self.pairs, "provider_failures": self.provider_failures,
            "seed": self.seed, "sample": self.sample,
        }


def _range_mean_cents(lo_usd, hi_usd):
    """Mean of a cent-quantized range, as integer cents (half cents floor)."""
    lo = np.round(np.asarray(lo_usd, dtype=np.float64) * 100.0).astype(np.int64)
    hi = np.round(np.asarray(hi_usd, dtype=np.float64) * 100.0).astype(np.int64)
    return (lo + hi) // 2


def run_experiment(store: TripStore, provider: PricingProvider,
                   sample: float = 1.0, seed: int = 0,
                   threads: int = 1) -> tuple[PairSet, RunReport]:
    """Price every sampled trip with both services.

    Yellow is the recorded total (tip included); the ride-hail side is the
    mean of the provider range for the same endpoints. Sampling is a
    seeded Bernoulli thinning, so a fixed seed reproduces the subset
    exactly. Per-trip provider failures are counted and skipped.
    """
    if not (0.0 < sample <= 1.0):
        raise ValueError("sample must be in (0, 1]")
    n = len(store)
    if sample < 1.0:
        rng = np.random.default_rng(seed)
        picked = np.nonzero(rng.random(n) < sample)[0]
    else:
        picked = np.arange(n)

    olat = store.pickup_lat_e6[picked] * 1e-6
    olon = store.pickup_lon_e6[picked] * 1e-6
    dlat = store.dropoff_lat_e6[picked] * 1e-6
    dlon = store.dropoff_lon_e6[picked] * 1e-6

    failures = 0
    if hasattr(provider, "estimate_arrays"):
        lo, hi = _map_chunks(provider.estimate_arrays, olat, olon, dlat, dlon,
                             threads=threads)
        uber_cents = _range_mean_cents(lo, hi)
        ok = np.ones(len(picked), dtype=bool)
    else:
        uber_cents = np.zeros(len(picked), dtype=np.int64)
        ok = np.zeros(len(picked), dtype=bool)
        from .errors import CabfareError
        for i in range(len(picked)):
            try:
                r = provider.estimate(GeoPoint(olat[i], olon[i]),
                                      GeoPoint(dlat[i], dlon[i]))
            except CabfareError:
                failures += 1
                continue
            uber_cents[i] = _range_mean_cents(r.min_usd, r.max_usd)
            ok[i] = True

    kept = picked[ok]
    pairs = PairSet(
        ordinal=kept.astype(np.uint64),
        yellow_cents=store.fare_cents[kept].astype(np.int64),
        uber_cents=uber_cents[ok],
        pickup_lat_e6=store.pickup_lat_e6[kept],
        pickup_lon_e6=store.pickup_lon_e6[kept],
    )
    report = RunReport(trips_total=n, trips_sampled=int(len(picked)),
                       pairs=len(pairs), provider_failures=failures,
                       seed=seed, sample=sample)
    return pairs, report


def _map_chunks(fn: Callable, olat, olon, dlat, dlon,
                threads: int = 1, chunk: int = 65536):
    """Apply a vectorized estimator over chunks with an ordered reduce."""
    n = len(olat)
    spans = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    if threads <= 1 or len(spans) <= 1:
        results = [fn(olat[a:b], olon[a:b], dlat[a:b], dlon[a:b]) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(fn, olat[a:b], olon[a:b], dlat[a:b], dlon[a:b])
                       for a, b in spans]
            results = [f.result() for f in futures]
    if not results:
        return np.empty(0), np.empty(0)
    lo = np.concatenate([r[0] for r in results])
    hi = np.concatenate([r[1] for r in results])
    return lo, hi


def lower_median_cents(values: np.ndarray) -> int:
    """Median on integer cents; even counts take the lower middle."""
    values = np.asarray(values)
    if len(values) == 0:
        raise EmptyInput("median of nothing")
    return int(np.partition(values, (len(values) - 1) // 2)[(len(values) - 1) // 2])


def default_price_edges() -> np.ndarray:
    return np.arange(0.0, 101.0, 1.0)


def price_distributions(pairs: PairSet, bin_edges: np.ndarray | None = None
                        ) -> tuple[Histogram, Histogram, float]:
    """Histograms of both services' prices plus the median gap (uber - yellow)."""
    if len(pairs) == 0:
        raise EmptyInput("no price pairs")
    edges = default_price_edges() if bin_edges is None else np.asarray(bin_edges)
    hist_yellow = Histogram.from_values(pairs.yellow_usd, edges)
    hist_uber = Histogram.from_values(pairs.uber_usd, edges)
    gap_cents = lower_median_cents(pairs.uber_cents) - lower_median_cents(pairs.yellow_cents)
    return hist_yellow, hist_uber, gap_cents / 100.0


def median_curve(pairs: PairSet, bin_width_usd: float = 1.0,
                 min_support: int = 1) -> tuple[MedianCurve, float | None]:
    """Median ride-hail price per yellow-price bin, plus the crossover point.

    The crossover is the lower edge of the first bin whose median sits at
    or below the bin midpoint and stays there for every supported bin
    after it; None when that never happens.
    """
    if len(pairs) == 0:
        raise EmptyInput("no price pairs")
    if bin_width_usd <= 0:
        raise ValueError("bin_width_usd must be positive")
    width_cents = int(round(bin_width_usd * 100))
    ybin = pairs.yellow_cents // width_cents
    n_bins = int(ybin.max()) + 1
    edges = np.arange(n_bins + 1, dtype=np.float64) * (width_cents / 100.0)

    order = np.lexsort((pairs.uber_cents, ybin))
    sorted_bins = ybin[order]
    sorted_uber = pairs.uber_cents[order]
    support = np.bincount(sorted_bins, minlength=n_bins).astype(np.int64)
    starts = np.concatenate(([0], np.cumsum(support)))

    medians = np.full(n_bins, np.nan)
    for b in range(n_bins):
        count = support[b]
        if count >= max(1, min_support):
            medians[b] = sorted_uber[starts[b] + (count - 1) // 2] / 100.0

    curve = MedianCurve(x_bins=edges, median_uber=medians, support=support)

    crossover: float | None = None
    midpoints = (edges[:-1] + edges[1:]) / 2.0
    supported = ~np.isnan(medians)
    ok_from_here_on = True
    for b in range(n_bins - 1, -1, -1):
        if not supported[b]:
            continue
        if medians[b] > midpoints[b]:
            ok_from_here_on = False
        elif ok_from_here_on:
            crossover = float(edges[b])
    return curve, crossover


def distance_distribution(store: TripStore, bin_edges: np.ndarray | None = None
                          ) -> tuple[Histogram, float]:
    """Straight-line pickup->dropoff distances in miles, with the mean."""
    if len(store) == 0:
        raise EmptyInput("no trips")
    miles = haversine_arrays(store.pickup_lat, store.pickup_lon,
                             store.dropoff_lat, store.dropoff_lon) / METERS_PER_MILE
    edges = np.arange(0.0, 30.25, 0.25) if bin_edges is None else np.asarray(bin_edges)
    return Histogram.from_values(miles, edges), float(miles.sum() / len(miles))


def meter_distance_mean(store: TripStore) -> float | None:
    """Mean of the meter-reported distances, when any are present."""
    present = store.distance_mmi != MISSING_DISTANCE
    if not present.any():
        return None
    return float(store.distance_mmi[present].mean() / 1000.0)


def majority_raster(pairs: PairSet, raster_spec: MeshSpec) -> MajorityRaster:
    """Per-cell cheaper-service tally over the pairs' pickup points.

    A pair votes in its pickup cell; exact price ties abstain. BLACK
    requires strictly more ride-hail-cheaper votes; an equal nonzero
    split stays YELLOW; a cell whose votes all abstained is NODATA.
    """
    if len(pairs) == 0:
        raise EmptyInput("no price pairs")
    ix, iy = cells_of_arrays(pairs.pickup_lat_e6 * 1e-6,
                             pairs.pickup_lon_e6 * 1e-6, raster_spec)
    keys = iy * raster_spec.nx + ix
    uber_votes = pairs.uber_cents < pairs.yellow_cents
    yellow_votes = pairs.uber_cents > pairs.yellow_cents

    uniq, inverse = np.unique(keys, return_inverse=True)
    uber_counts = np.bincount(inverse, weights=uber_votes, minlength=len(uniq)).astype(np.int64)
    yellow_counts = np.bincount(inverse, weights=yellow_votes, minlength=len(uniq)).astype(np.int64)

    cells: dict[CellId, RasterCell] = {}
    nx = raster_spec.nx
    for key, u, y in zip(uniq.tolist(), uber_counts.tolist(), yellow_counts.tolist()):
        if u > y:
            verdict = VERDICT_BLACK
        elif u == 0 and y == 0:
            verdict = VERDICT_NODATA
        else:
            verdict = VERDICT_YELLOW
        cells[CellId(key % nx, key // nx)] = RasterCell(u, y, verdict)
    return MajorityRaster(spec=raster_spec, cells=cells)


def export_trace_points(store: TripStore, sample: float, seed: int = 0):
    """Sampled journey endpoints: (lat, lon, kind) rows, pickup then dropoff."""
    if not (0.0 < sample <= 1.0):
        raise ValueError("sample must be in (0, 1]")
    n = len(store)
    if sample < 1.0:
        rng = np.random.default_rng(seed)
        picked = np.nonzero(rng.random(n) < sample)[0]
    else:
        picked = np.arange(n)
    for i in picked:
        yield (store.pickup_lat_e6[i] * 1e-6, store.pickup_lon_e6[i] * 1e-6, "pickup")
        yield (store.dropoff_lat_e6[i] * 1e-6, store.dropoff_lon_e6[i] * 1e-6, "dropoff")


@dataclass
class StatsConfig:
    """Knobs for the full batch run backing the figure exports."""

    sample: float = 1.0
    seed: int = 0
    bin_width_usd: float = 1.0
    min_support: int = 1
    raster_cell_size: float = 500.0
    trace_sample: float = 0.01
    threads: int = 1
    price_edges: np.ndarray = field(default_factory=default_price_edges)
    distance_edges: np.ndarray = field(
        default_factory=lambda: np.arange(0.0, 30.25, 0.25))


def write_stats_outputs(store: TripStore, provider: PricingProvider,
                        mesh_spec: MeshSpec, out_dir: str | Path,
                        cfg: StatsConfig | None = None) -> dict:
    """Run the full experiment and write the figure-backing files.

    Produces distributions.csv, median_curve.csv, distances.csv,
    raster.csv, trace_points.csv, and summary.json in out_dir; returns
    the summary dict. Output bytes are a pure function of the corpus,
    provider, and config.
    """
    cfg = cfg or StatsConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    pairs, report = run_experiment(store, provider, sample=cfg.sample,
                                   seed=cfg.seed, threads=cfg.threads)
    hist_y, hist_u, median_gap = price_distributions(pairs, cfg.price_edges)
    curve, crossover = median_curve(pairs, cfg.bin_width_usd, cfg.min_support)
    dist_hist, mean_mi = distance_distribution(store, cfg.distance_edges)
    raster_spec = MeshSpec(bbox=mesh_spec.bbox, cell_size=cfg.raster_cell_size,
                           earth_radius=mesh_spec.earth_radius,
                           ref_cos=mesh_spec.ref_cos)
    raster = majority_raster(pairs, raster_spec)

    with open(out / "distributions.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin_lo_usd", "bin_hi_usd", "yellow_count", "uber_count"])
        for i in range(len(hist_y.counts)):
            w.writerow([f"{hist_y.bin_edges[i]:.2f}", f"{hist_y.bin_edges[i + 1]:.2f}",
                        int(hist_y.counts[i]), int(hist_u.counts[i])])

    with open(out / "median_curve.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin_lo_usd", "bin_hi_usd", "median_uber_usd", "support"])
        for i in range(len(curve.support)):
            m = curve.median_uber[i]
            w.writerow([f"{curve.x_bins[i]:.2f}", f"{curve.x_bins[i + 1]:.2f}",
                        "" if math.isnan(m) else f"{m:.2f}", int(curve.support[i])])

    with open(out / "distances.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin_lo_mi", "bin_hi_mi", "count"])
        for i in range(len(dist_hist.counts)):
            w.writerow([f"{dist_hist.bin_edges[i]:.2f}",
                        f"{dist_hist.bin_edges[i + 1]:.2f}",
                        int(dist_hist.counts[i])])

    with open(out / "raster.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["ix", "iy", "uber_cheaper", "yellow_cheaper", "verdict"])
        for cell in sorted(raster.cells):
            entry = raster.cells[cell]
            w.writerow([cell.ix, cell.iy, entry.uber_cheaper_count,
                        entry.yellow_cheaper_count, entry.verdict])

    with open(out / "trace_points.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["lat", "lon", "kind"])
        for lat, lon, kind in export_trace_points(store, cfg.trace_sample, cfg.seed):
            w.writerow([f"{lat:.6f}", f"{lon:.6f}", kind])

    summary = {
        "median_gap_usd": median_gap,
        "crossover_usd": crossover,
        "mean_distance_mi": round(mean_mi, 6),
        "meter_mean_distance_mi": (
            None if meter_distance_mean(store) is None
            else round(meter_distance_mean(store), 6)),
        "counts": report.to_dict(),
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary
