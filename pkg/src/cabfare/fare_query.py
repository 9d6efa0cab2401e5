"""Quote derivation: match a desired journey to history and price it.

A yellow quote is the recorded fare of one comparable historical trip:
pickup in the expanding neighborhood of the desired origin, dropoff
closest to the desired destination. The fare is passed through
unadjusted; dest_gap_m is surfaced so callers can judge how comparable
the match really is. The ride-hail quote is the mean of the provider's
(min, max) range.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geo import GeoPoint, haversine_arrays
from .mesh_index import MeshIndex
from .pricing import PricingProvider

DEFAULT_MAX_RING = 10

#: Quotes closer than half a cent count as a tie.
TIE_BAND_USD = 0.005


class Service(str, Enum):
    YELLOW = "YELLOW"
    UBER_X = "UBER_X"


class Basis(str, Enum):
    HISTORICAL_TRIP = "HISTORICAL_TRIP"
    RANGE_MEAN = "RANGE_MEAN"


class Cheaper(str, Enum):
    YELLOW = "YELLOW"
    UBER = "UBER"
    TIE = "TIE"


@dataclass(frozen=True)
class FareQuote:
    """One service's price estimate for a desired journey."""

    service: Service
    amount_usd: float
    basis: Basis
    matched_trip: int | None = None
    origin_ring: int | None = None
    dest_gap_m: float | None = None

    def __post_init__(self) -> None:
        if self.amount_usd <= 0:
            raise ValueError("quote amount must be positive")
        historical = self.basis is Basis.HISTORICAL_TRIP
        for field in (self.matched_trip, self.origin_ring, self.dest_gap_m):
            if (field is not None) != historical:
                raise ValueError("matched-trip fields present iff basis is HISTORICAL_TRIP")


@dataclass(frozen=True)
class ComparisonResult:
    """Paired verdict; delta_usd is uber minus yellow."""

    yellow: FareQuote
    uber: FareQuote
    cheaper: Cheaper
    delta_usd: float


def find_comparable_trip(index: MeshIndex, origin: GeoPoint, dest: GeoPoint,
                         max_ring: int = DEFAULT_MAX_RING) -> tuple[int, int, float]:
    """(trip ordinal, ring_used, dest_gap_m) of the best historical match.

    Among trips picked up within the expanding origin neighborhood, picks
    the one whose dropoff is closest (haversine) to the desired
    destination; exact gap ties go to the lowest ordinal.
    """
    ring_used, cands = index.trips_near(origin, max_ring)
    store = index.store
    # Slice the integer columns first; scaling whole-column views per query
    # would cost O(corpus) instead of O(candidates).
    gaps = haversine_arrays(store.dropoff_lat_e6[cands] * 1e-6,
                            store.dropoff_lon_e6[cands] * 1e-6,
                            dest.lat, dest.lon)
    best = int(np.argmin(gaps))  # candidates ascend by ordinal, argmin takes first
    return int(cands[best]), ring_used, float(gaps[best])


def yellow_quote(index: MeshIndex, origin: GeoPoint, dest: GeoPoint,
                 max_ring: int = DEFAULT_MAX_RING) -> FareQuote:
    """The matched trip's recorded total fare (tip included), as paid."""
    ordinal, ring_used, gap = find_comparable_trip(index, origin, dest, max_ring)
    return FareQuote(
        service=Service.YELLOW,
        amount_usd=int(index.store.fare_cents[ordinal]) / 100.0,
        basis=Basis.HISTORICAL_TRIP,
        matched_trip=ordinal,
        origin_ring=ring_used,
        dest_gap_m=gap,
    )


def uber_quote(provider: PricingProvider, origin: GeoPoint, dest: GeoPoint) -> FareQuote:
    """Mean of the provider's estimate range."""
    r = provider.estimate(origin, dest)
    return FareQuote(service=Service.UBER_X, amount_usd=r.mean_usd,
                     basis=Basis.RANGE_MEAN)


def compare_quotes(yellow: FareQuote, uber: FareQuote) -> ComparisonResult:
    delta = uber.amount_usd - yellow.amount_usd
    if abs(delta) < TIE_BAND_USD:
        verdict = Cheaper.TIE
    elif delta > 0:
        verdict = Cheaper.YELLOW
    else:
        verdict = Cheaper.UBER
    return ComparisonResult(yellow=yellow, uber=uber, cheaper=verdict,
                            delta_usd=delta)


def compare(index: MeshIndex, provider: PricingProvider, origin: GeoPoint,
            dest: GeoPoint, max_ring: int = DEFAULT_MAX_RING) -> ComparisonResult:
    """Both quotes for one desired journey, with the cheaper-side verdict."""
    return compare_quotes(yellow_quote(index, origin, dest, max_ring),
                          uber_quote(provider, origin, dest))
