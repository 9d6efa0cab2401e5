"""Pluggable ride-hail price sources.

Two implementations of the same one-method interface: an HTTP client for
a live quote endpoint, and an offline rate-card emulator so the whole
engine runs (and is tested) without network access. Both return a
(min, max) dollar estimate range.

The emulator's default numbers in shipped configs are ILLUSTRATIVE
stand-ins, not observed tariffs; runs that matter should set an explicit
rate card.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import InvalidRange, MalformedResponse, ProviderUnavailable
from .geo import METERS_PER_MILE, GeoPoint, haversine, haversine_arrays


@dataclass(frozen=True)
class PriceRange:
    """External estimate envelope: 0 < min_usd <= max_usd."""

    min_usd: float
    max_usd: float
    currency: str = "USD"

    def __post_init__(self) -> None:
        if not (0.0 < self.min_usd <= self.max_usd):
            raise InvalidRange(f"bad price range ({self.min_usd}, {self.max_usd})")

    @property
    def mean_usd(self) -> float:
        return (self.min_usd + self.max_usd) / 2.0


@dataclass(frozen=True)
class RateCard:
    """Fare formula parameters for the offline emulator.

    point = max(min_fare, base + per_mile * d + per_min * t) + booking_fee
    with t derived from straight-line distance at a flat average speed,
    then spread into (point * (1 - s), point * (1 + s)).
    """

    base_usd: float
    per_mile_usd: float
    per_min_usd: float
    min_fare_usd: float
    booking_fee_usd: float
    avg_speed_mph: float
    range_spread: float = 0.0

    def __post_init__(self) -> None:
        for name in ("base_usd", "per_mile_usd", "per_min_usd",
                     "min_fare_usd", "booking_fee_usd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.avg_speed_mph <= 0:
            raise ValueError("avg_speed_mph must be > 0")
        if not (0.0 <= self.range_spread < 1.0):
            raise ValueError("range_spread must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "base_usd": self.base_usd, "per_mile_usd": self.per_mile_usd,
            "per_min_usd": self.per_min_usd, "min_fare_usd": self.min_fare_usd,
            "booking_fee_usd": self.booking_fee_usd,
            "avg_speed_mph": self.avg_speed_mph,
            "range_spread": self.range_spread,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RateCard":
        return cls(**{k: float(v) for k, v in d.items()})


class PricingProvider(Protocol):
    def estimate(self, origin: GeoPoint, dest: GeoPoint) -> PriceRange: ...


def _round_cents(x: float) -> float:
    return round(x * 100.0) / 100.0


def point_fare(card: RateCard, distance_mi: float) -> float:
    """Unrounded point estimate for a straight-line distance."""
    minutes = distance_mi / card.avg_speed_mph * 60.0
    metered = card.base_usd + card.per_mile_usd * distance_mi + card.per_min_usd * minutes
    return max(card.min_fare_usd, metered) + card.booking_fee_usd


def emulate_range(card: RateCard, origin: GeoPoint, dest: GeoPoint) -> PriceRange:
    """Price range the emulator quotes for a trip, cent-rounded both ends."""
    d = haversine(origin, dest) / METERS_PER_MILE
    point = point_fare(card, d)
    return PriceRange(_round_cents(point * (1.0 - card.range_spread)),
                      _round_cents(point * (1.0 + card.range_spread)))


class RateCardEmulator:
    """Offline provider computing estimates from a RateCard."""

    def __init__(self, card: RateCard):
        self.card = card

    def estimate(self, origin: GeoPoint, dest: GeoPoint) -> PriceRange:
        return emulate_range(self.card, origin, dest)

    def estimate_arrays(self, olat, olon, dlat, dlon) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (min, max) columns; same arithmetic as estimate()."""
        card = self.card
        d = haversine_arrays(olat, olon, dlat, dlon) / METERS_PER_MILE
        minutes = d / card.avg_speed_mph * 60.0
        metered = card.base_usd + card.per_mile_usd * d + card.per_min_usd * minutes
        point = np.maximum(card.min_fare_usd, metered) + card.booking_fee_usd
        lo = np.round(point * (1.0 - card.range_spread) * 100.0) / 100.0
        hi = np.round(point * (1.0 + card.range_spread) * 100.0) / 100.0
        return lo, hi


class HttpProvider:
    """Client for a live quote endpoint.

    Sends GET {url}?start_lat&start_lon&end_lat&end_lon with an optional
    bearer token and expects JSON {low_estimate, high_estimate,
    currency_code}. In-flight requests are bounded by a semaphore.
    """

    def __init__(self, url: str, token_env_var: str | None = None,
                 timeout_ms: int = 2000, max_inflight: int = 8, client=None):
        import threading

        import httpx

        self.url = url
        self.timeout_s = timeout_ms / 1000.0
        headers = {}
        token = os.environ.get(token_env_var) if token_env_var else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = client or httpx.Client(headers=headers,
                                              timeout=self.timeout_s)
        self._gate = threading.Semaphore(max_inflight)

    def estimate(self, origin: GeoPoint, dest: GeoPoint) -> PriceRange:
        import httpx

        params = {"start_lat": origin.lat, "start_lon": origin.lon,
                  "end_lat": dest.lat, "end_lon": dest.lon}
        with self._gate:
            try:
                resp = self._client.get(self.url, params=params)
            except httpx.HTTPError as e:
                raise ProviderUnavailable(f"provider request failed: {e}") from e
        if resp.status_code >= 500:
            raise ProviderUnavailable(f"provider returned {resp.status_code}")
        if resp.status_code != 200:
            raise MalformedResponse(f"provider returned {resp.status_code}")
        try:
            body = resp.json()
            low = float(body["low_estimate"])
            high = float(body["high_estimate"])
        except (ValueError, KeyError, TypeError) as e:
            raise MalformedResponse(f"unparseable provider body: {e}") from e
        if not (math.isfinite(low) and math.isfinite(high)):
            raise MalformedResponse("non-finite estimate")
        return PriceRange(low, high, str(body.get("currency_code", "USD")))

    def close(self) -> None:
        self._client.close()


def make_provider(config: dict) -> PricingProvider:
    """Build a provider from its config block ({kind: http|emulator, ...})."""
    kind = config.get("kind", "emulator")
    if kind == "emulator":
        return RateCardEmulator(RateCard.from_dict(config["rate_card"]))
    if kind == "http":
        return HttpProvider(
            url=config["url"],
            token_env_var=config.get("token_env_var"),
            timeout_ms=int(config.get("timeout_ms", 2000)),
            max_inflight=int(config.get("max_inflight", 8)),
        )
    raise ValueError(f"unknown provider kind {kind!r}")
